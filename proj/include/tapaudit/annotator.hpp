#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tapaudit/image.hpp"
#include "tapaudit/report.hpp"

namespace tapaudit {

// Linear hue ramp: 0 -> red (0 deg), 0.5 -> yellow (60 deg), 1 -> green (120 deg),
// full saturation and value. Throws DomainError outside [0, 1].
Rgb sr_to_color(double sr);

struct OverlayStyle {
  int stroke_width_px = 3;  // physical px
  std::function<Rgb(double)> color_map = sr_to_color;
  bool label_enabled = false;
  int label_scale = 0;  // glyph scale; 0 picks round(device_pixel_ratio)

  void validate() const;
};

// Style matching a run's options: labels iff list_success_rates.
OverlayStyle style_for(const AnalysisReport& report);

struct AnnotatedImage {
  Image image;
  std::vector<std::string> warnings;  // elements that fell outside the image
};

// Draws one rectangle per element at page_rect * device_pixel_ratio, bottom
// element first, then the "12.34%" labels when enabled. Output dimensions
// equal the screenshot's.
AnnotatedImage render_overlay(const Image& screenshot, const AnalysisReport& report,
                              const OverlayStyle& style);

}  // namespace tapaudit
