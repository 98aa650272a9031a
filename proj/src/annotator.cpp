#include "tapaudit/annotator.hpp"

#include <algorithm>
#include <cmath>

#include "tapaudit/errors.hpp"

namespace tapaudit {

Rgb sr_to_color(double sr) {
  if (!(sr >= 0.0 && sr <= 1.0)) throw DomainError("success rate outside [0, 1]");
  const double hue = 120.0 * sr;
  auto channel = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * v)); };
  if (hue <= 60.0) return {255, channel(hue / 60.0), 0};
  return {channel((120.0 - hue) / 60.0), 255, 0};
}

void OverlayStyle::validate() const {
  if (stroke_width_px < 1) throw ValidationError("stroke_width_px must be >= 1");
  if (!color_map) throw ValidationError("color_map must be set");
  if (label_scale < 0) throw ValidationError("label_scale must be >= 0");
}

OverlayStyle style_for(const AnalysisReport& report) {
  OverlayStyle style;
  style.label_enabled = report.options.list_success_rates;
  return style;
}

namespace {

struct DeviceRect {
  int x0, y0, x1, y1;
};

}  // namespace

AnnotatedImage render_overlay(const Image& screenshot, const AnalysisReport& report,
                              const OverlayStyle& style) {
  style.validate();
  AnnotatedImage out{screenshot, {}};
  const double dpr = report.device.device_pixel_ratio;

  std::vector<const TappableElement*> order;
  for (const auto& e : report.elements) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->paint_rank < b->paint_rank;
  });

  std::vector<std::pair<const TappableElement*, DeviceRect>> drawn;
  for (const auto* e : order) {
    const auto& r = e->page_rect;
    DeviceRect d{static_cast<int>(std::lround(r.x * dpr)), static_cast<int>(std::lround(r.y * dpr)),
                 static_cast<int>(std::lround(r.right() * dpr)),
                 static_cast<int>(std::lround(r.bottom() * dpr))};
    d.x0 = std::max(d.x0, 0);
    d.y0 = std::max(d.y0, 0);
    d.x1 = std::min(d.x1, out.image.width());
    d.y1 = std::min(d.y1, out.image.height());
    if (d.x1 <= d.x0 || d.y1 <= d.y0) {
      out.warnings.push_back("element " + e->element_id + " lies outside the screenshot; skipped");
      continue;
    }
    const Rgb color = style.color_map(e->success_rate.value());
    const int w = d.x1 - d.x0;
    const int h = d.y1 - d.y0;
    const int sw = std::min(style.stroke_width_px, std::max(1, std::min(w, h) / 2));
    out.image.fill_rect(d.x0, d.y0, w, sw, color);
    out.image.fill_rect(d.x0, d.y1 - sw, w, sw, color);
    out.image.fill_rect(d.x0, d.y0, sw, h, color);
    out.image.fill_rect(d.x1 - sw, d.y0, sw, h, color);
    drawn.emplace_back(e, d);
  }

  if (style.label_enabled) {
    const int scale = style.label_scale > 0 ? style.label_scale
                                            : std::max(1, static_cast<int>(std::lround(dpr)));
    for (const auto& [e, d] : drawn) {
      const std::string text = format_percent(e->success_rate);
      const int pad = scale;
      const int x = d.x0 + style.stroke_width_px;
      const int y = d.y0 + style.stroke_width_px;
      out.image.fill_rect(x, y, text_width(text, scale) + 2 * pad, text_height(scale) + 2 * pad,
                          {255, 255, 255});
      draw_text(out.image, x + pad, y + pad, text, scale, {0, 0, 0});
    }
  }
  return out;
}

}  // namespace tapaudit
