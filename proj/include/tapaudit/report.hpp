#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tapaudit/device_registry.hpp"
#include "tapaudit/snapshot.hpp"
#include "tapaudit/tap_model.hpp"

namespace tapaudit {

inline constexpr const char* kReportSchema = "tapaudit.report/1";

// Why an element counts as tappable. Several may apply at once.
struct SourceFlags {
  bool tag = false;              // a, button, input, select, textarea, label
  bool event_attribute = false;  // on<event>="..." attribute
  bool event_listener = false;   // listener registered through script
  bool iframe_embedded = false;  // lives in a child frame

  bool any_direct() const noexcept { return tag || event_attribute || event_listener; }
  std::vector<std::string> names() const;
  static SourceFlags from_names(const std::vector<std::string>& names);

  friend bool operator==(const SourceFlags&, const SourceFlags&) = default;
};

struct TappableElement {
  std::string element_id;  // "<frame_id><node_path>"
  std::string frame_id;
  std::string node_path;
  std::string tag;
  SourceFlags sources;
  PixelRect page_rect;  // CSS px, page coordinates, clipped to the page
  PhysicalSize size_mm;
  TapSuccessRate success_rate;
  // Overlapping elements including this one, topmost first.
  std::vector<std::string> candidate_ids;
  // Position in the page-wide paint order of reported elements; 0 is bottom.
  std::int64_t paint_rank = 0;

  friend bool operator==(const TappableElement&, const TappableElement&) = default;
};

struct AnalysisReport {
  std::string url;
  ViewportSize page_size_css_px;
  DeviceProfile device;
  CaptureOptions options;
  ModelCoefficients model;
  std::vector<std::string> exclusion_rules;
  std::vector<std::string> warnings;
  std::vector<TappableElement> elements;

  const TappableElement* find(const std::string& element_id) const;

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

void to_json(nlohmann::json& j, const TappableElement& e);
void from_json(const nlohmann::json& j, TappableElement& e);
void to_json(nlohmann::json& j, const AnalysisReport& r);
void from_json(const nlohmann::json& j, AnalysisReport& r);

// Stable textual form used for files, the API and golden comparisons.
std::string serialize_report(const AnalysisReport& report);
AnalysisReport parse_report(const std::string& text);

// "81.66%"
std::string format_percent(TapSuccessRate rate);

}  // namespace tapaudit
