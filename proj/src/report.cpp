#include "tapaudit/report.hpp"

#include <cstdio>

#include "tapaudit/errors.hpp"

namespace tapaudit {

using nlohmann::json;

std::vector<std::string> SourceFlags::names() const {
  std::vector<std::string> out;
  if (tag) out.emplace_back("tag");
  if (event_attribute) out.emplace_back("event_attribute");
  if (event_listener) out.emplace_back("event_listener");
  if (iframe_embedded) out.emplace_back("iframe_embedded");
  return out;
}

SourceFlags SourceFlags::from_names(const std::vector<std::string>& names) {
  SourceFlags f;
  for (const auto& n : names) {
    if (n == "tag") f.tag = true;
    else if (n == "event_attribute") f.event_attribute = true;
    else if (n == "event_listener") f.event_listener = true;
    else if (n == "iframe_embedded") f.iframe_embedded = true;
    else throw ValidationError("unknown element source '" + n + "'");
  }
  return f;
}

const TappableElement* AnalysisReport::find(const std::string& element_id) const {
  for (const auto& e : elements) {
    if (e.element_id == element_id) return &e;
  }
  return nullptr;
}

void to_json(json& j, const TappableElement& e) {
  j = json{{"element_id", e.element_id},
           {"frame_id", e.frame_id},
           {"node_path", e.node_path},
           {"tag", e.tag},
           {"sources", e.sources.names()},
           {"page_rect", e.page_rect},
           {"pixel_size", {{"width", e.page_rect.width}, {"height", e.page_rect.height}}},
           {"size_mm", {{"width", e.size_mm.width_mm}, {"height", e.size_mm.height_mm}}},
           {"success_rate", e.success_rate.value()},
           {"candidate_ids", e.candidate_ids},
           {"paint_rank", e.paint_rank}};
}

void from_json(const json& j, TappableElement& e) {
  e.element_id = j.at("element_id").get<std::string>();
  e.frame_id = j.at("frame_id").get<std::string>();
  e.node_path = j.at("node_path").get<std::string>();
  e.tag = j.at("tag").get<std::string>();
  e.sources = SourceFlags::from_names(j.at("sources").get<std::vector<std::string>>());
  e.page_rect = j.at("page_rect").get<PixelRect>();
  e.size_mm.width_mm = j.at("size_mm").at("width").get<double>();
  e.size_mm.height_mm = j.at("size_mm").at("height").get<double>();
  e.success_rate = TapSuccessRate(j.at("success_rate").get<double>());
  e.candidate_ids = j.at("candidate_ids").get<std::vector<std::string>>();
  e.paint_rank = j.value("paint_rank", std::int64_t{0});
}

void to_json(json& j, const AnalysisReport& r) {
  j = json{{"schema", kReportSchema},
           {"url", r.url},
           {"page_size_css_px",
            {{"width", r.page_size_css_px.width}, {"height", r.page_size_css_px.height}}},
           {"device", r.device},
           {"options", r.options},
           {"model",
            {{"a_x", r.model.a_x}, {"b_x", r.model.b_x}, {"a_y", r.model.a_y}, {"b_y", r.model.b_y}}},
           {"exclusion_rules", r.exclusion_rules},
           {"warnings", r.warnings},
           {"elements", r.elements}};
}

void from_json(const json& j, AnalysisReport& r) {
  const auto schema = j.value("schema", std::string{});
  if (schema != kReportSchema) throw ValidationError("unsupported report schema '" + schema + "'");
  r.url = j.at("url").get<std::string>();
  r.page_size_css_px.width = j.at("page_size_css_px").at("width").get<double>();
  r.page_size_css_px.height = j.at("page_size_css_px").at("height").get<double>();
  r.device = j.at("device").get<DeviceProfile>();
  r.options = j.at("options").get<CaptureOptions>();
  const auto& m = j.at("model");
  r.model = {m.at("a_x").get<double>(), m.at("b_x").get<double>(), m.at("a_y").get<double>(),
             m.at("b_y").get<double>()};
  r.exclusion_rules = j.value("exclusion_rules", std::vector<std::string>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.elements = j.at("elements").get<std::vector<TappableElement>>();
}

std::string serialize_report(const AnalysisReport& report) {
  return json(report).dump(1) + "\n";
}

AnalysisReport parse_report(const std::string& text) {
  try {
    return json::parse(text).get<AnalysisReport>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

std::string format_percent(TapSuccessRate rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", rate.percent());
  return buf;
}

}  // namespace tapaudit
