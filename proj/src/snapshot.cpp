#include "tapaudit/snapshot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "tapaudit/errors.hpp"

namespace tapaudit {

using nlohmann::json;

bool PixelRect::finite() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(width) && std::isfinite(height);
}

double intersection_area(const PixelRect& a, const PixelRect& b) {
  const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

void Cookie::validate() const {
  if (name.empty()) throw ValidationError("cookie name must be non-empty");
  static const std::string kSeparators = "()<>@,;:\\\"/[]?={} \t";
  for (unsigned char c : name) {
    if (c < 0x21 || c == 0x7f || kSeparators.find(static_cast<char>(c)) != std::string::npos) {
      throw ValidationError("cookie name '" + name + "' contains an invalid character");
    }
  }
  for (unsigned char c : value) {
    if (c < 0x20 || c == 0x7f || c == ';') {
      throw ValidationError("cookie '" + name + "' has an invalid value character");
    }
  }
}

Cookie parse_cookie(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ValidationError("cookie must be name=value, got '" + text + "'");
  Cookie c;
  c.name = text.substr(0, eq);
  c.value = text.substr(eq + 1);
  c.validate();
  return c;
}

void CaptureOptions::validate() const {
  if (waiting_time_ms < 0) throw ValidationError("waiting_time_ms must be >= 0");
  if (navigation_timeout_ms <= 0) throw ValidationError("navigation_timeout_ms must be > 0");
  for (const auto& c : cookies) c.validate();
}

CaptureOptions CaptureOptions::redacted() const {
  CaptureOptions copy = *this;
  copy.cookies_redacted = cookies_supplied();
  copy.cookies.clear();
  return copy;
}

void to_json(json& j, const CaptureOptions& o) {
  j = json{{"device", o.device},
           {"waiting_time_ms", o.waiting_time_ms},
           {"execute_js", o.execute_js},
           {"cookies_supplied", o.cookies_supplied()},
           {"list_success_rates", o.list_success_rates},
           {"navigation_timeout_ms", o.navigation_timeout_ms}};
}

void from_json(const json& j, CaptureOptions& o) {
  o = CaptureOptions{};
  o.device = j.value("device", std::string{});
  o.waiting_time_ms = j.value("waiting_time_ms", CaptureOptions::kDefaultWaitingTimeMs);
  o.execute_js = j.value("execute_js", true);
  o.list_success_rates = j.value("list_success_rates", false);
  o.cookies_redacted = j.value("cookies_supplied", false);
  o.navigation_timeout_ms =
      j.value("navigation_timeout_ms", CaptureOptions::kDefaultNavigationTimeoutMs);
}

void to_json(json& j, const PixelRect& r) {
  j = json{{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}};
}

void from_json(const json& j, PixelRect& r) {
  r.x = j.at("x").get<double>();
  r.y = j.at("y").get<double>();
  r.width = j.at("width").get<double>();
  r.height = j.at("height").get<double>();
}

void to_json(json& j, const ElementRecord& e) {
  j = json{{"node_path", e.node_path},
           {"tag", e.tag},
           {"attributes", e.attributes},
           {"listener_events", e.listener_events},
           {"rect", e.rect},
           {"visibility",
            {{"effective_opacity", e.visibility.effective_opacity},
             {"visibility_hidden", e.visibility.visibility_hidden},
             {"displayed", e.visibility.displayed},
             {"pointer_events_none", e.visibility.pointer_events_none}}},
           {"paint_order", e.paint_order}};
}

void from_json(const json& j, ElementRecord& e) {
  e.node_path = j.at("node_path").get<std::string>();
  e.tag = j.at("tag").get<std::string>();
  e.attributes = j.value("attributes", std::map<std::string, std::string>{});
  e.listener_events = j.value("listener_events", std::set<std::string>{});
  e.rect = j.at("rect").get<PixelRect>();
  e.visibility = Visibility{};
  if (j.contains("visibility")) {
    const auto& v = j["visibility"];
    e.visibility.effective_opacity = v.value("effective_opacity", 1.0);
    e.visibility.visibility_hidden = v.value("visibility_hidden", false);
    e.visibility.displayed = v.value("displayed", true);
    e.visibility.pointer_events_none = v.value("pointer_events_none", false);
  }
  e.paint_order = j.at("paint_order").get<std::int64_t>();
}

void to_json(json& j, const FrameRecord& f) {
  j = json{{"frame_id", f.frame_id},
           {"parent_frame_id", f.parent_frame_id ? json(*f.parent_frame_id) : json(nullptr)},
           {"origin", f.origin},
           {"offset", f.offset}};
  if (f.owner_paint_order) j["owner_paint_order"] = *f.owner_paint_order;
  j["elements"] = f.elements;
}

void from_json(const json& j, FrameRecord& f) {
  f.frame_id = j.at("frame_id").get<std::string>();
  f.parent_frame_id.reset();
  if (j.contains("parent_frame_id") && !j["parent_frame_id"].is_null()) {
    f.parent_frame_id = j["parent_frame_id"].get<std::string>();
  }
  f.origin = j.value("origin", std::string{});
  f.offset = j.contains("offset") ? j["offset"].get<PixelRect>() : PixelRect{};
  f.owner_paint_order.reset();
  if (j.contains("owner_paint_order") && !j["owner_paint_order"].is_null()) {
    f.owner_paint_order = j["owner_paint_order"].get<std::int64_t>();
  }
  f.elements = j.value("elements", std::vector<ElementRecord>{});
}

void to_json(json& j, const PageSnapshot& s) {
  j = json{{"schema", kSnapshotSchema},
           {"url", s.url},
           {"page_size_css_px",
            {{"width", s.page_size_css_px.width}, {"height", s.page_size_css_px.height}}},
           {"capture_options", s.capture_options},
           {"warnings", s.warnings},
           {"frames", s.frames}};
}

void from_json(const json& j, PageSnapshot& s) {
  const auto schema = j.value("schema", std::string{});
  if (schema != kSnapshotSchema) {
    throw ValidationError("unsupported snapshot schema '" + schema + "'");
  }
  s.url = j.at("url").get<std::string>();
  s.page_size_css_px.width = j.at("page_size_css_px").at("width").get<double>();
  s.page_size_css_px.height = j.at("page_size_css_px").at("height").get<double>();
  s.capture_options = j.value("capture_options", CaptureOptions{});
  s.warnings = j.value("warnings", std::vector<std::string>{});
  s.frames = j.at("frames").get<std::vector<FrameRecord>>();
}

namespace {

bool is_lower(const std::string& s) {
  return std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c); });
}

}  // namespace

void validate(const PageSnapshot& snapshot) {
  const auto& page = snapshot.page_size_css_px;
  if (!std::isfinite(page.width) || !std::isfinite(page.height) || page.width < 0 ||
      page.height < 0) {
    throw ValidationError("page size must be finite and >= 0");
  }
  if (snapshot.frames.empty()) throw ValidationError("snapshot has no frames");

  std::unordered_map<std::string, const FrameRecord*> by_id;
  int roots = 0;
  for (const auto& f : snapshot.frames) {
    if (f.frame_id.empty()) throw ValidationError("frame with empty frame_id");
    if (!by_id.emplace(f.frame_id, &f).second) {
      throw ValidationError("duplicate frame_id '" + f.frame_id + "'");
    }
    if (!f.parent_frame_id) ++roots;
  }
  if (roots != 1) {
    throw ValidationError("snapshot must have exactly one root frame, found " +
                          std::to_string(roots));
  }

  for (const auto& f : snapshot.frames) {
    // Walk to the root; a chain longer than the frame count is a cycle.
    const FrameRecord* cur = &f;
    std::size_t steps = 0;
    while (cur->parent_frame_id) {
      auto it = by_id.find(*cur->parent_frame_id);
      if (it == by_id.end()) {
        throw ValidationError("orphan frame '" + f.frame_id + "': parent '" +
                              *cur->parent_frame_id + "' not found");
      }
      cur = it->second;
      if (++steps > snapshot.frames.size()) {
        throw ValidationError("frame parent chain of '" + f.frame_id + "' is cyclic");
      }
    }
    if (!f.offset.finite()) throw ValidationError("frame '" + f.frame_id + "' offset not finite");

    std::unordered_set<std::int64_t> paint_orders;
    std::unordered_set<std::string> paths;
    for (const auto& e : f.elements) {
      const std::string where = "frame '" + f.frame_id + "' element '" + e.node_path + "': ";
      if (e.node_path.empty()) throw ValidationError("frame '" + f.frame_id + "': empty node_path");
      if (!paths.insert(e.node_path).second) throw ValidationError(where + "duplicate node_path");
      if (!paint_orders.insert(e.paint_order).second) {
        throw ValidationError(where + "paint_order " + std::to_string(e.paint_order) +
                              " is not unique in its frame");
      }
      if (e.tag.empty() || !is_lower(e.tag)) throw ValidationError(where + "tag must be lowercase");
      for (const auto& ev : e.listener_events) {
        if (ev.empty() || !is_lower(ev)) {
          throw ValidationError(where + "listener event '" + ev + "' must be lowercase");
        }
      }
      if (!e.rect.finite() || e.rect.width < 0 || e.rect.height < 0) {
        throw ValidationError(where + "rect must be finite with non-negative size");
      }
      const double op = e.visibility.effective_opacity;
      if (!(op >= 0.0 && op <= 1.0)) throw ValidationError(where + "effective_opacity outside [0,1]");
    }
  }
}

PageSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open snapshot " + path);
  try {
    return json::parse(in).get<PageSnapshot>();
  } catch (const json::exception& e) {
    throw ValidationError("snapshot " + path + ": " + e.what());
  }
}

void save_snapshot(const PageSnapshot& snapshot, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write snapshot " + path);
  out << json(snapshot).dump(1) << '\n';
}

std::vector<const FrameRecord*> frames_preorder(const PageSnapshot& snapshot) {
  std::unordered_map<std::string, std::vector<const FrameRecord*>> children;
  const FrameRecord* root = nullptr;
  for (const auto& f : snapshot.frames) {
    if (f.parent_frame_id) {
      children[*f.parent_frame_id].push_back(&f);
    } else {
      root = &f;
    }
  }
  std::vector<const FrameRecord*> out;
  if (!root) return out;
  std::function<void(const FrameRecord*)> visit = [&](const FrameRecord* f) {
    out.push_back(f);
    for (const auto* c : children[f->frame_id]) visit(c);
  };
  visit(root);
  return out;
}

std::vector<const FrameRecord*> frame_chain(const PageSnapshot& snapshot,
                                            const std::string& frame_id) {
  std::unordered_map<std::string, const FrameRecord*> by_id;
  for (const auto& f : snapshot.frames) by_id.emplace(f.frame_id, &f);
  std::vector<const FrameRecord*> chain;
  std::string cur = frame_id;
  while (true) {
    auto it = by_id.find(cur);
    if (it == by_id.end()) throw ValidationError("orphan frame '" + cur + "'");
    chain.push_back(it->second);
    if (chain.size() > snapshot.frames.size()) throw ValidationError("cyclic frame chain");
    if (!it->second->parent_frame_id) break;
    cur = *it->second->parent_frame_id;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace tapaudit
