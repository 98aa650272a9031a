#include "tapaudit/analyzer.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "tapaudit/errors.hpp"

namespace tapaudit {

const std::set<std::string>& tappable_tags() {
  static const std::set<std::string> tags{"a", "button", "input", "select", "textarea", "label"};
  return tags;
}

const std::set<std::string>& tappable_events() {
  static const std::set<std::string> events{
      // Touch Events
      "touchstart", "touchend", "touchmove", "touchcancel",
      // Pointer Events
      "pointerdown", "pointerup", "pointermove", "pointercancel", "pointerover", "pointerout",
      "pointerenter", "pointerleave",
      // UI Events
      "click", "dblclick", "auxclick", "contextmenu", "mousedown", "mouseup", "mousemove",
      "mouseover", "mouseout", "mouseenter", "mouseleave", "wheel", "keydown", "keyup",
      "keypress", "input", "change", "focus", "blur"};
  return events;
}

const std::set<std::string>& tappable_event_attributes() {
  static const std::set<std::string> attrs = [] {
    std::set<std::string> out;
    for (const auto& e : tappable_events()) out.insert("on" + e);
    return out;
  }();
  return attrs;
}

std::vector<DetectedElement> detect_tappable(const PageSnapshot& snapshot) {
  validate(snapshot);
  const auto& tags = tappable_tags();
  const auto& events = tappable_events();
  const auto& attrs = tappable_event_attributes();

  std::vector<DetectedElement> out;
  for (const FrameRecord* frame : frames_preorder(snapshot)) {
    const bool embedded = frame->parent_frame_id.has_value();
    for (const auto& el : frame->elements) {
      SourceFlags flags;
      flags.tag = tags.contains(el.tag);
      flags.event_attribute = std::any_of(el.attributes.begin(), el.attributes.end(),
                                          [&](const auto& kv) { return attrs.contains(kv.first); });
      flags.event_listener = std::any_of(el.listener_events.begin(), el.listener_events.end(),
                                         [&](const auto& ev) { return events.contains(ev); });
      if (!flags.any_direct()) continue;
      flags.iframe_embedded = embedded;
      out.push_back({frame, &el, flags});
    }
  }
  return out;
}

const std::vector<std::string>& exclusion_rules() {
  static const std::vector<std::string> rules{
      "effective opacity (own x ancestors) is 0",
      "visibility: hidden",
      "display: none (not rendered)",
      "pointer-events: none",
      "zero width or height, before or after clipping to the page",
  };
  return rules;
}

bool is_visible(const ElementRecord& element) {
  const auto& v = element.visibility;
  return v.effective_opacity > 0.0 && !v.visibility_hidden && v.displayed &&
         !v.pointer_events_none && element.rect.width > 0.0 && element.rect.height > 0.0;
}

std::vector<DetectedElement> filter_visible(std::vector<DetectedElement> elements,
                                            const PageSnapshot&) {
  std::erase_if(elements, [](const DetectedElement& d) { return !is_visible(*d.element); });
  return elements;
}

PixelRect translate_to_page(const ElementRecord& element,
                            std::span<const FrameRecord* const> chain,
                            const ViewportSize& page_size) {
  if (chain.empty() || chain.front()->parent_frame_id) {
    throw ValidationError("frame chain must start at the root frame");
  }
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (!chain[i]->parent_frame_id || *chain[i]->parent_frame_id != chain[i - 1]->frame_id) {
      throw ValidationError("orphan frame '" + chain[i]->frame_id + "' in frame chain");
    }
    dx += chain[i]->offset.x;
    dy += chain[i]->offset.y;
  }
  const double left = std::clamp(element.rect.x + dx, 0.0, page_size.width);
  const double top = std::clamp(element.rect.y + dy, 0.0, page_size.height);
  const double right = std::clamp(element.rect.right() + dx, 0.0, page_size.width);
  const double bottom = std::clamp(element.rect.bottom() + dy, 0.0, page_size.height);
  return {left, top, right - left, bottom - top};
}

std::vector<PlacedElement> place_elements(const std::vector<DetectedElement>& elements,
                                          const PageSnapshot& snapshot) {
  std::unordered_map<std::string, std::vector<const FrameRecord*>> chains;
  std::vector<PlacedElement> out;
  for (const auto& d : elements) {
    auto it = chains.find(d.frame->frame_id);
    if (it == chains.end()) {
      it = chains.emplace(d.frame->frame_id, frame_chain(snapshot, d.frame->frame_id)).first;
    }
    const auto& chain = it->second;
    PlacedElement p;
    p.detected = d;
    p.element_id = d.frame->frame_id + d.element->node_path;
    p.page_rect = translate_to_page(*d.element, chain, snapshot.page_size_css_px);
    if (!p.page_rect.has_area()) continue;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      p.paint_key.push_back(chain[i]->owner_paint_order.value_or(0));
    }
    p.paint_key.push_back(d.element->paint_order);
    out.push_back(std::move(p));
  }
  return out;
}

void group_candidates(std::vector<PlacedElement>& elements) {
  // Indices sorted topmost first so each candidate list comes out ordered.
  std::vector<std::size_t> top_first(elements.size());
  std::iota(top_first.begin(), top_first.end(), std::size_t{0});
  std::sort(top_first.begin(), top_first.end(), [&](std::size_t a, std::size_t b) {
    return elements[a].paint_key > elements[b].paint_key;
  });
  for (auto& el : elements) {
    el.candidate_ids.clear();
    for (std::size_t j : top_first) {
      if (&elements[j] == &el || intersection_area(el.page_rect, elements[j].page_rect) > 0.0) {
        el.candidate_ids.push_back(elements[j].element_id);
      }
    }
  }
}

std::vector<TappableElement> score(const std::vector<PlacedElement>& elements,
                                   const DeviceProfile& profile,
                                   const ModelCoefficients& coeffs) {
  std::vector<std::size_t> bottom_first(elements.size());
  std::iota(bottom_first.begin(), bottom_first.end(), std::size_t{0});
  std::sort(bottom_first.begin(), bottom_first.end(), [&](std::size_t a, std::size_t b) {
    return elements[a].paint_key < elements[b].paint_key;
  });
  std::vector<std::int64_t> rank(elements.size());
  for (std::size_t r = 0; r < bottom_first.size(); ++r) {
    rank[bottom_first[r]] = static_cast<std::int64_t>(r);
  }

  std::vector<TappableElement> out;
  out.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& p = elements[i];
    TappableElement t;
    t.element_id = p.element_id;
    t.frame_id = p.detected.frame->frame_id;
    t.node_path = p.detected.element->node_path;
    t.tag = p.detected.element->tag;
    t.sources = p.detected.sources;
    t.page_rect = p.page_rect;
    t.size_mm = {css_px_to_mm(p.page_rect.width, profile), css_px_to_mm(p.page_rect.height, profile)};
    t.success_rate = success_rate(t.size_mm, coeffs);
    t.candidate_ids = p.candidate_ids;
    t.paint_rank = rank[i];
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

template <typename F>
auto run_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const AnalysisError&) {
    throw;
  } catch (const std::exception& e) {
    throw AnalysisError(stage, e.what());
  }
}

}  // namespace

AnalysisReport analyze(const PageSnapshot& snapshot, const DeviceProfile& profile,
                       const ModelCoefficients& coeffs) {
  run_stage("input", [&] {
    profile.validate();
    coeffs.validate();
    return 0;
  });
  auto detected = run_stage("detect", [&] { return detect_tappable(snapshot); });
  auto visible = run_stage("filter", [&] { return filter_visible(std::move(detected), snapshot); });
  auto placed = run_stage("translate", [&] { return place_elements(visible, snapshot); });
  run_stage("group", [&] {
    group_candidates(placed);
    return 0;
  });
  auto scored = run_stage("score", [&] { return score(placed, profile, coeffs); });

  AnalysisReport report;
  report.url = snapshot.url;
  report.page_size_css_px = snapshot.page_size_css_px;
  report.device = profile;
  report.options = snapshot.capture_options.redacted();
  report.options.device = profile.name;
  report.model = coeffs;
  report.exclusion_rules = exclusion_rules();
  report.warnings = snapshot.warnings;
  report.elements = std::move(scored);
  return report;
}

}  // namespace tapaudit
