#pragma once

// Snapshot -> report pipeline:
//   detect_tappable -> filter_visible -> translate_to_page -> group_candidates -> score
// Every stage is a pure function of its inputs.

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tapaudit/device_registry.hpp"
#include "tapaudit/report.hpp"
#include "tapaudit/snapshot.hpp"
#include "tapaudit/tap_model.hpp"

namespace tapaudit {

// Tags rendered as tappable controls.
const std::set<std::string>& tappable_tags();
// Touch, Pointer and UI event types a user can trigger. abort, error, load
// and unload are deliberately absent.
const std::set<std::string>& tappable_events();
// "on" + each tappable event.
const std::set<std::string>& tappable_event_attributes();

struct DetectedElement {
  const FrameRecord* frame = nullptr;
  const ElementRecord* element = nullptr;
  SourceFlags sources;
};

// Validates the snapshot (ValidationError) and returns every tappable element
// of every frame, in frame preorder then document order.
std::vector<DetectedElement> detect_tappable(const PageSnapshot& snapshot);

// Human-readable list of the rules filter_visible applies; copied into reports.
const std::vector<std::string>& exclusion_rules();

bool is_visible(const ElementRecord& element);
std::vector<DetectedElement> filter_visible(std::vector<DetectedElement> elements,
                                            const PageSnapshot& snapshot);

// Offsets the frame-local rect by every frame offset on the chain (root
// first) and clips it to [0, page width] x [0, page height]. The chain must
// start at the root and end at the element's frame; ValidationError otherwise.
PixelRect translate_to_page(const ElementRecord& element,
                            std::span<const FrameRecord* const> chain,
                            const ViewportSize& page_size);

struct PlacedElement {
  DetectedElement detected;
  std::string element_id;
  PixelRect page_rect;
  // Paint orders along the frame chain: owner iframe orders, then the
  // element's own. Lexicographic order is page-wide stacking order.
  std::vector<std::int64_t> paint_key;
  std::vector<std::string> candidate_ids;  // filled by group_candidates
};

// Translates every element; drops those left with no area after clipping.
std::vector<PlacedElement> place_elements(const std::vector<DetectedElement>& elements,
                                          const PageSnapshot& snapshot);

// candidate_ids = every element whose page rect overlaps with positive area,
// itself included, topmost first.
void group_candidates(std::vector<PlacedElement>& elements);

std::vector<TappableElement> score(const std::vector<PlacedElement>& elements,
                                   const DeviceProfile& profile,
                                   const ModelCoefficients& coeffs);

// Full pipeline. Stage failures surface as AnalysisError naming the stage.
AnalysisReport analyze(const PageSnapshot& snapshot, const DeviceProfile& profile,
                       const ModelCoefficients& coeffs = {});

}  // namespace tapaudit
