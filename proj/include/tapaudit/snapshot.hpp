#pragma once

// Serialized rendering of a page: the browser-independent input of the
// analyzer. Produced by capture, or loaded from a fixture file.
//
// On-disk form is JSON tagged "schema": "tapaudit.snapshot/1"; see
// schemas/snapshot.schema.json.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tapaudit/device_registry.hpp"

namespace tapaudit {

inline constexpr const char* kSnapshotSchema = "tapaudit.snapshot/1";

// CSS pixels. For elements: frame-local document coordinates. For frames:
// position of the frame's content box inside its parent frame's document.
struct PixelRect {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  double right() const noexcept { return x + width; }
  double bottom() const noexcept { return y + height; }
  bool finite() const noexcept;
  bool has_area() const noexcept { return width > 0.0 && height > 0.0; }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Area of the overlap of two rects; 0 when they only touch or are disjoint.
double intersection_area(const PixelRect& a, const PixelRect& b);

struct Visibility {
  double effective_opacity = 1.0;  // product over the element and its ancestors
  bool visibility_hidden = false;
  bool displayed = true;
  bool pointer_events_none = false;

  friend bool operator==(const Visibility&, const Visibility&) = default;
};

struct ElementRecord {
  std::string node_path;  // e.g. /html[1]/body[1]/div[2]
  std::string tag;        // lowercase
  std::map<std::string, std::string> attributes;
  std::set<std::string> listener_events;  // lowercase event types
  PixelRect rect;
  Visibility visibility;
  std::int64_t paint_order = 0;  // unique within the frame, higher is on top

  friend bool operator==(const ElementRecord&, const ElementRecord&) = default;
};

struct FrameRecord {
  std::string frame_id;
  std::optional<std::string> parent_frame_id;  // empty for the main frame
  std::string origin;
  PixelRect offset;
  // Paint order of the owning <iframe> element in the parent frame; places the
  // frame's content in the cross-frame stacking order.
  std::optional<std::int64_t> owner_paint_order;
  std::vector<ElementRecord> elements;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct Cookie {
  std::string name;
  std::string value;
  std::string domain;  // empty: the target URL's host
  std::string path = "/";
  bool secure = false;
  bool http_only = false;

  // Throws ValidationError for an empty or syntactically invalid name.
  void validate() const;

  friend bool operator==(const Cookie&, const Cookie&) = default;
};

// Parses "name=value" (the form users copy out of browser devtools).
Cookie parse_cookie(const std::string& text);

struct CaptureOptions {
  static constexpr std::int64_t kDefaultWaitingTimeMs = 3000;
  static constexpr std::int64_t kDefaultNavigationTimeoutMs = 30000;

  std::string device;
  std::int64_t waiting_time_ms = kDefaultWaitingTimeMs;
  bool execute_js = true;
  std::vector<Cookie> cookies;  // empty: cookie mode off
  bool list_success_rates = false;
  std::int64_t navigation_timeout_ms = kDefaultNavigationTimeoutMs;
  // Set when cookie values were stripped but the run was a cookie run.
  bool cookies_redacted = false;

  bool cookies_supplied() const noexcept { return !cookies.empty() || cookies_redacted; }
  // Copy without cookie values, still reporting cookies_supplied().
  CaptureOptions redacted() const;
  void validate() const;

  friend bool operator==(const CaptureOptions&, const CaptureOptions&) = default;
};

// Cookie values are never serialized; only whether cookies were supplied.
void to_json(nlohmann::json& j, const CaptureOptions& o);
void from_json(const nlohmann::json& j, CaptureOptions& o);

struct PageSnapshot {
  std::string url;
  std::vector<FrameRecord> frames;  // flat; tree shape via parent_frame_id
  ViewportSize page_size_css_px;
  CaptureOptions capture_options;
  std::vector<std::string> warnings;  // e.g. frames that refused attachment

  friend bool operator==(const PageSnapshot&, const PageSnapshot&) = default;
};

void to_json(nlohmann::json& j, const PixelRect& r);
void from_json(const nlohmann::json& j, PixelRect& r);
void to_json(nlohmann::json& j, const ElementRecord& e);
void from_json(const nlohmann::json& j, ElementRecord& e);
void to_json(nlohmann::json& j, const FrameRecord& f);
void from_json(const nlohmann::json& j, FrameRecord& f);
void to_json(nlohmann::json& j, const PageSnapshot& s);
void from_json(const nlohmann::json& j, PageSnapshot& s);

// Structural checks: exactly one root frame, unique frame ids, no orphan or
// cyclic frames, per-frame unique paint orders and node paths, finite rects,
// lowercase tags and listener names. Throws ValidationError.
void validate(const PageSnapshot& snapshot);

PageSnapshot load_snapshot(const std::string& path);
void save_snapshot(const PageSnapshot& snapshot, const std::string& path);

// Frames in tree preorder (root first, children in file order). Requires a
// validated snapshot.
std::vector<const FrameRecord*> frames_preorder(const PageSnapshot& snapshot);

// Frames from the root down to `frame_id`, inclusive. Throws ValidationError
// when the chain does not reach the root.
std::vector<const FrameRecord*> frame_chain(const PageSnapshot& snapshot,
                                            const std::string& frame_id);

}  // namespace tapaudit
