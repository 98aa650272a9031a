#include "tapaudit/capture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <boost/beast/core/detail/base64.hpp>

#include "tapaudit/dom_snapshot_assembler.hpp"
#include "tapaudit/errors.hpp"

namespace tapaudit {

using nlohmann::json;
using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

namespace {

constexpr const char* kObjectGroup = "tapaudit";

void scrub(std::string& s) {
  std::fill(s.begin(), s.end(), '\0');
  s.clear();
}

void scrub(json& j) {
  if (j.is_string()) {
    scrub(j.get_ref<std::string&>());
  } else if (j.is_structured()) {
    for (auto& v : j) scrub(v);
  }
}

// Rethrows protocol failures during setup as session errors.
template <typename F>
auto setup_step(F&& f) {
  try {
    return f();
  } catch (const CaptureError& e) {
    if (e.kind() == CaptureFailure::connection) throw;
    throw CaptureError(CaptureFailure::session, e.what());
  }
}

Image decode_base64_png(const std::string& b64) {
  namespace b = boost::beast::detail::base64;
  std::vector<std::uint8_t> bytes(b::decoded_size(b64.size()));
  const auto [written, read] = b::decode(bytes.data(), b64.data(), b64.size());
  (void)read;
  bytes.resize(written);
  return decode_png(bytes);
}

void validate_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^\s/?#]+[^\s]*|file:///[^\s]*|data:[^\s]*|about:blank)$)",
                             std::regex::icase);
  if (!std::regex_match(url, re)) throw ValidationError("invalid URL '" + url + "'");
}

bool is_frame_attach(const CdpEvent& ev) {
  return ev.method == "Target.attachedToTarget" &&
         ev.params.value("targetInfo", json::object()).value("type", "") == "iframe";
}

const json kAutoAttach{{"autoAttach", true}, {"waitForDebuggerOnStart", true}, {"flatten", true}};

// New out-of-process frames start paused; configure them like the page, then
// let them run. Failures surface later when the frame is collected.
void prepare_frame(CdpConnection& conn, const CdpEvent& ev, bool execute_js) {
  const std::string child = ev.params.at("sessionId");
  try {
    if (!execute_js) conn.send("Emulation.setScriptExecutionDisabled", {{"value", true}}, child);
    conn.send("Target.setAutoAttach", kAutoAttach, child);
  } catch (const CaptureError& e) {
    if (e.kind() == CaptureFailure::connection) throw;
  }
  try {
    if (ev.params.value("waitingForDebugger", false)) {
      conn.send("Runtime.runIfWaitingForDebugger", json::object(), child);
    }
  } catch (const CaptureError& e) {
    if (e.kind() == CaptureFailure::connection) throw;
  }
}

struct TreeCollector {
  CdpConnection& conn;
  std::vector<std::string>& warnings;

  RawFrameTree collect(const std::string& session) {
    RawFrameTree tree;
    tree.key = session;
    tree.snapshot = conn.send("DOMSnapshot.captureSnapshot",
                              {{"computedStyles", snapshot_computed_styles()},
                               {"includePaintOrder", true},
                               {"includeDOMRects", false}},
                              session);
    const auto& docs = tree.snapshot.at("documents");
    if (docs.empty()) return tree;
    // One piercing walk from the top document covers in-process frames and
    // shadow trees of this session.
    try {
      const auto doc_node = docs[0].at("nodes").at("backendNodeId").at(0).get<std::int64_t>();
      const json obj = conn.send("DOM.resolveNode", {{"backendNodeId", doc_node}, {"objectGroup", kObjectGroup}},
                                 session);
      const json ls = conn.send(
          "DOMDebugger.getEventListeners",
          {{"objectId", obj.at("object").at("objectId")}, {"depth", -1}, {"pierce", true}}, session);
      for (const auto& l : ls.value("listeners", json::array())) {
        if (!l.contains("backendNodeId")) continue;
        tree.listeners[l.at("backendNodeId").get<std::int64_t>()].insert(l.at("type").get<std::string>());
      }
      conn.send("Runtime.releaseObjectGroup", {{"objectGroup", kObjectGroup}}, session);
    } catch (const CaptureError& e) {
      if (e.kind() == CaptureFailure::connection) throw;
      warnings.push_back(std::string("listener inspection failed for a frame: ") + e.what());
    }
    return tree;
  }
};

}  // namespace

Session::~Session() {
  for (auto& c : cookies_) {
    scrub(c.value);
    scrub(c.name);
  }
  cookies_.clear();
  if (conn_ && !context_id_.empty() && conn_->connected()) {
    try {
      conn_->send("Target.disposeBrowserContext", {{"browserContextId", context_id_}}, {},
                  std::chrono::seconds(5));
    } catch (const std::exception&) {
      // The context is disposed with the connection anyway.
    }
  }
}

std::unique_ptr<Session> open_session(const DeviceProfile& profile, const CaptureOptions& options,
                                      const std::string& endpoint) {
  profile.validate();
  CaptureOptions opts = options;
  opts.cookies.clear();
  opts.cookies_redacted = false;
  opts.device = profile.name;
  opts.validate();

  std::unique_ptr<Session> s(new Session());
  s->profile_ = profile;
  s->options_ = opts;
  s->conn_ = std::make_unique<CdpConnection>(discover_websocket_url(endpoint));
  auto& conn = *s->conn_;

  setup_step([&] {
    s->context_id_ = conn.send("Target.createBrowserContext", {{"disposeOnDetach", true}})
                         .at("browserContextId")
                         .get<std::string>();
    const auto target = conn.send("Target.createTarget",
                                  {{"url", "about:blank"}, {"browserContextId", s->context_id_}})
                            .at("targetId")
                            .get<std::string>();
    s->session_id_ =
        conn.send("Target.attachToTarget", {{"targetId", target}, {"flatten", true}}).at("sessionId");
    const auto& sid = s->session_id_;
    const auto& vp = profile.viewport_css_px;
    conn.send("Emulation.setDeviceMetricsOverride",
              {{"width", static_cast<int>(vp.width)},
               {"height", static_cast<int>(vp.height)},
               {"deviceScaleFactor", profile.device_pixel_ratio},
               {"mobile", true},
               {"screenWidth", static_cast<int>(vp.width)},
               {"screenHeight", static_cast<int>(vp.height)}},
              sid);
    conn.send("Emulation.setUserAgentOverride", {{"userAgent", profile.user_agent}, {"platform", "iPhone"}},
              sid);
    conn.send("Emulation.setTouchEmulationEnabled", {{"enabled", true}, {"maxTouchPoints", 5}}, sid);
    if (!opts.execute_js) conn.send("Emulation.setScriptExecutionDisabled", {{"value", true}}, sid);
    conn.send("Page.enable", json::object(), sid);
    conn.send("Target.setAutoAttach", kAutoAttach, sid);
    return 0;
  });
  return s;
}

void inject_cookies(Session& session, const std::vector<Cookie>& cookies) {
  if (session.used_) throw ValidationError("cookies must be injected before navigation");
  for (const auto& c : cookies) c.validate();
  if (cookies.empty()) return;
  session.cookies_.insert(session.cookies_.end(), cookies.begin(), cookies.end());
  session.transient_ = true;
}

CaptureResult capture(Session& session, const std::string& url) {
  validate_url(url);
  if (session.used_) throw ValidationError("a session captures only one page");
  session.used_ = true;
  auto& conn = *session.conn_;
  const auto& sid = session.session_id_;
  const auto& opts = session.options_;
  const double dpr = session.profile_.device_pixel_ratio;

  CaptureResult result;
  result.transient = session.transient_;
  auto& snap = result.snapshot;
  snap.url = url;
  snap.capture_options = opts;
  snap.capture_options.cookies_redacted = session.transient_;

  if (!session.cookies_.empty()) {
    json list = json::array();
    for (const auto& c : session.cookies_) {
      json j{{"name", c.name}, {"value", c.value}, {"path", c.path}, {"secure", c.secure},
             {"httpOnly", c.http_only}};
      if (c.domain.empty()) {
        j["url"] = url;
      } else {
        j["domain"] = c.domain;
      }
      list.push_back(std::move(j));
    }
    json params{{"cookies", std::move(list)}};
    try {
      setup_step([&] { return conn.send("Network.setCookies", params, sid); });
    } catch (...) {
      scrub(params);
      throw;
    }
    scrub(params);
  }

  const auto nav_timeout = milliseconds(opts.navigation_timeout_ms);
  const auto nav_deadline = Clock::now() + nav_timeout;
  const auto seq0 = conn.last_event_seq();
  json nav;
  try {
    nav = conn.send("Page.navigate", {{"url", url}}, sid, nav_timeout);
  } catch (const CaptureError& e) {
    if (e.kind() == CaptureFailure::protocol && Clock::now() >= nav_deadline) {
      throw CaptureError(CaptureFailure::load_timeout, e.what());
    }
    if (e.kind() == CaptureFailure::protocol) throw CaptureError(CaptureFailure::navigation, e.what());
    throw;
  }
  if (auto err = nav.find("errorText"); err != nav.end() && !err->get<std::string>().empty()) {
    throw CaptureError(CaptureFailure::navigation, url + ": " + err->get<std::string>());
  }
  std::vector<CdpEvent> attachments;
  for (;;) {
    auto ev = conn.wait_for_event(
        [&](const CdpEvent& e) {
          return (e.seq > seq0 && e.method == "Page.loadEventFired" && e.session_id == sid) ||
                 is_frame_attach(e);
        },
        nav_deadline);
    if (!ev) {
      throw CaptureError(CaptureFailure::load_timeout,
                         "no load event within " + std::to_string(opts.navigation_timeout_ms) + " ms");
    }
    if (ev->method == "Page.loadEventFired") break;
    prepare_frame(conn, *ev, opts.execute_js);
    attachments.push_back(std::move(*ev));
  }
  result.timings.load_event_at = Clock::now();
  const auto wait_until = result.timings.load_event_at + milliseconds(opts.waiting_time_ms);
  while (auto ev = conn.wait_for_event(is_frame_attach, wait_until)) {
    prepare_frame(conn, *ev, opts.execute_js);
    attachments.push_back(std::move(*ev));
  }
  std::this_thread::sleep_until(wait_until);
  result.timings.snapshot_started_at = Clock::now();

  // Top of the page, so later scrolling cannot shift anything we record.
  const auto eval = [&](const std::string& expr) {
    return conn.send("Runtime.evaluate", {{"expression", expr}, {"returnByValue", true}}, sid)
        .at("result")
        .value("value", json());
  };
  eval("window.scrollTo({left: 0, top: 0, behavior: 'instant'})");
  result.rendered_viewport_width = eval("window.innerWidth").get<double>();
  if (std::fabs(result.rendered_viewport_width - session.profile_.viewport_css_px.width) > 0.5) {
    // No mobile viewport meta: the phone zooms the wider layout out, so
    // physical sizes computed at scale 1 overstate the real targets.
    snap.warnings.push_back("page lays out " + std::to_string(std::lround(result.rendered_viewport_width)) +
                            " CSS px wide instead of the device's " +
                            std::to_string(std::lround(session.profile_.viewport_css_px.width)) +
                            " (no mobile viewport); sizes assume zoom 1");
  }

  // Frames: the page session first, then out-of-process frames as they are
  // discovered through auto-attachment.
  TreeCollector collector{conn, snap.warnings};
  std::vector<RawFrameTree> trees(1);
  trees[0].key = sid;
  std::vector<bool> dropped(1, false);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const std::string session_key = trees[i].key;
    try {
      RawFrameTree collected = collector.collect(session_key);
      collected.parent_key = trees[i].parent_key;
      collected.owner_backend_node_id = trees[i].owner_backend_node_id;
      trees[i] = std::move(collected);
    } catch (const CaptureError& e) {
      if (i == 0 || e.kind() == CaptureFailure::connection) throw;
      snap.warnings.push_back(std::string("frame skipped: ") + e.what());
      dropped[i] = true;
      continue;
    }
    for (const auto& ev : conn.take_events(is_frame_attach)) {
      prepare_frame(conn, ev, opts.execute_js);
      attachments.push_back(ev);
    }
    std::vector<CdpEvent> attached;
    for (const auto& ev : attachments) {
      if (ev.session_id == session_key) attached.push_back(ev);
    }
    for (const auto& ev : attached) {
      RawFrameTree stub;
      stub.key = ev.params.at("sessionId");
      stub.parent_key = session_key;
      const json& info = ev.params.at("targetInfo");
      try {
        stub.owner_backend_node_id =
            conn.send("DOM.getFrameOwner", {{"frameId", info.at("targetId")}}, session_key).at("backendNodeId");
      } catch (const CaptureError& e) {
        if (e.kind() == CaptureFailure::connection) throw;
        snap.warnings.push_back("frame " + info.value("url", std::string()) + " refused attachment; skipped");
        continue;
      }
      trees.push_back(std::move(stub));
      dropped.push_back(false);
    }
  }
  std::vector<RawFrameTree> kept;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (!dropped[i]) kept.push_back(std::move(trees[i]));
  }
  trees = std::move(kept);
  try {
    auto assembled = assemble_frames(trees);
    snap.frames = std::move(assembled.frames);
    for (auto& w : assembled.warnings) snap.warnings.push_back(std::move(w));
  } catch (const ValidationError& e) {
    throw CaptureError(CaptureFailure::protocol, e.what());
  }

  const json metrics = conn.send("Page.getLayoutMetrics", json::object(), sid);
  const json& content = metrics.at("cssContentSize");
  const json& visual = metrics.at("cssVisualViewport");
  double page_w = std::max(content.at("width").get<double>(), visual.at("clientWidth").get<double>());
  double page_h = std::max(content.at("height").get<double>(), visual.at("clientHeight").get<double>());
  if (page_h > kMaxPageHeightCss) {
    snap.warnings.push_back("page height " + std::to_string(page_h) + " px cut to " +
                            std::to_string(kMaxPageHeightCss));
    page_h = kMaxPageHeightCss;
  }
  snap.page_size_css_px = {page_w, page_h};

  // Screenshot: scroll one viewport at a time and stitch the tiles.
  const double vw = visual.at("clientWidth").get<double>();
  const double vh = visual.at("clientHeight").get<double>();
  Image canvas(static_cast<int>(std::lround(page_w * dpr)), static_cast<int>(std::lround(page_h * dpr)));
  for (double y = 0;; y += vh) {
    for (double x = 0;; x += vw) {
      const json pos = eval("window.scrollTo({left: " + std::to_string(x) + ", top: " + std::to_string(y) +
                            ", behavior: 'instant'}); [window.scrollX, window.scrollY]");
      const auto shot = conn.send("Page.captureScreenshot", {{"format", "png"}, {"fromSurface", true}}, sid);
      const Image tile = decode_base64_png(shot.at("data").get<std::string>());
      canvas.blit(tile, static_cast<int>(std::lround(pos.at(0).get<double>() * dpr)),
                  static_cast<int>(std::lround(pos.at(1).get<double>() * dpr)));
      ++result.screenshot_tiles;
      if (x + vw >= page_w) break;
    }
    if (y + vh >= page_h) break;
  }
  eval("window.scrollTo({left: 0, top: 0, behavior: 'instant'})");
  result.screenshot = std::move(canvas);
  result.timings.finished_at = Clock::now();

  try {
    validate(snap);
  } catch (const ValidationError& e) {
    throw CaptureError(CaptureFailure::protocol, std::string("captured snapshot is inconsistent: ") + e.what());
  }
  return result;
}

CaptureResult run_capture(const DeviceProfile& profile, const CaptureOptions& options, const std::string& url,
                          const std::string& endpoint) {
  validate_url(url);
  auto session = open_session(profile, options, endpoint);
  inject_cookies(*session, options.cookies);
  return capture(*session, url);
}

SessionPool::SessionPool(std::size_t size)
    : size_(std::clamp<std::size_t>(size, 1, kMaxSize)), sem_(static_cast<std::ptrdiff_t>(size_)) {}

std::size_t SessionPool::size_from_env() {
  const char* v = std::getenv(kPoolSizeEnv);
  if (!v || !*v) return 2;
  try {
    const long n = std::stol(v);
    if (n >= 1) return static_cast<std::size_t>(std::min<long>(n, kMaxSize));
  } catch (const std::exception&) {
  }
  throw ValidationError(std::string(kPoolSizeEnv) + " must be a positive integer");
}

}  // namespace tapaudit
