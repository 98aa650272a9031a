#pragma once

// Renders a URL in an emulated phone through the remote-debugging protocol
// and produces a PageSnapshot plus a stitched full-page screenshot.

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "tapaudit/cdp_connection.hpp"
#include "tapaudit/device_registry.hpp"
#include "tapaudit/image.hpp"
#include "tapaudit/snapshot.hpp"

namespace tapaudit {

inline constexpr const char* kPoolSizeEnv = "TAPAUDIT_POOL_SIZE";

// Pages taller than this are cut off; the snapshot's page size is cut to match.
inline constexpr double kMaxPageHeightCss = 20000.0;

struct CaptureTimings {
  std::chrono::steady_clock::time_point load_event_at;
  std::chrono::steady_clock::time_point snapshot_started_at;
  std::chrono::steady_clock::time_point finished_at;
};

struct CaptureResult {
  PageSnapshot snapshot;
  Image screenshot;
  bool transient = false;  // cookies were supplied
  CaptureTimings timings;
  double rendered_viewport_width = 0.0;  // window.innerWidth seen by the page
  int screenshot_tiles = 0;
};

class Session {
 public:
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const DeviceProfile& profile() const noexcept { return profile_; }
  bool transient() const noexcept { return transient_; }

 private:
  Session() = default;

  friend std::unique_ptr<Session> open_session(const DeviceProfile&, const CaptureOptions&,
                                               const std::string&);
  friend void inject_cookies(Session&, const std::vector<Cookie>&);
  friend CaptureResult capture(Session&, const std::string&);

  std::unique_ptr<CdpConnection> conn_;
  std::string context_id_;
  std::string session_id_;
  DeviceProfile profile_;
  CaptureOptions options_;  // never holds cookies
  std::vector<Cookie> cookies_;
  bool transient_ = false;
  bool used_ = false;
};

// Connects, creates an isolated browser context and page, and applies
// viewport, pixel ratio, user agent and touch emulation before anything is
// loaded. Disables script execution when options.execute_js is false.
// Cookies in `options` are ignored here; see inject_cookies.
// Throws CaptureError(connection) or CaptureError(session).
std::unique_ptr<Session> open_session(const DeviceProfile& profile, const CaptureOptions& options,
                                      const std::string& endpoint = endpoint_from_env());

// Holds cookies for the target origin; they are installed right before
// navigation. Empty input is a no-op. Throws ValidationError for a bad
// cookie, or when the session already navigated.
void inject_cookies(Session& session, const std::vector<Cookie>& cookies);

// Navigates, waits for the load event and then options.waiting_time_ms,
// collects every frame (out-of-process ones through target attachment),
// listeners, layout and the page size, then scrolls and stitches the
// screenshot. A session captures once.
CaptureResult capture(Session& session, const std::string& url);

// open_session + inject_cookies(options.cookies) + capture.
CaptureResult run_capture(const DeviceProfile& profile, const CaptureOptions& options,
                          const std::string& url, const std::string& endpoint = endpoint_from_env());

// Bounds the number of concurrent sessions.
class SessionPool {
 public:
  static constexpr std::ptrdiff_t kMaxSize = 64;

  explicit SessionPool(std::size_t size);

  // Reads TAPAUDIT_POOL_SIZE; default 2.
  static std::size_t size_from_env();

  class Permit {
   public:
    explicit Permit(SessionPool& pool) : pool_(&pool) { pool_->sem_.acquire(); }
    ~Permit() {
      if (pool_) pool_->sem_.release();
    }
    Permit(Permit&& other) noexcept : pool_(other.pool_) { other.pool_ = nullptr; }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;

   private:
    SessionPool* pool_;
  };

  Permit acquire() { return Permit(*this); }
  std::size_t size() const noexcept { return size_; }

 private:
  std::size_t size_;
  std::counting_semaphore<kMaxSize> sem_;
};

}  // namespace tapaudit
