#pragma once

// Minimal client for the browser remote-debugging protocol: one WebSocket,
// JSON commands with numeric ids, flattened target sessions.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tapaudit {

inline constexpr const char* kEndpointEnv = "TAPAUDIT_CDP_ENDPOINT";
inline constexpr const char* kDefaultEndpoint = "http://127.0.0.1:9222";

// Endpoint from TAPAUDIT_CDP_ENDPOINT, or the default.
std::string endpoint_from_env();

// Resolves an endpoint to a browser WebSocket URL. "ws://" endpoints are
// returned unchanged; "http://host:port" is queried at /json/version.
// Throws CaptureError(connection).
std::string discover_websocket_url(const std::string& endpoint,
                                   std::chrono::milliseconds timeout = std::chrono::seconds(5));

struct CdpEvent {
  std::uint64_t seq = 0;  // arrival order, starting at 1
  std::string method;
  std::string session_id;  // empty for browser-level events
  nlohmann::json params;
};

class CdpConnection {
 public:
  using Clock = std::chrono::steady_clock;

  // Connects and completes the WebSocket handshake. Throws
  // CaptureError(connection).
  explicit CdpConnection(const std::string& websocket_url,
                         std::chrono::milliseconds connect_timeout = std::chrono::seconds(5));
  ~CdpConnection();

  CdpConnection(const CdpConnection&) = delete;
  CdpConnection& operator=(const CdpConnection&) = delete;

  // Sends a command and waits for its reply. Returns the "result" object.
  // Error replies and timeouts throw CaptureError(protocol); a dropped socket
  // throws CaptureError(connection).
  nlohmann::json send(const std::string& method, const nlohmann::json& params = nlohmann::json::object(),
                      const std::string& session_id = {},
                      std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Removes and returns the earliest queued event matching `pred`, waiting
  // until `deadline`.
  std::optional<CdpEvent> wait_for_event(const std::function<bool(const CdpEvent&)>& pred,
                                         Clock::time_point deadline);

  // Removes and returns every queued event matching `pred`, without waiting.
  std::vector<CdpEvent> take_events(const std::function<bool(const CdpEvent&)>& pred);

  // Sequence number of the most recent event received so far.
  std::uint64_t last_event_seq() const;

  bool connected() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tapaudit
