#include "tapaudit/cdp_connection.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <httplib.h>

#include "tapaudit/errors.hpp"

namespace tapaudit {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxQueuedEvents = 100000;

struct WsUrl {
  std::string host;
  std::string port;
  std::string target;
};

WsUrl parse_ws_url(const std::string& url) {
  static const std::regex re(R"(^ws://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw CaptureError(CaptureFailure::connection, "unsupported WebSocket URL '" + url + "'");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "80", m[3].matched ? m[3].str() : "/"};
}

}  // namespace

std::string endpoint_from_env() {
  const char* v = std::getenv(kEndpointEnv);
  return (v && *v) ? v : kDefaultEndpoint;
}

std::string discover_websocket_url(const std::string& endpoint, std::chrono::milliseconds timeout) {
  if (endpoint.rfind("ws://", 0) == 0) return endpoint;
  if (endpoint.rfind("http://", 0) != 0) {
    throw CaptureError(CaptureFailure::connection, "endpoint must be http:// or ws://: " + endpoint);
  }
  httplib::Client cli(endpoint);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  auto res = cli.Get("/json/version");
  if (!res) {
    throw CaptureError(CaptureFailure::connection,
                       "browser endpoint " + endpoint + " unreachable (" + httplib::to_string(res.error()) + ")");
  }
  if (res->status != 200) {
    throw CaptureError(CaptureFailure::connection,
                       "browser endpoint " + endpoint + " answered HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body).at("webSocketDebuggerUrl").get<std::string>();
  } catch (const json::exception& e) {
    throw CaptureError(CaptureFailure::connection, std::string("bad /json/version reply: ") + e.what());
  }
}

struct CdpConnection::Impl {
  net::io_context ioc;
  websocket::stream<beast::tcp_stream> ws{ioc};
  beast::flat_buffer buffer;
  std::thread thread;

  mutable std::mutex mu;
  std::condition_variable cv;
  std::map<std::int64_t, json> replies;
  std::deque<CdpEvent> events;
  std::uint64_t last_seq = 0;
  bool closed = false;
  std::string close_reason;

  // Touched only on the io thread.
  std::deque<std::string> outbox;
  bool writing = false;

  std::atomic<std::int64_t> next_id{1};

  void fail(const std::string& why) {
    std::lock_guard lock(mu);
    if (!closed) {
      closed = true;
      close_reason = why;
    }
    cv.notify_all();
  }

  void dispatch(const std::string& text) {
    json msg = json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return;
    std::lock_guard lock(mu);
    if (auto id = msg.find("id"); id != msg.end() && id->is_number_integer()) {
      const auto key = id->get<std::int64_t>();
      replies[key] = std::move(msg);
    } else if (auto m = msg.find("method"); m != msg.end() && m->is_string()) {
      CdpEvent ev;
      ev.seq = ++last_seq;
      ev.method = m->get<std::string>();
      if (auto s = msg.find("sessionId"); s != msg.end() && s->is_string()) ev.session_id = *s;
      if (auto p = msg.find("params"); p != msg.end()) ev.params = std::move(*p);
      events.push_back(std::move(ev));
      if (events.size() > kMaxQueuedEvents) events.pop_front();
    }
    cv.notify_all();
  }

  void read_loop() {
    ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        fail("connection closed: " + ec.message());
        return;
      }
      dispatch(beast::buffers_to_string(buffer.data()));
      buffer.consume(buffer.size());
      read_loop();
    });
  }

  void write_next() {
    writing = true;
    ws.text(true);
    ws.async_write(net::buffer(outbox.front()), [this](beast::error_code ec, std::size_t) {
      outbox.pop_front();
      if (ec) {
        writing = false;
        fail("write failed: " + ec.message());
        return;
      }
      if (outbox.empty()) {
        writing = false;
      } else {
        write_next();
      }
    });
  }
};

CdpConnection::CdpConnection(const std::string& websocket_url, std::chrono::milliseconds connect_timeout)
    : impl_(std::make_unique<Impl>()) {
  const WsUrl u = parse_ws_url(websocket_url);
  try {
    tcp::resolver resolver(impl_->ioc);
    auto& stream = beast::get_lowest_layer(impl_->ws);
    stream.expires_after(connect_timeout);
    stream.connect(resolver.resolve(u.host, u.port));
    impl_->ws.handshake(u.host + ":" + u.port, u.target);
    stream.expires_never();
  } catch (const boost::system::system_error& e) {
    throw CaptureError(CaptureFailure::connection,
                       "cannot open " + websocket_url + ": " + e.code().message());
  }
  impl_->ws.read_message_max(std::size_t{1} << 30);
  impl_->read_loop();
  impl_->thread = std::thread([impl = impl_.get()] {
    try {
      impl->ioc.run();
    } catch (const std::exception& e) {
      impl->fail(e.what());
    }
    impl->fail("connection closed");
  });
}

CdpConnection::~CdpConnection() {
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    auto& sock = beast::get_lowest_layer(impl->ws).socket();
    sock.shutdown(tcp::socket::shutdown_both, ec);
    sock.close(ec);
  });
  if (impl_->thread.joinable()) impl_->thread.join();
}

json CdpConnection::send(const std::string& method, const json& params, const std::string& session_id,
                         std::chrono::milliseconds timeout) {
  const std::int64_t id = impl_->next_id++;
  json msg{{"id", id}, {"method", method}, {"params", params.is_null() ? json::object() : params}};
  if (!session_id.empty()) msg["sessionId"] = session_id;
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->closed) throw CaptureError(CaptureFailure::connection, impl_->close_reason);
  }
  net::post(impl_->ioc, [impl = impl_.get(), text = msg.dump()]() mutable {
    impl->outbox.push_back(std::move(text));
    if (!impl->writing) impl->write_next();
  });

  std::unique_lock lock(impl_->mu);
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (auto it = impl_->replies.find(id); it != impl_->replies.end()) {
      json reply = std::move(it->second);
      impl_->replies.erase(it);
      lock.unlock();
      if (auto err = reply.find("error"); err != reply.end()) {
        throw CaptureError(CaptureFailure::protocol,
                           method + " failed: " + err->value("message", std::string("unknown error")));
      }
      return reply.value("result", json::object());
    }
    if (impl_->closed) throw CaptureError(CaptureFailure::connection, impl_->close_reason);
    if (impl_->cv.wait_until(lock, deadline) == std::cv_status::timeout &&
        !impl_->replies.contains(id)) {
      throw CaptureError(CaptureFailure::protocol, "no reply to " + method + " within " +
                                                       std::to_string(timeout.count()) + " ms");
    }
  }
}

std::optional<CdpEvent> CdpConnection::wait_for_event(const std::function<bool(const CdpEvent&)>& pred,
                                                      Clock::time_point deadline) {
  std::unique_lock lock(impl_->mu);
  for (;;) {
    for (auto it = impl_->events.begin(); it != impl_->events.end(); ++it) {
      if (pred(*it)) {
        CdpEvent ev = std::move(*it);
        impl_->events.erase(it);
        return ev;
      }
    }
    if (impl_->closed) throw CaptureError(CaptureFailure::connection, impl_->close_reason);
    if (impl_->cv.wait_until(lock, deadline) == std::cv_status::timeout) {
      // One last scan: the event may have landed with the timeout.
      for (auto it = impl_->events.begin(); it != impl_->events.end(); ++it) {
        if (pred(*it)) {
          CdpEvent ev = std::move(*it);
          impl_->events.erase(it);
          return ev;
        }
      }
      return std::nullopt;
    }
  }
}

std::vector<CdpEvent> CdpConnection::take_events(const std::function<bool(const CdpEvent&)>& pred) {
  std::lock_guard lock(impl_->mu);
  std::vector<CdpEvent> out;
  std::deque<CdpEvent> keep;
  for (auto& ev : impl_->events) {
    if (pred(ev)) {
      out.push_back(std::move(ev));
    } else {
      keep.push_back(std::move(ev));
    }
  }
  impl_->events.swap(keep);
  return out;
}

std::uint64_t CdpConnection::last_event_seq() const {
  std::lock_guard lock(impl_->mu);
  return impl_->last_seq;
}

bool CdpConnection::connected() const {
  std::lock_guard lock(impl_->mu);
  return !impl_->closed;
}

}  // namespace tapaudit
