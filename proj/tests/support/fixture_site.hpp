#pragma once

// Serves tests/fixtures/site on 127.0.0.1. The page embeds its iframe from
// http://localhost:<port>, a different origin, so a site-isolating browser
// renders it out of process.

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace tapaudit::testing {

class FixtureSite {
 public:
  explicit FixtureSite(std::string root) : root_(std::move(root)) {
    // A page whose load event arrives only after a slow subresource.
    server_.Get("/slow.html", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<!doctype html><body><img src=\"/slow.gif\"></body>", "text/html");
    });
    server_.Get("/slow.gif", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::seconds(4));
      res.status = 404;
    });
    server_.Get(R"(/([a-z_]+\.html))", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        cookie_headers_.push_back(req.get_header_value("Cookie"));
      }
      std::ifstream in(root_ + "/" + req.matches[1].str());
      if (!in) {
        res.status = 404;
        return;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      std::string body = ss.str();
      const std::string token = "{{FRAME_ORIGIN}}";
      for (auto pos = body.find(token); pos != std::string::npos; pos = body.find(token)) {
        body.replace(pos, token.size(), frame_origin());
      }
      res.set_content(body, "text/html; charset=utf-8");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FixtureSite() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& page) const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/" + page;
  }
  std::string frame_origin() const { return "http://localhost:" + std::to_string(port_); }

  // Cookie header of every page request so far, in arrival order.
  std::vector<std::string> cookie_headers() const {
    std::lock_guard lock(mu_);
    return cookie_headers_;
  }

 private:
  std::string root_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<std::string> cookie_headers_;
};

}  // namespace tapaudit::testing
