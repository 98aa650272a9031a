#pragma once

// HTTP+JSON front end:
//   POST /api/analyze                     -> {"report_id", "transient"}
//   GET  /api/reports/{id}                -> report document
//   GET  /api/reports/{id}/screenshot.png -> annotated PNG
//   GET  /api/devices                     -> [device profile, ...]
// Errors are {"error": message, ...} with 400/404/502/504/500.

#include <memory>
#include <string>

#include "tapaudit/service.hpp"

namespace tapaudit {

class HttpApi {
 public:
  explicit HttpApi(Service& service);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port. Throws Error.
  int bind(const std::string& host, int port);
  // Serves until stop(). Call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tapaudit
