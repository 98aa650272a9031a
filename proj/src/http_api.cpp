#include "tapaudit/http_api.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "tapaudit/errors.hpp"
#include "tapaudit/report.hpp"

namespace tapaudit {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  send_json(res, status, extra);
}

// Maps a pipeline exception onto a status code and an error body.
void send_exception(httplib::Response& res, const Service& service, std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what(), {{"stage", "validation"}});
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what(), {{"stage", "validation"}, {"devices", service.registry().names()}});
  } catch (const CaptureError& e) {
    const int status = e.kind() == CaptureFailure::load_timeout ? 504 : 502;
    send_error(res, status, e.what(), {{"stage", "capture"}, {"kind", to_string(e.kind())}});
  } catch (const AnalysisError& e) {
    send_error(res, 500, e.what(), {{"stage", "analysis"}, {"kind", e.stage()}});
  } catch (const std::exception& e) {
    send_error(res, 500, e.what(), {{"stage", "internal"}});
  }
}

}  // namespace

struct HttpApi::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) { routes(); }

  void image(const httplib::Request& req, httplib::Response& res, bool raw) {
    const std::string id = req.path_params.at("id");
    try {
      auto png = raw ? service.raw_screenshot(id) : service.screenshot(id);
      if (!png) return send_error(res, 404, "no report '" + id + "'");
      res.status = 200;
      res.set_content(std::string(png->begin(), png->end()), "image/png");
    } catch (...) {
      send_exception(res, service, std::current_exception());
    }
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Post("/api/analyze", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::parse_error&) {
          throw ValidationError("request body is not valid JSON");
        }
        const auto outcome = service.analyze(AnalyzeRequest::from_json(body));
        send_json(res, 200, {{"report_id", outcome.report_id}, {"transient", outcome.transient}});
      } catch (...) {
        send_exception(res, service, std::current_exception());
      }
    });

    server.Get("/api/reports/:id", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.at("id");
      try {
        auto stored = service.report(id);
        if (!stored) return send_error(res, 404, "no report '" + id + "'");
        res.status = 200;
        res.set_header("X-Report-Transient", stored->transient ? "true" : "false");
        res.set_content(serialize_report(stored->report), "application/json");
      } catch (...) {
        send_exception(res, service, std::current_exception());
      }
    });

    server.Get("/api/reports/:id/screenshot.png",
               [this](const httplib::Request& req, httplib::Response& res) { image(req, res, false); });
    server.Get("/api/reports/:id/raw.png",
               [this](const httplib::Request& req, httplib::Response& res) { image(req, res, true); });

    server.Get("/api/devices", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json(service.devices()));
    });
  }
};

HttpApi::HttpApi(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpApi::listen() {
  if (!impl_->server.listen_after_bind()) throw Error("HTTP server stopped with an error");
}

void HttpApi::stop() { impl_->server.stop(); }

}  // namespace tapaudit
