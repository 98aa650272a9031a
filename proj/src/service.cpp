#include "tapaudit/service.hpp"

#include <regex>
#include <set>

#include "tapaudit/analyzer.hpp"
#include "tapaudit/annotator.hpp"
#include "tapaudit/errors.hpp"

namespace tapaudit {

using nlohmann::json;

bool is_valid_page_url(const std::string& url) {
  static const std::regex re(R"(^https?://[A-Za-z0-9._~%!$&'()*+,;=-]+(:[0-9]{1,5})?([/?#][^\s]*)?$)",
                             std::regex::icase);
  return std::regex_match(url, re);
}

AnalyzeRequest AnalyzeRequest::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("request body must be a JSON object");
  static const std::set<std::string> kKnown{"url",        "device",  "waiting_time_ms",
                                            "execute_js", "cookies", "list_success_rates"};
  for (const auto& [k, v] : j.items()) {
    if (!kKnown.contains(k)) throw ValidationError("unknown request field '" + k + "'");
  }
  AnalyzeRequest r;
  try {
    r.url = j.at("url").get<std::string>();
    r.device = j.at("device").get<std::string>();
    r.waiting_time_ms = j.value("waiting_time_ms", r.waiting_time_ms);
    r.execute_js = j.value("execute_js", r.execute_js);
    r.list_success_rates = j.value("list_success_rates", r.list_success_rates);
    if (j.contains("cookies") && !j.at("cookies").is_null()) {
      for (const auto& c : j.at("cookies")) {
        if (c.is_string()) {
          r.cookies.push_back(parse_cookie(c.get<std::string>()));
          continue;
        }
        Cookie cookie;
        cookie.name = c.at("name").get<std::string>();
        cookie.value = c.at("value").get<std::string>();
        cookie.domain = c.value("domain", std::string());
        cookie.path = c.value("path", std::string("/"));
        cookie.secure = c.value("secure", false);
        cookie.http_only = c.value("http_only", false);
        r.cookies.push_back(std::move(cookie));
      }
    }
  } catch (const json::exception&) {
    // The message could quote a cookie value; keep it generic.
    throw ValidationError("request fields have the wrong shape (url and device are required strings)");
  }
  r.validate();
  return r;
}

void AnalyzeRequest::validate() const {
  if (url.empty()) throw ValidationError("url must be non-empty");
  if (!is_valid_page_url(url)) throw ValidationError("url '" + url + "' is not an absolute http(s) URL");
  if (device.empty()) throw ValidationError("device must be non-empty");
  to_options().validate();
}

CaptureOptions AnalyzeRequest::to_options() const {
  CaptureOptions o;
  o.device = device;
  o.waiting_time_ms = waiting_time_ms;
  o.execute_js = execute_js;
  o.cookies = cookies;
  o.list_success_rates = list_success_rates;
  return o;
}

BrowserBackend::BrowserBackend(std::string endpoint, std::size_t pool_size)
    : endpoint_(std::move(endpoint)), pool_(pool_size) {}

CaptureResult BrowserBackend::capture(const DeviceProfile& profile, const CaptureOptions& options,
                                      const std::string& url) {
  auto permit = pool_.acquire();
  return run_capture(profile, options, url, endpoint_);
}

Service::Service(DeviceRegistry registry, std::shared_ptr<CaptureBackend> backend,
                 std::shared_ptr<ReportStore> store)
    : registry_(std::move(registry)), backend_(std::move(backend)), store_(std::move(store)) {
  if (!backend_ || !store_) throw ValidationError("service needs a capture backend and a report store");
}

AnalyzeOutcome Service::analyze(const AnalyzeRequest& request) {
  request.validate();
  const DeviceProfile& profile = registry_.lookup(request.device);
  CaptureOptions options = request.to_options();
  options.device = profile.name;

  CaptureResult captured = backend_->capture(profile, options, request.url);
  const bool transient = captured.transient || options.cookies_supplied();
  captured.snapshot.capture_options = options.redacted();

  AnalysisReport report = tapaudit::analyze(captured.snapshot, profile);
  Bytes png;
  Bytes raw;
  try {
    raw = encode_png(captured.screenshot);
    auto annotated = render_overlay(captured.screenshot, report, style_for(report));
    for (auto& w : annotated.warnings) report.warnings.push_back(std::move(w));
    png = encode_png(annotated.image);
  } catch (const Error& e) {
    throw AnalysisError("render", e.what());
  }
  const std::string id = store_->put(report, std::move(png), std::move(raw), transient);
  return {id, transient};
}

std::optional<StoredReport> Service::report(const std::string& report_id) { return store_->get(report_id); }

std::optional<Bytes> Service::screenshot(const std::string& report_id) { return store_->screenshot(report_id); }

std::optional<Bytes> Service::raw_screenshot(const std::string& report_id) {
  return store_->raw_screenshot(report_id);
}

}  // namespace tapaudit
