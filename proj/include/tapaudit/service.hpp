#pragma once

// capture -> analyze -> annotate -> store, shared by the HTTP API and tests.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tapaudit/capture.hpp"
#include "tapaudit/device_registry.hpp"
#include "tapaudit/report_store.hpp"

namespace tapaudit {

struct AnalyzeRequest {
  std::string url;
  std::string device;
  std::int64_t waiting_time_ms = CaptureOptions::kDefaultWaitingTimeMs;
  bool execute_js = true;
  std::vector<Cookie> cookies;
  bool list_success_rates = false;

  // Cookies may be given as "name=value" strings or as objects with
  // name, value and optional domain, path, secure, http_only.
  // Throws ValidationError.
  static AnalyzeRequest from_json(const nlohmann::json& j);
  void validate() const;
  CaptureOptions to_options() const;
};

// Checks that `url` is an absolute http(s) URL with a host.
bool is_valid_page_url(const std::string& url);

class CaptureBackend {
 public:
  virtual ~CaptureBackend() = default;
  virtual CaptureResult capture(const DeviceProfile& profile, const CaptureOptions& options,
                                const std::string& url) = 0;
};

// Real browser through the remote-debugging endpoint, bounded by a pool.
class BrowserBackend : public CaptureBackend {
 public:
  BrowserBackend(std::string endpoint, std::size_t pool_size);
  CaptureResult capture(const DeviceProfile& profile, const CaptureOptions& options,
                        const std::string& url) override;

 private:
  std::string endpoint_;
  SessionPool pool_;
};

struct AnalyzeOutcome {
  std::string report_id;
  bool transient = false;
};

class Service {
 public:
  Service(DeviceRegistry registry, std::shared_ptr<CaptureBackend> backend, std::shared_ptr<ReportStore> store);

  // Throws ValidationError, NotFoundError (unknown device), CaptureError or
  // AnalysisError.
  AnalyzeOutcome analyze(const AnalyzeRequest& request);

  std::optional<StoredReport> report(const std::string& report_id);
  std::optional<Bytes> screenshot(const std::string& report_id);
  std::optional<Bytes> raw_screenshot(const std::string& report_id);
  std::vector<DeviceProfile> devices() const { return registry_.list_profiles(); }
  const DeviceRegistry& registry() const noexcept { return registry_; }

 private:
  DeviceRegistry registry_;
  std::shared_ptr<CaptureBackend> backend_;
  std::shared_ptr<ReportStore> store_;
};

}  // namespace tapaudit
