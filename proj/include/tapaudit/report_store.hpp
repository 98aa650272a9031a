#pragma once

// Report persistence. Durable reports go to a DurableStorage (files by
// default); transient reports (cookie runs) stay in memory and expire.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tapaudit/report.hpp"

namespace tapaudit {

inline constexpr const char* kStorageDirEnv = "TAPAUDIT_STORAGE_DIR";
inline constexpr std::chrono::minutes kTransientTtl{15};

using Bytes = std::vector<std::uint8_t>;

class DurableStorage {
 public:
  virtual ~DurableStorage() = default;
  // Replaces the whole object; readers never see a partial write.
  virtual void write(const std::string& key, const Bytes& data) = 0;
  virtual std::optional<Bytes> read(const std::string& key) const = 0;
};

// One file per key under `dir`, written to a temporary name and renamed.
class FileStorage : public DurableStorage {
 public:
  explicit FileStorage(std::filesystem::path dir);

  // Directory from TAPAUDIT_STORAGE_DIR, default "./tapaudit-reports".
  static std::filesystem::path dir_from_env();

  void write(const std::string& key, const Bytes& data) override;
  std::optional<Bytes> read(const std::string& key) const override;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct StoredReport {
  std::string report_id;
  std::chrono::system_clock::time_point created_at;
  AnalysisReport report;
  // "<id>.png" in durable storage, or "memory" for transient reports.
  std::string screenshot_ref;
  bool transient = false;
};

class ReportStore {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  explicit ReportStore(std::shared_ptr<DurableStorage> storage,
                       Clock clock = [] { return std::chrono::system_clock::now(); },
                       std::chrono::seconds transient_ttl = kTransientTtl);

  // Stores the report, its annotated PNG and the unannotated capture.
  // Transient reports never touch durable storage. Returns the new report id.
  std::string put(const AnalysisReport& report, Bytes annotated_png, Bytes raw_png, bool transient);

  // Throws ValidationError for a malformed id; nullopt when unknown/expired.
  std::optional<StoredReport> get(const std::string& report_id);
  std::optional<Bytes> screenshot(const std::string& report_id);
  std::optional<Bytes> raw_screenshot(const std::string& report_id);

  // Drops expired transient reports; returns how many.
  std::size_t purge_expired();

  // 128 random bits as 32 lowercase hex digits.
  static std::string new_report_id();
  static bool valid_id(const std::string& id);

 private:
  struct Transient {
    StoredReport meta;
    Bytes png;
    Bytes raw;
  };

  std::optional<Bytes> image(const std::string& report_id, bool raw);

  std::shared_ptr<DurableStorage> storage_;
  Clock clock_;
  std::chrono::seconds ttl_;
  std::mutex mu_;
  std::map<std::string, Transient> transient_;
};

}  // namespace tapaudit
