#include "tapaudit/report_store.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <system_error>

#include "tapaudit/errors.hpp"

namespace tapaudit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_key(const std::string& key) {
  static const std::regex re(R"([A-Za-z0-9][A-Za-z0-9._-]*)");
  if (!std::regex_match(key, re)) throw ValidationError("bad storage key '" + key + "'");
}

std::int64_t to_millis(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

}  // namespace

FileStorage::FileStorage(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("cannot create storage directory " + dir_.string() + ": " + ec.message());
}

fs::path FileStorage::dir_from_env() {
  const char* v = std::getenv(kStorageDirEnv);
  return (v && *v) ? fs::path(v) : fs::path("tapaudit-reports");
}

void FileStorage::write(const std::string& key, const Bytes& data) {
  check_key(key);
  const fs::path final_path = dir_ / key;
  fs::path tmp = final_path;
  tmp += ".tmp" + ReportStore::new_report_id().substr(0, 8);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::optional<Bytes> FileStorage::read(const std::string& key) const {
  check_key(key);
  std::ifstream in(dir_ / key, std::ios::binary);
  if (!in) return std::nullopt;
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ReportStore::ReportStore(std::shared_ptr<DurableStorage> storage, Clock clock,
                         std::chrono::seconds transient_ttl)
    : storage_(std::move(storage)), clock_(std::move(clock)), ttl_(transient_ttl) {
  if (!storage_) throw ValidationError("report store needs a storage backend");
}

std::string ReportStore::new_report_id() {
  static thread_local std::random_device rd;
  static const char* hex = "0123456789abcdef";
  std::string id;
  id.reserve(32);
  for (int i = 0; i < 4; ++i) {
    std::uint32_t v = rd();
    for (int k = 0; k < 8; ++k) {
      id.push_back(hex[v & 0xF]);
      v >>= 4;
    }
  }
  return id;
}

bool ReportStore::valid_id(const std::string& id) {
  static const std::regex re("[0-9a-f]{32}");
  return std::regex_match(id, re);
}

std::string ReportStore::put(const AnalysisReport& report, Bytes annotated_png, Bytes raw_png, bool transient) {
  const std::string id = new_report_id();
  StoredReport meta{id, clock_(), report, transient ? "memory" : id + ".png", transient};
  if (transient) {
    std::lock_guard lock(mu_);
    transient_[id] = Transient{std::move(meta), std::move(annotated_png), std::move(raw_png)};
    return id;
  }
  // Images first: a visible record always has its screenshots.
  storage_->write(id + ".png", annotated_png);
  storage_->write(id + ".raw.png", raw_png);
  const json record{{"report_id", id},
                    {"created_at_ms", to_millis(meta.created_at)},
                    {"screenshot_ref", meta.screenshot_ref},
                    {"transient", false},
                    {"report", report}};
  const std::string text = record.dump();
  storage_->write(id + ".json", Bytes(text.begin(), text.end()));
  return id;
}

std::optional<StoredReport> ReportStore::get(const std::string& report_id) {
  if (!valid_id(report_id)) throw ValidationError("malformed report id '" + report_id + "'");
  {
    std::lock_guard lock(mu_);
    if (auto it = transient_.find(report_id); it != transient_.end()) {
      if (clock_() - it->second.meta.created_at >= ttl_) {
        transient_.erase(it);
        return std::nullopt;
      }
      return it->second.meta;
    }
  }
  const auto bytes = storage_->read(report_id + ".json");
  if (!bytes) return std::nullopt;
  try {
    const json record = json::parse(bytes->begin(), bytes->end());
    StoredReport out;
    out.report_id = record.at("report_id");
    out.created_at = std::chrono::system_clock::time_point(
        std::chrono::milliseconds(record.at("created_at_ms").get<std::int64_t>()));
    out.report = record.at("report").get<AnalysisReport>();
    out.screenshot_ref = record.at("screenshot_ref");
    out.transient = false;
    return out;
  } catch (const json::exception& e) {
    throw Error("stored report " + report_id + " is corrupt: " + e.what());
  }
}

std::optional<Bytes> ReportStore::screenshot(const std::string& report_id) { return image(report_id, false); }

std::optional<Bytes> ReportStore::raw_screenshot(const std::string& report_id) { return image(report_id, true); }

std::optional<Bytes> ReportStore::image(const std::string& report_id, bool raw) {
  if (!valid_id(report_id)) throw ValidationError("malformed report id '" + report_id + "'");
  {
    std::lock_guard lock(mu_);
    if (auto it = transient_.find(report_id); it != transient_.end()) {
      if (clock_() - it->second.meta.created_at >= ttl_) {
        transient_.erase(it);
        return std::nullopt;
      }
      return raw ? it->second.raw : it->second.png;
    }
  }
  if (!storage_->read(report_id + ".json")) return std::nullopt;
  return storage_->read(report_id + (raw ? ".raw.png" : ".png"));
}

std::size_t ReportStore::purge_expired() {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  return std::erase_if(transient_, [&](const auto& kv) { return now - kv.second.meta.created_at >= ttl_; });
}

}  // namespace tapaudit
