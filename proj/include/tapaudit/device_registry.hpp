#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tapaudit {

struct ViewportSize {
  double width = 0.0;   // CSS px
  double height = 0.0;  // CSS px

  friend bool operator==(const ViewportSize&, const ViewportSize&) = default;
};

struct DeviceProfile {
  std::string name;
  ViewportSize viewport_css_px;
  double device_pixel_ratio = 1.0;  // physical px per CSS px
  double ppi = 0.0;                 // physical px per inch
  std::string user_agent;
  std::string source;               // where the numbers come from; informational

  void validate() const;

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

void to_json(nlohmann::json& j, const DeviceProfile& p);
void from_json(const nlohmann::json& j, DeviceProfile& p);

constexpr double kMillimetresPerInch = 25.4;

// extent * dpr / ppi * 25.4. Throws DomainError for negative/non-finite extent.
double css_px_to_mm(double extent_css_px, const DeviceProfile& profile);
double mm_to_css_px(double extent_mm, const DeviceProfile& profile);

// Immutable catalog of emulatable phones, keyed by name.
//
// Data file layout (schemas/devices.schema.json):
//   { "schema_version": 1, "devices": [ { "name", "viewport_css_px": {width,height},
//     "device_pixel_ratio", "ppi", "user_agent", "source" }, ... ] }
class DeviceRegistry {
 public:
  static constexpr int kSchemaVersion = 1;

  DeviceRegistry() = default;
  // Validates every profile and name uniqueness; throws ValidationError.
  explicit DeviceRegistry(std::vector<DeviceProfile> profiles);

  static DeviceRegistry from_json(const nlohmann::json& doc);
  static DeviceRegistry load(const std::filesystem::path& path);
  // The data file shipped with the project (or $TAPAUDIT_DEVICES_FILE).
  static DeviceRegistry load_default();

  // Throws NotFoundError naming the available profiles.
  const DeviceProfile& lookup(std::string_view name) const;
  bool contains(std::string_view name) const;

  // Name-sorted.
  std::vector<DeviceProfile> list_profiles() const;
  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return profiles_.size(); }

 private:
  std::map<std::string, DeviceProfile, std::less<>> profiles_;
};

}  // namespace tapaudit
