#include "tapaudit/device_registry.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "tapaudit/errors.hpp"

namespace tapaudit {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

}  // namespace

void DeviceProfile::validate() const {
  if (name.empty()) throw ValidationError("device profile has an empty name");
  const std::string where = "device '" + name + "': ";
  if (!positive(viewport_css_px.width) || !positive(viewport_css_px.height)) {
    throw ValidationError(where + "viewport must be > 0");
  }
  if (!positive(device_pixel_ratio)) throw ValidationError(where + "device_pixel_ratio must be > 0");
  if (!positive(ppi)) throw ValidationError(where + "ppi must be > 0");
  if (user_agent.empty()) throw ValidationError(where + "user_agent must be non-empty");
}

void to_json(nlohmann::json& j, const DeviceProfile& p) {
  j = nlohmann::json{
      {"name", p.name},
      {"viewport_css_px", {{"width", p.viewport_css_px.width}, {"height", p.viewport_css_px.height}}},
      {"device_pixel_ratio", p.device_pixel_ratio},
      {"ppi", p.ppi},
      {"user_agent", p.user_agent},
  };
  if (!p.source.empty()) j["source"] = p.source;
}

void from_json(const nlohmann::json& j, DeviceProfile& p) {
  try {
    p.name = j.at("name").get<std::string>();
    p.viewport_css_px.width = j.at("viewport_css_px").at("width").get<double>();
    p.viewport_css_px.height = j.at("viewport_css_px").at("height").get<double>();
    p.device_pixel_ratio = j.at("device_pixel_ratio").get<double>();
    p.ppi = j.at("ppi").get<double>();
    p.user_agent = j.at("user_agent").get<std::string>();
    p.source = j.value("source", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed device profile: ") + e.what());
  }
}

double css_px_to_mm(double extent_css_px, const DeviceProfile& profile) {
  if (!std::isfinite(extent_css_px) || extent_css_px < 0.0) {
    throw DomainError("pixel extent must be finite and >= 0");
  }
  return extent_css_px * profile.device_pixel_ratio / profile.ppi * kMillimetresPerInch;
}

double mm_to_css_px(double extent_mm, const DeviceProfile& profile) {
  if (!std::isfinite(extent_mm) || extent_mm < 0.0) {
    throw DomainError("physical extent must be finite and >= 0");
  }
  return extent_mm / kMillimetresPerInch * profile.ppi / profile.device_pixel_ratio;
}

DeviceRegistry::DeviceRegistry(std::vector<DeviceProfile> profiles) {
  for (auto& p : profiles) {
    p.validate();
    auto name = p.name;
    if (!profiles_.emplace(name, std::move(p)).second) {
      throw ValidationError("duplicate device name '" + name + "'");
    }
  }
}

DeviceRegistry DeviceRegistry::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("device file must be a JSON object");
  const int version = doc.value("schema_version", 0);
  if (version != kSchemaVersion) {
    throw ValidationError("unsupported device file schema_version " + std::to_string(version));
  }
  std::vector<DeviceProfile> profiles;
  if (doc.contains("devices")) {
    if (!doc["devices"].is_array()) throw ValidationError("'devices' must be an array");
    for (const auto& entry : doc["devices"]) profiles.push_back(entry.get<DeviceProfile>());
  }
  return DeviceRegistry(std::move(profiles));
}

DeviceRegistry DeviceRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open device file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("device file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

DeviceRegistry DeviceRegistry::load_default() {
  if (const char* env = std::getenv("TAPAUDIT_DEVICES_FILE"); env && *env) return load(env);
  return load(TAPAUDIT_DEFAULT_DEVICES_FILE);
}

const DeviceProfile& DeviceRegistry::lookup(std::string_view name) const {
  auto it = profiles_.find(name);
  if (it == profiles_.end()) {
    throw NotFoundError("unknown device '" + std::string(name) + "'; available: " + join(names()));
  }
  return it->second;
}

bool DeviceRegistry::contains(std::string_view name) const {
  return profiles_.find(name) != profiles_.end();
}

std::vector<DeviceProfile> DeviceRegistry::list_profiles() const {
  std::vector<DeviceProfile> out;
  out.reserve(profiles_.size());
  for (const auto& [_, p] : profiles_) out.push_back(p);
  return out;
}

std::vector<std::string> DeviceRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : profiles_) out.push_back(name);
  return out;
}

}  // namespace tapaudit
