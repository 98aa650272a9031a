#include <catch_amalgamated.hpp>

#include "support/json_compare.hpp"
#include "tapaudit/analyzer.hpp"
#include "tapaudit/report.hpp"

using namespace tapaudit;
using namespace tapaudit::testing;
using nlohmann::json;

TEST_CASE("fixture snapshots analyze to their golden reports") {
  const std::string dir = TAPAUDIT_FIXTURES;
  const json manifest = read_json(dir + "/goldens/manifest.json");
  REQUIRE(manifest.size() >= 8);
  const auto registry = DeviceRegistry::load_default();
  for (const auto& entry : manifest) {
    const std::string snapshot_path = dir + "/" + entry.at("snapshot").get<std::string>();
    INFO(snapshot_path << " on " << entry.at("device").get<std::string>());
    const auto report = analyze(load_snapshot(snapshot_path), registry.lookup(entry.at("device").get<std::string>()));
    const json golden = read_json(dir + "/" + entry.at("golden").get<std::string>());
    CHECK(json_diff(json(report), golden, 1e-12) == "");
    // The serialized form round-trips to the same report.
    CHECK(parse_report(serialize_report(report)) == report);
  }
}

TEST_CASE("golden suite covers every detection rule") {
  const std::string dir = TAPAUDIT_FIXTURES;
  const json manifest = read_json(dir + "/goldens/manifest.json");
  std::set<std::string> sources;
  bool overlap = false;
  bool excluded_something = false;
  for (const auto& entry : manifest) {
    const json golden = read_json(dir + "/" + entry.at("golden").get<std::string>());
    const json snapshot = read_json(dir + "/" + entry.at("snapshot").get<std::string>());
    std::size_t in_snapshot = 0;
    for (const auto& f : snapshot.at("frames")) in_snapshot += f.at("elements").size();
    excluded_something |= golden.at("elements").size() < in_snapshot;
    for (const auto& e : golden.at("elements")) {
      for (const auto& s : e.at("sources")) sources.insert(s.get<std::string>());
      overlap |= e.at("candidate_ids").size() > 1;
    }
  }
  CHECK(sources == std::set<std::string>{"tag", "event_attribute", "event_listener", "iframe_embedded"});
  CHECK(overlap);
  CHECK(excluded_something);
}
