#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "support/json_compare.hpp"
#include "tapaudit/image.hpp"
#include "tapaudit/report.hpp"
#include "tapaudit/service.hpp"

using namespace tapaudit;
using namespace tapaudit::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = TAPAUDIT_FIXTURES;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string("\"") + TAPAUDIT_CLI_BIN + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string snapshot(const std::string& name) { return "\"" + kFixtures + "/snapshots/" + name + ".snapshot.json\""; }

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("tapaudit-cli-" + ReportStore::new_report_id() + "-" + name);
}

class SnapshotBackend : public CaptureBackend {
 public:
  explicit SnapshotBackend(PageSnapshot s) : snapshot_(std::move(s)) {}
  CaptureResult capture(const DeviceProfile& profile, const CaptureOptions&, const std::string&) override {
    CaptureResult r;
    r.snapshot = snapshot_;
    r.screenshot = Image(static_cast<int>(snapshot_.page_size_css_px.width * profile.device_pixel_ratio),
                         static_cast<int>(snapshot_.page_size_css_px.height * profile.device_pixel_ratio));
    return r;
  }

 private:
  PageSnapshot snapshot_;
};

class NullStorage : public DurableStorage {
 public:
  void write(const std::string&, const Bytes&) override {}
  std::optional<Bytes> read(const std::string&) const override { return std::nullopt; }
};

}  // namespace

TEST_CASE("offline analyze reproduces every golden report") {
  const json manifest = read_json(kFixtures + "/goldens/manifest.json");
  for (const auto& entry : manifest) {
    INFO(entry.dump());
    const auto r = run("analyze --snapshot \"" + kFixtures + "/" + entry.at("snapshot").get<std::string>() +
                       "\" --device \"" + entry.at("device").get<std::string>() + "\"");
    REQUIRE(r.code == 0);
    CHECK(json_diff(json::parse(r.out), read_json(kFixtures + "/" + entry.at("golden").get<std::string>()), 1e-12) ==
          "");
  }
}

TEST_CASE("analyze writes both artifacts") {
  const auto out = temp_path("report.json");
  const auto png = temp_path("shot.png");
  const auto labelled = temp_path("labelled.png");
  REQUIRE(run("analyze --snapshot " + snapshot("overlap") + " --device \"iPhone 13\" --out " + out.string() +
              " --screenshot " + png.string())
              .code == 0);
  REQUIRE(run("analyze --snapshot " + snapshot("overlap") + " --device \"iPhone 13\" --list-rates --out /dev/null" +
              " --screenshot " + labelled.string())
              .code == 0);
  const auto report = parse_report(json(read_json(out.string())).dump());
  CHECK(report.elements.size() == 6);

  auto load = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
  };
  const Image a = load(png);
  const Image b = load(labelled);
  CHECK(a.width() == 1170);
  CHECK(a.height() == 2400);
  CHECK(b.width() == a.width());
  CHECK_FALSE(a == b);
  for (const auto& p : {out, png, labelled}) fs::remove(p);
}

TEST_CASE("cli exit codes") {
  CHECK(run("analyze --snapshot " + snapshot("basic")).code == 2);
  CHECK(run("analyze https://example.test/").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("analyze --snapshot " + snapshot("basic") + " --device \"Nokia 3310\"").code == 2);
  CHECK(run("analyze --snapshot /nonexistent.json --device \"iPhone 13\"").code == 2);
  CHECK(run("analyze --snapshot " + snapshot("basic") + " --device \"iPhone 13\" --cookie a=b").code == 2);
  CHECK(run("analyze --device \"iPhone 13\"").code == 2);
  CHECK(run("analyze not-a-url --device \"iPhone 13\" --endpoint http://127.0.0.1:1").code == 2);
  CHECK(run("analyze https://example.test/ --device \"iPhone 13\" --wait-ms -5 --endpoint http://127.0.0.1:1").code ==
        2);
  // Valid requests that reach capture fail there, not in validation.
  CHECK(run("analyze https://example.test/ --device \"iPhone 13\" --wait-ms 0 --endpoint http://127.0.0.1:1").code ==
        3);
  CHECK(run("analyze https://example.test/ --device \"iPhone 13\" --no-js --cookie sid=1 --endpoint "
            "http://127.0.0.1:1")
            .code == 3);

  const auto broken = temp_path("broken.snapshot.json");
  json doc = read_json(kFixtures + "/snapshots/basic.snapshot.json");
  doc["frames"].push_back(doc["frames"][0]);
  std::ofstream(broken) << doc.dump();
  CHECK(run("analyze --snapshot " + broken.string() + " --device \"iPhone 13\"").code == 4);
  std::ofstream(broken) << "{ not json";
  CHECK(run("analyze --snapshot " + broken.string() + " --device \"iPhone 13\"").code == 2);
  fs::remove(broken);

  CHECK(run("--help").code == 0);
}

TEST_CASE("devices listing") {
  const auto r = run("devices --json");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out) == json(DeviceRegistry::load_default().list_profiles()));
  const auto text = run("devices");
  CHECK(text.code == 0);
  CHECK(text.out.find("iPhone 13 ") != std::string::npos);
}

TEST_CASE("API and CLI reports for the same snapshot are identical") {
  for (const std::string name : {"basic", "iframe_offset", "overlap"}) {
    INFO(name);
    const PageSnapshot snap = load_snapshot(kFixtures + "/snapshots/" + name + ".snapshot.json");
    auto store = std::make_shared<ReportStore>(std::make_shared<NullStorage>());
    Service service(DeviceRegistry::load_default(), std::make_shared<SnapshotBackend>(snap), store);
    AnalyzeRequest req;
    req.url = snap.url;
    req.device = "iPhone 13";
    req.cookies = {parse_cookie("k=v")};  // keeps the record in memory
    const auto id = service.analyze(req).report_id;
    json api = json::parse(serialize_report(service.report(id)->report));

    const auto cli = run("analyze --snapshot " + snapshot(name) + " --device \"iPhone 13\"");
    REQUIRE(cli.code == 0);
    json cli_doc = json::parse(cli.out);
    CHECK(same_shape(api, cli_doc));
    // Only the cookie flag differs.
    CHECK(api["options"]["cookies_supplied"] == true);
    api["options"]["cookies_supplied"] = false;
    CHECK(json_diff(api, cli_doc, 0.0) == "");
  }
}
