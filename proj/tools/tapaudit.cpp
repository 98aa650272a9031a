// tapaudit: command-line front end.
//
//   tapaudit analyze <url> --device NAME [--wait-ms N] [--no-js] [--cookie n=v]...
//                          [--list-rates] [--out report.json] [--screenshot out.png]
//   tapaudit analyze --snapshot page.snapshot.json --device NAME [--list-rates] ...
//   tapaudit serve [--host H] [--port P] [--pool-size N] [--storage-dir DIR]
//   tapaudit devices [--json]
//
// Exit codes: 0 ok, 1 internal or I/O, 2 usage/validation, 3 capture, 4 analysis.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include <nlohmann/json.hpp>

#include "tapaudit/analyzer.hpp"
#include "tapaudit/annotator.hpp"
#include "tapaudit/capture.hpp"
#include "tapaudit/errors.hpp"
#include "tapaudit/http_api.hpp"
#include "tapaudit/report.hpp"
#include "tapaudit/service.hpp"

using namespace tapaudit;

namespace {

enum Exit { kOk = 0, kInternal = 1, kValidation = 2, kCapture = 3, kAnalysis = 4 };

struct AnalyzeArgs {
  std::string url;
  std::string device;
  std::int64_t wait_ms = CaptureOptions::kDefaultWaitingTimeMs;
  bool no_js = false;
  std::vector<std::string> cookies;
  bool list_rates = false;
  std::string out;
  std::string screenshot;
  std::string snapshot;
  std::string devices_file;
  std::string endpoint;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t pool_size = 0;
  std::string storage_dir;
  std::string devices_file;
  std::string endpoint;
};

DeviceRegistry load_registry(const std::string& file) {
  return file.empty() ? DeviceRegistry::load_default() : DeviceRegistry::load(file);
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("cannot write " + path);
}

int fail(const char* stage, const std::string& message, int code) {
  std::cerr << "tapaudit: " << stage << " error: " << message << "\n";
  return code;
}

int run_analyze(const AnalyzeArgs& a, const CLI::App& cmd) {
  const bool offline = !a.snapshot.empty();
  if (offline && !a.url.empty()) return fail("validation", "give either a URL or --snapshot, not both", kValidation);
  if (!offline && a.url.empty()) return fail("validation", "a URL or --snapshot is required", kValidation);
  if (offline) {
    for (const char* live : {"--wait-ms", "--no-js", "--cookie", "--endpoint"}) {
      if (cmd.count(live) > 0) {
        return fail("validation", std::string(live) + " only applies to live capture, not --snapshot", kValidation);
      }
    }
  }

  const DeviceRegistry registry = load_registry(a.devices_file);
  const DeviceProfile& profile = registry.lookup(a.device);

  AnalysisReport report;
  Image screenshot;
  if (offline) {
    PageSnapshot snapshot = load_snapshot(a.snapshot);
    if (a.list_rates) snapshot.capture_options.list_success_rates = true;
    report = analyze(snapshot, profile);
    // No capture to draw on: use a blank page of the captured size.
    if (!a.screenshot.empty()) {
      screenshot = Image(static_cast<int>(std::lround(snapshot.page_size_css_px.width * profile.device_pixel_ratio)),
                         static_cast<int>(std::lround(snapshot.page_size_css_px.height * profile.device_pixel_ratio)));
    }
  } else {
    AnalyzeRequest request;
    request.url = a.url;
    request.device = a.device;
    request.waiting_time_ms = a.wait_ms;
    request.execute_js = !a.no_js;
    request.list_success_rates = a.list_rates;
    for (const auto& c : a.cookies) request.cookies.push_back(parse_cookie(c));
    request.validate();

    CaptureOptions options = request.to_options();
    options.device = profile.name;
    CaptureResult captured =
        run_capture(profile, options, request.url, a.endpoint.empty() ? endpoint_from_env() : a.endpoint);
    captured.snapshot.capture_options = options.redacted();
    report = analyze(captured.snapshot, profile);
    screenshot = std::move(captured.screenshot);
  }

  if (!a.screenshot.empty()) {
    try {
      auto annotated = render_overlay(screenshot, report, style_for(report));
      for (auto& w : annotated.warnings) report.warnings.push_back(std::move(w));
      const auto png = encode_png(annotated.image);
      write_file(a.screenshot, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
    } catch (const ValidationError& e) {
      throw AnalysisError("render", e.what());
    }
  }

  const std::string text = serialize_report(report);
  if (a.out.empty() || a.out == "-") {
    std::cout << text << "\n";
  } else {
    write_file(a.out, text + "\n");
    std::cerr << "tapaudit: " << report.elements.size() << " tappable elements, report written to " << a.out << "\n";
  }
  for (const auto& w : report.warnings) std::cerr << "tapaudit: warning: " << w << "\n";
  return kOk;
}

int run_serve(const ServeArgs& a) {
  // Signals are taken by a dedicated thread so stop() never runs in a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const std::size_t pool = a.pool_size > 0 ? a.pool_size : SessionPool::size_from_env();
  const std::string endpoint = a.endpoint.empty() ? endpoint_from_env() : a.endpoint;
  auto storage = std::make_shared<FileStorage>(a.storage_dir.empty() ? FileStorage::dir_from_env()
                                                                     : std::filesystem::path(a.storage_dir));
  auto store = std::make_shared<ReportStore>(storage);
  Service service(load_registry(a.devices_file), std::make_shared<BrowserBackend>(endpoint, pool), store);
  HttpApi api(service);
  const int port = api.bind(a.host, a.port);
  std::cerr << "tapaudit: serving http://" << a.host << ":" << port << " (engine " << endpoint << ", pool " << pool
            << ", storage " << storage->dir().string() << ")" << std::endl;

  std::thread watcher([&] {
    const timespec minute{60, 0};
    while (true) {
      const int sig = sigtimedwait(&signals, nullptr, &minute);
      if (sig == SIGINT || sig == SIGTERM) break;
      store->purge_expired();
    }
    api.stop();
  });
  try {
    api.listen();
  } catch (...) {
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    throw;
  }
  watcher.join();
  return kOk;
}

int run_devices(const std::string& devices_file, bool as_json) {
  const auto profiles = load_registry(devices_file).list_profiles();
  if (as_json) {
    std::cout << nlohmann::json(profiles).dump(2) << "\n";
    return kOk;
  }
  for (const auto& p : profiles) {
    std::cout << std::left << std::setw(22) << p.name << std::right << std::setw(4) << p.viewport_css_px.width << "x"
              << std::left << std::setw(5) << p.viewport_css_px.height << " dpr " << p.device_pixel_ratio << "  "
              << p.ppi << " ppi\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Audit the tap targets of a web page on an emulated phone.", "tapaudit");
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Capture (or load) a page and report tap success rates");
  analyze_cmd->add_option("url", an.url, "Page URL (http or https)");
  analyze_cmd->add_option("--device,-d", an.device, "Device profile name, see `tapaudit devices`")->required();
  analyze_cmd->add_option("--wait-ms", an.wait_ms, "Extra wait after the load event")->capture_default_str();
  analyze_cmd->add_flag("--no-js", an.no_js, "Disable JavaScript while rendering");
  analyze_cmd->add_option("--cookie", an.cookies, "name=value; repeatable. The run is kept out of storage");
  analyze_cmd->add_flag("--list-rates", an.list_rates, "Print success rates onto the screenshot");
  analyze_cmd->add_option("--out,-o", an.out, "Report path (default: stdout)");
  analyze_cmd->add_option("--screenshot", an.screenshot, "Annotated PNG path");
  analyze_cmd->add_option("--snapshot", an.snapshot, "Analyze a stored page snapshot, no browser")
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--devices-file", an.devices_file, "Device catalog (default: shipped data)");
  analyze_cmd->add_option("--endpoint", an.endpoint, "Remote-debugging endpoint (default: $TAPAUDIT_CDP_ENDPOINT)");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--pool-size", sv.pool_size, "Concurrent capture sessions (default: $TAPAUDIT_POOL_SIZE or 2)");
  serve_cmd->add_option("--storage-dir", sv.storage_dir, "Report directory (default: $TAPAUDIT_STORAGE_DIR)");
  serve_cmd->add_option("--devices-file", sv.devices_file);
  serve_cmd->add_option("--endpoint", sv.endpoint);

  std::string devices_file;
  bool devices_json = false;
  auto* devices_cmd = app.add_subcommand("devices", "List device profiles");
  devices_cmd->add_option("--devices-file", devices_file);
  devices_cmd->add_flag("--json", devices_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*analyze_cmd) return run_analyze(an, *analyze_cmd);
    if (*serve_cmd) return run_serve(sv);
    return run_devices(devices_file, devices_json);
  } catch (const ValidationError& e) {
    return fail("validation", e.what(), kValidation);
  } catch (const NotFoundError& e) {
    return fail("validation", e.what(), kValidation);
  } catch (const CaptureError& e) {
    return fail("capture", e.what(), kCapture);
  } catch (const AnalysisError& e) {
    return fail("analysis", e.what(), kAnalysis);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kInternal);
  }
}
