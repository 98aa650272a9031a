#pragma once

// Starts a throwaway headless Chromium with remote debugging on an ephemeral
// port. Used by the browser-gated tests when TAPAUDIT_CHROME_BIN is set.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

namespace tapaudit::testing {

class ChromeProcess {
 public:
  explicit ChromeProcess(const std::string& binary, std::chrono::seconds timeout = std::chrono::seconds(30)) {
    profile_dir_ = std::filesystem::temp_directory_path() / ("tapaudit-chrome-" + std::to_string(::getpid()) + "-" +
                                                             std::to_string(counter()++));
    std::filesystem::create_directories(profile_dir_);
    std::vector<std::string> args{binary,
                                  "--headless=new",
                                  "--no-sandbox",
                                  "--disable-gpu",
                                  "--no-first-run",
                                  "--no-default-browser-check",
                                  "--site-per-process",
                                  "--hide-scrollbars",
                                  "--remote-debugging-port=0",
                                  "--user-data-dir=" + profile_dir_.string(),
                                  "about:blank"};
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid_ = ::fork();
    if (pid_ < 0) throw std::runtime_error("fork failed");
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(fds[1], STDERR_FILENO);
      const int devnull = ::open("/dev/null", O_WRONLY);
      if (devnull >= 0) ::dup2(devnull, STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(binary.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    ::fcntl(fds[0], F_SETFL, O_NONBLOCK);

    static const std::regex listening(R"(DevTools listening on (ws://\S+))");
    std::string log;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      char buf[4096];
      const ssize_t n = ::read(fds[0], buf, sizeof buf);
      if (n > 0) {
        log.append(buf, static_cast<std::size_t>(n));
        std::smatch m;
        if (std::regex_search(log, m, listening)) {
          ws_url_ = m[1];
          break;
        }
      } else if (n == 0) {
        break;
      } else {
        ::usleep(20000);
      }
    }
    ::close(fds[0]);
    if (ws_url_.empty()) {
      stop();
      throw std::runtime_error("browser did not start: " + log.substr(0, 2000));
    }
  }

  ~ChromeProcess() { stop(); }
  ChromeProcess(const ChromeProcess&) = delete;
  ChromeProcess& operator=(const ChromeProcess&) = delete;

  const std::string& websocket_url() const noexcept { return ws_url_; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }

  void stop() {
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
    std::error_code ec;
    std::filesystem::remove_all(profile_dir_, ec);
  }

  pid_t pid_ = -1;
  std::string ws_url_;
  std::filesystem::path profile_dir_;
};

}  // namespace tapaudit::testing
