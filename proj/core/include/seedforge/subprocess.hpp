#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace seedforge {

struct SpawnOptions {
  std::vector<std::string> argv;  // argv[0] is the executable (PATH-resolved)
  std::filesystem::path cwd;
  std::chrono::milliseconds timeout{30'000};
  std::vector<std::pair<std::string, std::string>> extra_env;
  bool isolate_network = false;  // unshare(CLONE_NEWUSER | CLONE_NEWNET)
  std::size_t max_capture_bytes = 65536;
};

struct SpawnResult {
  int exit_code = -1;  // meaningful when !signaled && !timed_out
  bool timed_out = false;
  bool signaled = false;
  int term_signal = 0;
  std::string stdout_text;  // tail-capped at max_capture_bytes
  std::string stderr_text;
};

/// Runs a child process with stdin closed, stdout/stderr captured, and a
/// hard deadline after which the whole process group is killed.
SpawnResult run_process(const SpawnOptions& options);

/// Whether this kernel lets us drop into a fresh user+network namespace.
/// Probed once per process.
bool sandbox_supports_network_isolation();

}  // namespace seedforge
