#include "seedforge/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace seedforge {

namespace {

void append_capped(std::string& buffer, const char* data, std::size_t n, std::size_t cap) {
  buffer.append(data, n);
  if (buffer.size() > cap) {
    buffer.erase(0, buffer.size() - cap);  // keep the tail
  }
}

[[noreturn]] void child_exec(const SpawnOptions& options, int out_fd, int err_fd) {
  // Own process group so the parent can kill the whole tree.
  setpgid(0, 0);

  if (options.isolate_network) {
    if (unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0) {
      dprintf(err_fd, "sandbox: unshare failed: %s\n", std::strerror(errno));
      _exit(126);
    }
  }

  if (!options.cwd.empty() && chdir(options.cwd.c_str()) != 0) {
    dprintf(err_fd, "sandbox: chdir(%s) failed: %s\n", options.cwd.c_str(),
            std::strerror(errno));
    _exit(126);
  }

  const int devnull = open("/dev/null", O_RDONLY);
  if (devnull >= 0) dup2(devnull, STDIN_FILENO);
  dup2(out_fd, STDOUT_FILENO);
  dup2(err_fd, STDERR_FILENO);

  for (const auto& [name, value] : options.extra_env) {
    setenv(name.c_str(), value.c_str(), 1);
  }

  std::vector<char*> argv;
  argv.reserve(options.argv.size() + 1);
  for (const auto& arg : options.argv) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);

  execvp(argv[0], argv.data());
  dprintf(err_fd, "sandbox: exec(%s) failed: %s\n", argv[0], std::strerror(errno));
  _exit(127);
}

}  // namespace

SpawnResult run_process(const SpawnOptions& options) {
  if (options.argv.empty()) {
    throw std::invalid_argument("run_process requires a non-empty argv");
  }

  int out_pipe[2];
  int err_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0 || pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw std::runtime_error(std::string("pipe2 failed: ") + std::strerror(errno));
  }

  const pid_t pid = fork();
  if (pid < 0) {
    throw std::runtime_error(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    close(out_pipe[0]);
    close(err_pipe[0]);
    child_exec(options, out_pipe[1], err_pipe[1]);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);

  SpawnResult result;
  const auto deadline = std::chrono::steady_clock::now() + options.timeout;

  struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  bool open_fds[2] = {true, true};
  char buffer[4096];

  while (open_fds[0] || open_fds[1]) {
    const auto remaining = deadline - std::chrono::steady_clock::now();
    const int wait_ms = result.timed_out
        ? 100  // already killed; just drain
        : static_cast<int>(
              std::max<std::int64_t>(
                  0, std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count()));

    fds[0].fd = open_fds[0] ? out_pipe[0] : -1;
    fds[1].fd = open_fds[1] ? err_pipe[0] : -1;
    const int ready = poll(fds, 2, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) {
      if (!result.timed_out && std::chrono::steady_clock::now() >= deadline) {
        result.timed_out = true;
        kill(-pid, SIGKILL);
        kill(pid, SIGKILL);
        continue;
      }
      if (result.timed_out) break;  // drained what the killed group left behind
      continue;
    }
    for (int i = 0; i < 2; ++i) {
      if (!open_fds[i] || (fds[i].revents & (POLLIN | POLLHUP)) == 0) continue;
      const ssize_t n = read(i == 0 ? out_pipe[0] : err_pipe[0], buffer, sizeof(buffer));
      if (n > 0) {
        append_capped(i == 0 ? result.stdout_text : result.stderr_text, buffer,
                      static_cast<std::size_t>(n), options.max_capture_bytes);
      } else {
        open_fds[i] = false;
      }
    }
  }
  close(out_pipe[0]);
  close(err_pipe[0]);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signaled = true;
    result.term_signal = WTERMSIG(status);
  }
  return result;
}

bool sandbox_supports_network_isolation() {
  static const bool supported = [] {
    const pid_t pid = fork();
    if (pid < 0) return false;
    if (pid == 0) {
      _exit(unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0 ? 0 : 1);
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }();
  return supported;
}

}  // namespace seedforge
