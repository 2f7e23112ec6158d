#ifndef BIASFORGE_VALIDATION_SANDBOX_HPP
#define BIASFORGE_VALIDATION_SANDBOX_HPP

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "biasforge/error.hpp"

namespace biasforge::validation {

struct Limits {
  std::chrono::milliseconds timeout{5000};
  std::size_t memory_mb = 4096;  // address space; 0 = unlimited
  std::size_t cpu_seconds = 0;   // 0 = derived from the timeout
  std::size_t output_bytes = 16 << 20;
  bool isolate_network = true;
};

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  int signal = 0;
  bool timed_out = false;
  bool output_truncated = false;
  std::string out;
  std::string err;
  std::chrono::milliseconds wall{0};

  [[nodiscard]] bool ok() const { return !timed_out && signal == 0 && exit_code == 0; }
  /// "exit 0", "signal 9", "timeout".
  [[nodiscard]] std::string status() const {
    if (timed_out) return "timeout";
    if (signal != 0) return "signal " + std::to_string(signal);
    return "exit " + std::to_string(exit_code);
  }
};

namespace detail {

inline constexpr int kSetupFailedExit = 126;
inline constexpr int kExecFailedExit = 127;

[[noreturn]] inline void child_fail(int status_fd, int code, const char* what) {
  std::string msg = std::string(what) + ": " + std::strerror(errno);
  ssize_t ignored = ::write(status_fd, msg.data(), msg.size());
  (void)ignored;
  ::_exit(code);
}

inline void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace detail

/// Runs argv[0] (an absolute path, or resolved against PATH in `env`) with
/// the given stdin, working directory and environment only. The child gets
/// its own process group, which is killed on timeout, and rlimits for CPU
/// time and address space. With isolate_network it is moved into a fresh
/// network namespace, where only an unconfigured loopback exists.
/// Throws SandboxError when the process cannot be started or isolated.
inline ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                                 const std::filesystem::path& cwd, const std::map<std::string, std::string>& env,
                                 const Limits& limits) {
  if (argv.empty()) throw Error(ErrorCode::SandboxError, "empty command");
  int in_pipe[2], out_pipe[2], err_pipe[2], status_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) || ::pipe2(out_pipe, O_CLOEXEC) || ::pipe2(err_pipe, O_CLOEXEC) ||
      ::pipe2(status_pipe, O_CLOEXEC)) {
    throw Error(ErrorCode::SandboxError, std::string("pipe: ") + std::strerror(errno));
  }

  std::vector<std::string> env_strings;
  for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp, args;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_copy(argv);
  for (auto& s : argv_copy) args.push_back(s.data());
  args.push_back(nullptr);
  std::string program = argv[0];
  if (program.find('/') == std::string::npos) {
    auto path_it = env.find("PATH");
    std::string path = path_it == env.end() ? "/usr/bin:/bin" : path_it->second;
    std::size_t start = 0;
    while (start <= path.size()) {
      std::size_t end = path.find(':', start);
      if (end == std::string::npos) end = path.size();
      std::filesystem::path candidate = std::filesystem::path(path.substr(start, end - start)) / program;
      if (::access(candidate.c_str(), X_OK) == 0) {
        program = candidate.string();
        break;
      }
      start = end + 1;
    }
  }
  const std::string cwd_str = cwd.string();

  auto started = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::SandboxError, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::dup2(err_pipe[1], 2);
    ::signal(SIGPIPE, SIG_DFL);
    if (limits.isolate_network && ::unshare(CLONE_NEWNET) != 0) {
      detail::child_fail(status_pipe[1], detail::kSetupFailedExit, "unshare(CLONE_NEWNET)");
    }
    if (::chdir(cwd_str.c_str()) != 0) detail::child_fail(status_pipe[1], detail::kSetupFailedExit, "chdir");
    std::size_t cpu = limits.cpu_seconds ? limits.cpu_seconds
                                         : static_cast<std::size_t>(limits.timeout.count() / 1000 + 2);
    rlimit r{cpu, cpu + 1};
    ::setrlimit(RLIMIT_CPU, &r);
    if (limits.memory_mb) {
      rlim_t bytes = static_cast<rlim_t>(limits.memory_mb) << 20;
      rlimit m{bytes, bytes};
      ::setrlimit(RLIMIT_AS, &m);
    }
    rlimit core{0, 0};
    ::setrlimit(RLIMIT_CORE, &core);
    ::execve(program.c_str(), args.data(), envp.data());
    detail::child_fail(status_pipe[1], detail::kExecFailedExit, program.c_str());
  }

  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(status_pipe[1]);
  detail::set_nonblocking(in_pipe[1]);
  detail::set_nonblocking(out_pipe[0]);
  detail::set_nonblocking(err_pipe[0]);

  ProcessResult result;
  std::size_t written = 0;
  int in_fd = in_pipe[1];
  if (input.empty()) {
    ::close(in_fd);
    in_fd = -1;
  }
  bool out_open = true, err_open = true;
  const auto deadline = started + limits.timeout;
  char buf[65536];
  while (out_open || err_open) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    pollfd fds[3];
    nfds_t n = 0;
    int out_idx = -1, err_idx = -1, in_idx = -1;
    if (out_open) {
      out_idx = static_cast<int>(n);
      fds[n++] = {out_pipe[0], POLLIN, 0};
    }
    if (err_open) {
      err_idx = static_cast<int>(n);
      fds[n++] = {err_pipe[0], POLLIN, 0};
    }
    if (in_fd >= 0) {
      in_idx = static_cast<int>(n);
      fds[n++] = {in_fd, POLLOUT, 0};
    }
    auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int ready = ::poll(fds, n, static_cast<int>(std::min<long long>(wait_ms, 1000)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    auto drain = [&](int idx, int fd, std::string& sink, bool& open) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
      ssize_t got = ::read(fd, buf, sizeof buf);
      if (got > 0) {
        std::size_t room = limits.output_bytes > sink.size() ? limits.output_bytes - sink.size() : 0;
        if (static_cast<std::size_t>(got) > room) result.output_truncated = true;
        sink.append(buf, std::min(room, static_cast<std::size_t>(got)));
      } else if (got == 0 || (errno != EAGAIN && errno != EINTR)) {
        open = false;
      }
    };
    drain(out_idx, out_pipe[0], result.out, out_open);
    drain(err_idx, err_pipe[0], result.err, err_open);
    if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t put = ::write(in_fd, input.data() + written, input.size() - written);
      if (put > 0) written += static_cast<std::size_t>(put);
      if (put < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
      if (written >= input.size()) {
        ::close(in_fd);
        in_fd = -1;
      }
    }
  }
  if (in_fd >= 0) ::close(in_fd);
  if (result.timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  // Reap anything the program left behind in its group.
  ::kill(-pid, SIGKILL);
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);

  std::string setup_error;
  ssize_t got;
  while ((got = ::read(status_pipe[0], buf, sizeof buf)) > 0) setup_error.append(buf, static_cast<std::size_t>(got));
  ::close(status_pipe[0]);
  result.wall = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signal = WTERMSIG(status);
    if (result.signal == SIGXCPU) result.timed_out = true;
  }
  if (!setup_error.empty()) {
    if (result.exit_code == detail::kExecFailedExit) {
      throw Error(ErrorCode::ToolchainMissing, "cannot execute " + setup_error);
    }
    throw Error(ErrorCode::SandboxError, setup_error);
  }
  return result;
}

}  // namespace biasforge::validation

#endif  // BIASFORGE_VALIDATION_SANDBOX_HPP
