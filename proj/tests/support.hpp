// Shared helpers for the test binaries.
#ifndef BIASFORGE_TESTS_SUPPORT_HPP
#define BIASFORGE_TESTS_SUPPORT_HPP

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(BIASFORGE_SOURCE_DIR); }

inline fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("biasforge-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs a shell command, returning (exit status, stdout).
inline std::pair<int, std::string> shell(const std::string& cmd) {
  std::string out;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {-1, out};
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

inline bool have(const std::string& program) {
  return shell("command -v " + program + " >/dev/null 2>&1").first == 0;
}

inline std::set<std::string> lines_of(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.insert(line);
  }
  return out;
}

}  // namespace testsupport

#endif
