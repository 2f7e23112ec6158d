#ifndef BIASFORGE_VALIDATION_TOOLCHAIN_HPP
#define BIASFORGE_VALIDATION_TOOLCHAIN_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasforge/error.hpp"
#include "biasforge/io.hpp"
#include "biasforge/language.hpp"
#include "biasforge/syntax/insertion.hpp"
#include "biasforge/syntax/tree.hpp"

namespace biasforge::validation {

/// A one-off setup command (for example building a precompiled header).
/// `source` is written to {src} (named `file`) in a scratch directory; the
/// command writes its product into {out}, which is then moved to `creates`.
/// Steps whose product exists are skipped, so an interrupted prepare is
/// simply redone.
struct PrepareStep {
  std::vector<std::string> run;
  std::string file = "input";
  std::string source;
  std::string creates;
};

/// How to check, build and run one language. Command lines are argv
/// vectors with placeholders:
///   {src}   absolute path of the written source file
///   {dir}   the per-program work directory
///   {exe}   {dir}/prog
///   {out}   {dir}/out, created before the build
///   {class} Java class declaring main (Main if none is found)
///   {cache} shared cache directory
struct Toolchain {
  std::string file = "main";                  // source file name, may use {class}
  std::optional<std::vector<std::string>> check;    // parse-only (interpreted languages)
  std::optional<std::vector<std::string>> compile;  // compiled languages
  std::vector<std::string> run;
  std::map<std::string, std::string> env;
  std::vector<PrepareStep> prepare;
  std::size_t memory_mb = 4096;

  [[nodiscard]] bool compiled() const { return compile.has_value(); }
};

struct ToolchainSet {
  std::map<Language, Toolchain> languages;
  std::filesystem::path cache_dir;

  [[nodiscard]] const Toolchain& get(Language lang) const {
    auto it = languages.find(lang);
    if (it == languages.end()) {
      throw Error(ErrorCode::ToolchainMissing, "no toolchain configured for " + std::string(to_string(lang)));
    }
    return it->second;
  }
  [[nodiscard]] bool has(Language lang) const { return languages.count(lang) != 0; }
};

struct Placeholders {
  std::string src, dir, exe, out, cls, cache;
};

inline std::string expand(std::string_view text, const Placeholders& p) {
  static const std::pair<std::string_view, std::string Placeholders::*> keys[] = {
      {"{src}", &Placeholders::src}, {"{dir}", &Placeholders::dir},     {"{exe}", &Placeholders::exe},
      {"{out}", &Placeholders::out}, {"{class}", &Placeholders::cls}, {"{cache}", &Placeholders::cache},
  };
  std::string result;
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    if (text[i] == '{') {
      for (const auto& [key, member] : keys) {
        if (text.substr(i, key.size()) == key) {
          result += p.*member;
          i += key.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) result += text[i++];
  }
  return result;
}

inline std::vector<std::string> expand(const std::vector<std::string>& argv, const Placeholders& p) {
  std::vector<std::string> out;
  out.reserve(argv.size());
  for (const auto& a : argv) out.push_back(expand(a, p));
  return out;
}

/// Name of the class whose main method the JVM should start. Falls back to
/// a textual scan when the source does not parse, so broken variants still
/// reach the compiler and produce its diagnostic.
inline std::string java_main_class(const std::string& source) {
  try {
    auto tree = syntax::parse(source, Language::Java);
    syntax::Node cls = syntax::detail::primary_java_class(tree);
    if (cls.valid()) return std::string(cls.field("name").text(tree.source()));
  } catch (const Error&) {
  }
  static const std::regex decl(R"(\bclass\s+([A-Za-z_$][A-Za-z0-9_$]*))");
  std::smatch m;
  if (std::regex_search(source, m, decl)) return m[1].str();
  return "Main";
}

namespace detail {

inline std::vector<std::string> argv_of(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ConfigError, where + " must be a non-empty array");
  std::vector<std::string> out;
  for (const auto& a : j) {
    if (!a.is_string()) throw Error(ErrorCode::ConfigError, where + " entries must be strings");
    out.push_back(a.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Parses {"cache_dir": "...", "languages": {"cpp": {...}, ...}}.
/// Relative cache_dir values resolve against `base`.
inline ToolchainSet parse_toolchains(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "toolchain config must be an object");
  ToolchainSet set;
  std::filesystem::path cache = j.value("cache_dir", std::string());
  if (cache.empty()) cache = std::filesystem::temp_directory_path() / "biasforge-cache";
  if (cache.is_relative() && !base.empty()) cache = base / cache;
  set.cache_dir = cache;
  auto langs = j.find("languages");
  if (langs == j.end() || !langs->is_object()) throw Error(ErrorCode::ConfigError, "toolchain config needs languages");
  for (const auto& [name, spec] : langs->items()) {
    auto lang = try_parse_language(name);
    if (!lang) throw Error(ErrorCode::ConfigError, "unknown toolchain language " + name);
    const std::string where = "toolchains." + name;
    Toolchain t;
    t.file = spec.value("file", std::string("main"));
    if (spec.contains("check")) t.check = detail::argv_of(spec["check"], where + ".check");
    if (spec.contains("compile")) t.compile = detail::argv_of(spec["compile"], where + ".compile");
    if (!spec.contains("run")) throw Error(ErrorCode::ConfigError, where + ".run is required");
    t.run = detail::argv_of(spec["run"], where + ".run");
    if (!t.check && !t.compile) throw Error(ErrorCode::ConfigError, where + " needs check or compile");
    if (spec.contains("env")) {
      for (const auto& [k, v] : spec["env"].items()) t.env[k] = v.get<std::string>();
    }
    if (spec.contains("prepare")) {
      for (const auto& p : spec["prepare"]) {
        PrepareStep step;
        step.run = detail::argv_of(p.at("run"), where + ".prepare.run");
        step.file = p.value("file", std::string("input"));
        step.source = p.value("source", std::string());
        step.creates = p.at("creates").get<std::string>();
        t.prepare.push_back(std::move(step));
      }
    }
    t.memory_mb = spec.value("memory_mb", std::size_t{4096});
    set.languages[*lang] = std::move(t);
  }
  return set;
}

inline ToolchainSet load_toolchains(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_toolchains(j, path.parent_path());
}

}  // namespace biasforge::validation

#endif  // BIASFORGE_VALIDATION_TOOLCHAIN_HPP
