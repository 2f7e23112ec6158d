#ifndef BIASFORGE_PIPELINE_CONFIG_HPP
#define BIASFORGE_PIPELINE_CONFIG_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasforge/error.hpp"
#include "biasforge/io.hpp"
#include "biasforge/judge/types.hpp"
#include "biasforge/language.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::pipeline {

namespace fs = std::filesystem;

/// How misleading comments are written: not at all, by a built-in
/// deterministic stand-in, or by one of the judges' endpoints.
struct GeneratorConfig {
  enum class Kind { None, Mock, Judge } kind = Kind::None;
  std::optional<judge::JudgeConfig> judge;
};

struct RunConfig {
  fs::path base_dir;  // relative paths in the file resolve against this
  nlohmann::json raw;  // after overrides, as echoed into the output

  std::uint64_t seed = 0;
  fs::path out;
  fs::path dataset;
  std::vector<Language> languages;
  std::vector<std::string> problems;  // empty: all
  std::vector<transforms::BiasKind> biases;
  std::vector<fs::path> templates;
  fs::path dummy_pool;
  GeneratorConfig generator;
  std::size_t max_attempts = 3;
  std::size_t inject_workers = 0;

  bool validate = true;
  fs::path toolchains;
  std::chrono::milliseconds timeout{5000};
  std::chrono::milliseconds compile_timeout{120000};
  std::size_t validate_workers = 0;

  std::vector<judge::JudgeConfig> judges;
  std::vector<judge::Paradigm> paradigms = {judge::Paradigm::Direct};
  std::optional<std::size_t> trials;
  fs::path prompts;

  double dead_band = 0.0;
};

/// Sets a dotted key path: `judges.0.rate_limit=2`, `languages=["go"]`.
/// The value is read as JSON when it parses, otherwise as a string.
inline void apply_override(nlohmann::json& j, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override must look like key=value: " + std::string(assignment));
  }
  std::string path(assignment.substr(0, eq));
  std::string text(assignment.substr(eq + 1));
  auto value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::ConfigError, "empty key in override " + path);
    if (node->is_array()) {
      if (part.find_first_not_of("0123456789") != std::string::npos || std::stoull(part) >= node->size()) {
        throw Error(ErrorCode::ConfigError, "bad index '" + part + "' in override " + path);
      }
      node = &(*node)[std::stoull(part)];
    } else {
      if (!node->is_object()) *node = nlohmann::json::object();
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw Error(ErrorCode::ConfigError, what + " not found: " + p.string());
}

inline void check_judge_id(const std::string& id) {
  if (id.empty() || id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
                        std::string::npos) {
    throw Error(ErrorCode::ConfigError, "judge id '" + id + "' must use letters, digits, '.', '_' or '-'");
  }
}

inline judge::JudgeConfig judge_from(const nlohmann::json& j, const fs::path& base) {
  auto c = judge::parse_judge_config(j);
  check_judge_id(c.judge_id);
  if (!c.replay_log.empty()) c.replay_log = resolve(base, c.replay_log).string();
  return c;
}

}  // namespace detail

inline const std::vector<std::string> kKnownKeys = {
    "seed",       "out",          "dataset",  "languages",  "problems",    "biases",     "templates",
    "dummy_pool", "generator",    "max_attempts", "inject_workers", "validation", "judges", "paradigms",
    "trials",     "prompts",      "dead_band"};

/// Reads a run config; `raw` must already carry any overrides.
inline RunConfig parse_run_config(const nlohmann::json& raw, const fs::path& base_dir) {
  if (!raw.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  for (const auto& [k, _] : raw.items()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), k) == kKnownKeys.end()) {
      throw Error(ErrorCode::ConfigError, "unknown config key '" + k + "'");
    }
  }
  RunConfig c;
  c.base_dir = base_dir;
  c.raw = raw;
  try {
    const auto& seed = raw.contains("seed") ? raw["seed"] : nlohmann::json();
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      throw Error(ErrorCode::ConfigError, "seed is required (a non-negative integer)");
    }
    c.seed = raw["seed"].get<std::uint64_t>();
    if (!raw.contains("out")) throw Error(ErrorCode::ConfigError, "out is required");
    c.out = detail::resolve(base_dir, raw["out"].get<std::string>());
    if (!raw.contains("dataset")) throw Error(ErrorCode::ConfigError, "dataset is required");
    c.dataset = detail::resolve(base_dir, raw["dataset"].get<std::string>());
    detail::require_file(c.dataset, "dataset");

    if (raw.contains("languages")) {
      for (const auto& l : raw["languages"]) {
        auto lang = try_parse_language(l.get<std::string>());
        if (!lang) throw Error(ErrorCode::ConfigError, "unknown language " + l.dump());
        c.languages.push_back(*lang);
      }
    } else {
      c.languages.assign(kAllLanguages.begin(), kAllLanguages.end());
    }
    c.problems = raw.value("problems", std::vector<std::string>{});

    if (raw.contains("biases")) {
      for (const auto& b : raw["biases"]) c.biases.push_back(transforms::parse_bias(b.get<std::string>()));
    } else {
      for (auto t : transforms::kAllBiasTags) c.biases.push_back(transforms::parse_bias(transforms::tag_name(t)));
    }
    auto needs = [&](transforms::BiasTag t) {
      return std::any_of(c.biases.begin(), c.biases.end(), [&](const auto& b) { return b.tag == t; });
    };

    for (const auto& t : raw.value("templates", std::vector<std::string>{})) {
      c.templates.push_back(detail::resolve(base_dir, t));
      detail::require_file(c.templates.back(), "template file");
    }
    if ((needs(transforms::BiasTag::Authority) || needs(transforms::BiasTag::ReverseAuthority)) &&
        c.templates.empty()) {
      throw Error(ErrorCode::ConfigError, "authority biases need templates");
    }
    if (raw.contains("dummy_pool")) {
      c.dummy_pool = detail::resolve(base_dir, raw["dummy_pool"].get<std::string>());
      detail::require_file(c.dummy_pool, "dummy pool");
    } else if (needs(transforms::BiasTag::IllusoryComplexity)) {
      throw Error(ErrorCode::ConfigError, "illusory_complexity needs dummy_pool");
    }
    c.max_attempts = raw.value("max_attempts", std::size_t{3});
    c.inject_workers = raw.value("inject_workers", std::size_t{0});

    if (raw.contains("judges")) {
      for (const auto& j : raw["judges"]) c.judges.push_back(detail::judge_from(j, base_dir));
    }
    for (std::size_t i = 0; i < c.judges.size(); ++i) {
      for (std::size_t k = 0; k < i; ++k) {
        if (c.judges[i].judge_id == c.judges[k].judge_id) {
          throw Error(ErrorCode::ConfigError, "duplicate judge id " + c.judges[i].judge_id);
        }
      }
    }

    if (raw.contains("generator") && !raw["generator"].is_null()) {
      const auto& g = raw["generator"];
      if (g.is_object() && g.value("kind", "") == "mock" && !g.contains("id")) {
        c.generator.kind = GeneratorConfig::Kind::Mock;
      } else if (g.is_string()) {
        auto it = std::find_if(c.judges.begin(), c.judges.end(), [&](const auto& j) { return j.judge_id == g; });
        if (it == c.judges.end()) throw Error(ErrorCode::ConfigError, "generator names unknown judge " + g.dump());
        c.generator = {GeneratorConfig::Kind::Judge, *it};
      } else {
        c.generator = {GeneratorConfig::Kind::Judge, detail::judge_from(g, base_dir)};
      }
    }
    if (needs(transforms::BiasTag::MisleadingTask) && c.generator.kind == GeneratorConfig::Kind::None) {
      throw Error(ErrorCode::ConfigError, "misleading_task needs a generator");
    }

    if (raw.contains("validation")) {
      const auto& v = raw["validation"];
      c.validate = v.value("enabled", true);
      if (v.contains("toolchains")) c.toolchains = detail::resolve(base_dir, v["toolchains"].get<std::string>());
      c.timeout = std::chrono::milliseconds(v.value("timeout_ms", 5000));
      c.compile_timeout = std::chrono::milliseconds(v.value("compile_timeout_ms", 120000));
      c.validate_workers = v.value("workers", std::size_t{0});
    }
    if (c.validate) {
      if (c.toolchains.empty()) throw Error(ErrorCode::ConfigError, "validation.toolchains is required");
      detail::require_file(c.toolchains, "toolchain file");
    }

    if (raw.contains("paradigms")) {
      c.paradigms.clear();
      for (const auto& p : raw["paradigms"]) c.paradigms.push_back(judge::parse_paradigm(p.get<std::string>()));
    }
    if (raw.contains("trials")) {
      c.trials = raw["trials"].get<std::size_t>();
      if (*c.trials == 0) throw Error(ErrorCode::ConfigError, "trials must be >= 1");
    }
    if (raw.contains("prompts")) {
      c.prompts = detail::resolve(base_dir, raw["prompts"].get<std::string>());
      detail::require_file(c.prompts, "prompt directory");
    }
    c.dead_band = raw.value("dead_band", 0.0);
    if (c.dead_band < 0) throw Error(ErrorCode::ConfigError, "dead_band must be >= 0");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
  }
  return c;
}

/// Loads a config file, applies `--set` style overrides, then parses.
inline RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides = {}) {
  if (!fs::exists(path)) throw Error(ErrorCode::ConfigError, "config not found: " + path.string());
  auto raw = nlohmann::json::parse(io::read_file(path), nullptr, false);
  if (raw.is_discarded()) throw Error(ErrorCode::ConfigError, "config is not valid JSON: " + path.string());
  for (const auto& o : overrides) apply_override(raw, o);
  return parse_run_config(raw, fs::absolute(path).parent_path());
}

}  // namespace biasforge::pipeline

#endif  // BIASFORGE_PIPELINE_CONFIG_HPP
