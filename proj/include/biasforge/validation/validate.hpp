#ifndef BIASFORGE_VALIDATION_VALIDATE_HPP
#define BIASFORGE_VALIDATION_VALIDATE_HPP

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "biasforge/corpus.hpp"
#include "biasforge/error.hpp"
#include "biasforge/io.hpp"
#include "biasforge/transforms/types.hpp"
#include "biasforge/validation/sandbox.hpp"
#include "biasforge/validation/toolchain.hpp"

namespace biasforge::validation {

enum class Stage { SyntaxOnly, Compiled, Executed };
enum class Outcome { Pass, Fail, Limited };

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::SyntaxOnly: return "syntax_only";
    case Stage::Compiled: return "compiled";
    case Stage::Executed: return "executed";
  }
  return "?";
}

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::Limited: return "limited";
  }
  return "?";
}

inline Stage parse_stage(std::string_view s) {
  for (Stage v : {Stage::SyntaxOnly, Stage::Compiled, Stage::Executed}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown stage " + std::string(s));
}

inline Outcome parse_outcome(std::string_view s) {
  for (Outcome v : {Outcome::Pass, Outcome::Fail, Outcome::Limited}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown outcome " + std::string(s));
}

/// One io_test on which the two programs disagreed.
struct TestDiff {
  std::size_t test_index = 0;
  std::string original_status;
  std::string variant_status;
  std::string original_stdout;
  std::string variant_stdout;
  friend bool operator==(const TestDiff&, const TestDiff&) = default;
};

struct ValidationResult {
  std::string variant_id;
  Stage stage = Stage::SyntaxOnly;
  Outcome outcome = Outcome::Fail;
  std::vector<std::string> diagnostics;
  std::vector<TestDiff> diffs;

  [[nodiscard]] bool passed() const { return outcome == Outcome::Pass; }
  friend bool operator==(const ValidationResult&, const ValidationResult&) = default;
};

inline nlohmann::json to_json(const ValidationResult& r) {
  nlohmann::json diffs = nlohmann::json::array();
  for (const auto& d : r.diffs) {
    diffs.push_back({{"test_index", d.test_index},
                     {"original_status", d.original_status},
                     {"variant_status", d.variant_status},
                     {"original_stdout", d.original_stdout},
                     {"variant_stdout", d.variant_stdout}});
  }
  return {{"variant_id", r.variant_id},
          {"stage", to_string(r.stage)},
          {"outcome", to_string(r.outcome)},
          {"diagnostics", r.diagnostics},
          {"diffs", diffs}};
}

inline ValidationResult validation_result_from_json(const nlohmann::json& j) {
  ValidationResult r;
  r.variant_id = j.at("variant_id").get<std::string>();
  r.stage = parse_stage(j.at("stage").get<std::string>());
  r.outcome = parse_outcome(j.at("outcome").get<std::string>());
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  for (const auto& d : j.at("diffs")) {
    r.diffs.push_back({d.at("test_index").get<std::size_t>(), d.at("original_status").get<std::string>(),
                       d.at("variant_status").get<std::string>(), d.at("original_stdout").get<std::string>(),
                       d.at("variant_stdout").get<std::string>()});
  }
  return r;
}

struct ValidationPolicy {
  std::chrono::milliseconds timeout{5000};  // per test, per program
  std::chrono::milliseconds compile_timeout{120000};
  std::size_t workers = 0;                   // 0: one per hardware thread
  std::filesystem::path work_root;           // empty: system temp directory
  bool isolate_network = true;
  bool keep_work_dirs = false;
  std::size_t max_diagnostic_bytes = 4000;
};

/// Trailing newlines are not significant; every other byte is.
inline std::string_view normalize_stdout(std::string_view s) {
  while (!s.empty() && s.back() == '\n') s.remove_suffix(1);
  return s;
}

/// Builds and runs programs with the configured toolchains.
class Validator {
 public:
  Validator(ToolchainSet toolchains, ValidationPolicy policy = {})
      : toolchains_(std::move(toolchains)), policy_(std::move(policy)) {
    if (policy_.work_root.empty()) policy_.work_root = std::filesystem::temp_directory_path() / "biasforge-validate";
  }

  [[nodiscard]] const ValidationPolicy& policy() const { return policy_; }
  [[nodiscard]] const ToolchainSet& toolchains() const { return toolchains_; }

  /// A source file written to its own directory and compiled or parse-checked.
  struct Program {
    Language language = Language::Cpp;
    std::filesystem::path dir;
    Placeholders vars;
    bool built = false;
    Stage stage = Stage::SyntaxOnly;
    std::string diagnostic;
  };

  /// Writes and builds `source` in a fresh directory under `dir`.
  /// Throws ToolchainMissing when no toolchain is configured or the tools
  /// cannot be executed, SandboxError when isolation fails.
  Program build(const std::string& source, Language lang, const std::filesystem::path& dir) {
    const Toolchain& tc = toolchains_.get(lang);
    prepare(lang, tc);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "out");
    Program p;
    p.language = lang;
    p.dir = dir;
    p.vars.dir = dir.string();
    p.vars.exe = (dir / "prog").string();
    p.vars.out = (dir / "out").string();
    p.vars.cache = toolchains_.cache_dir.string();
    p.vars.cls = lang == Language::Java ? java_main_class(source) : "Main";
    const std::filesystem::path src = dir / expand(tc.file, p.vars);
    p.vars.src = src.string();
    io::atomic_write(src, source);

    p.stage = tc.compiled() ? Stage::Compiled : Stage::SyntaxOnly;
    const auto& argv = tc.compiled() ? *tc.compile : *tc.check;
    ProcessResult r = run_process(expand(argv, p.vars), "", dir, expand_env(tc, p.vars),
                                  limits(tc, policy_.compile_timeout));
    p.built = r.ok();
    if (!p.built) p.diagnostic = clip(r.status() + ": " + r.err + (r.err.empty() ? r.out : ""));
    return p;
  }

  /// Runs a built program on one stdin under the per-test limits.
  ProcessResult run(const Program& p, const std::string& input,
                    std::optional<std::chrono::milliseconds> timeout = std::nullopt) {
    const Toolchain& tc = toolchains_.get(p.language);
    return run_process(expand(tc.run, p.vars), input, p.dir, expand_env(tc, p.vars),
                       limits(tc, timeout.value_or(policy_.timeout)));
  }

  /// Pass iff the variant compiles (C++, Java, Go) or parses (Python,
  /// JavaScript).
  ValidationResult check_syntax(const transforms::BiasVariant& v) {
    ValidationResult r;
    r.variant_id = v.variant_id;
    auto dir = scratch_dir();
    Program p = build(v.source, v.language, dir);
    r.stage = p.stage;
    r.outcome = p.built ? Outcome::Pass : Outcome::Fail;
    if (!p.built) r.diagnostics.push_back(p.diagnostic);
    cleanup(dir);
    return r;
  }

  /// Runs original and variant on every io_test and compares stdout (up to
  /// trailing newlines) and exit status. Limited when there are no tests.
  ValidationResult check_behavior(const corpus::CodeSample& original, const corpus::Problem& problem,
                                  const transforms::BiasVariant& v,
                                  std::optional<std::chrono::milliseconds> timeout = std::nullopt) {
    auto dir = scratch_dir();
    ValidationResult r;
    try {
      r = compare(original, problem, v, dir, nullptr, timeout.value_or(policy_.timeout));
    } catch (...) {
      cleanup(dir);
      throw;
    }
    cleanup(dir);
    return r;
  }

  /// Validates every variant against its original sample. Afterwards each
  /// variant is Validated (passed the strongest stage its problem allows)
  /// or Flagged; per-item errors flag the item and never stop the batch.
  /// Variants already Flagged during generation stay Flagged. Results are
  /// ordered by variant_id.
  std::vector<ValidationResult> validate_batch(std::vector<transforms::BiasVariant>& variants,
                                               const corpus::Dataset& dataset) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < variants.size(); ++i) groups[variants[i].base_sample_id].push_back(i);
    std::vector<const std::vector<std::size_t>*> units;
    std::vector<std::string> unit_ids;
    for (const auto& [id, members] : groups) {
      units.push_back(&members);
      unit_ids.push_back(id);
    }
    std::map<std::string, const corpus::CodeSample*> samples;
    for (const auto& s : dataset.samples) samples[s.sample_id] = &s;

    std::vector<ValidationResult> results(variants.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&](std::size_t worker_index) {
      const auto worker_dir = scratch_dir("worker" + std::to_string(worker_index));
      for (std::size_t u = next++; u < units.size(); u = next++) {
        auto it = samples.find(unit_ids[u]);
        OriginalRuns cache;
        for (std::size_t idx : *units[u]) {
          transforms::BiasVariant& v = variants[idx];
          ValidationResult r;
          r.variant_id = v.variant_id;
          try {
            if (it == samples.end()) {
              throw Error(ErrorCode::IntegrityError, "unknown base sample " + v.base_sample_id);
            }
            if (v.validation_state == transforms::ValidationState::Flagged) {
              r.diagnostics.push_back("flagged during generation: " + v.flag_reason);
            } else {
              r = compare(*it->second, dataset.problem(it->second->problem_id), v, worker_dir, &cache,
                          policy_.timeout);
              if (r.outcome == Outcome::Limited) r.outcome = Outcome::Pass;
            }
          } catch (const std::exception& e) {
            r.outcome = Outcome::Fail;
            r.diagnostics.push_back(e.what());
          }
          if (r.outcome == Outcome::Pass) {
            v.validation_state = transforms::ValidationState::Validated;
            v.flag_reason.clear();
          } else {
            v.validation_state = transforms::ValidationState::Flagged;
            if (v.flag_reason.empty()) v.flag_reason = r.diagnostics.empty() ? "validation failed" : r.diagnostics.front();
          }
          results[idx] = std::move(r);
        }
      }
      cleanup(worker_dir);
    };
    std::size_t n_workers = policy_.workers ? policy_.workers : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::max<std::size_t>(1, std::min(n_workers, units.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker, w);
    worker(0);
    for (auto& t : pool) t.join();
    std::sort(results.begin(), results.end(),
              [](const ValidationResult& a, const ValidationResult& b) { return a.variant_id < b.variant_id; });
    return results;
  }

 private:
  struct OriginalRuns {
    std::optional<Program> program;
    std::vector<ProcessResult> runs;
    bool ran = false;
  };

  ValidationResult compare(const corpus::CodeSample& original, const corpus::Problem& problem,
                           const transforms::BiasVariant& v, const std::filesystem::path& dir, OriginalRuns* cache,
                           std::chrono::milliseconds timeout) {
    ValidationResult r;
    r.variant_id = v.variant_id;
    Program vp = build(v.source, v.language, dir / "variant");
    r.stage = vp.stage;
    if (!vp.built) {
      r.outcome = Outcome::Fail;
      r.diagnostics.push_back(vp.diagnostic);
      return r;
    }
    if (problem.io_tests.empty()) {
      r.stage = Stage::SyntaxOnly;
      r.outcome = Outcome::Limited;
      r.diagnostics.push_back("no io_tests; behaviour not executed");
      if (vp.stage == Stage::Compiled) r.stage = Stage::Compiled;
      return r;
    }
    OriginalRuns local;
    OriginalRuns& orig = cache ? *cache : local;
    if (!orig.ran) {
      orig.program = build(original.source, original.language, dir / "original");
      if (orig.program->built) {
        for (const auto& t : problem.io_tests) orig.runs.push_back(run(*orig.program, t.input, timeout));
      }
      orig.ran = true;
    }
    if (!orig.program->built) {
      r.outcome = Outcome::Fail;
      r.diagnostics.push_back("original does not build: " + orig.program->diagnostic);
      return r;
    }
    r.stage = Stage::Executed;
    for (std::size_t i = 0; i < problem.io_tests.size(); ++i) {
      ProcessResult got = run(vp, problem.io_tests[i].input, timeout);
      const ProcessResult& want = orig.runs[i];
      const bool same = !want.timed_out && !got.timed_out && want.status() == got.status() &&
                        normalize_stdout(want.out) == normalize_stdout(got.out);
      if (!same) {
        r.diffs.push_back({i, want.status(), got.status(), clip(want.out), clip(got.out)});
        if (want.timed_out || got.timed_out) {
          r.diagnostics.push_back("test " + std::to_string(i) + ": timed out after " +
                                  std::to_string(timeout.count()) + " ms (" +
                                  (want.timed_out ? "original" : "variant") + ")");
        }
      }
    }
    r.outcome = r.diffs.empty() ? Outcome::Pass : Outcome::Fail;
    if (!r.diffs.empty() && r.diagnostics.empty()) {
      r.diagnostics.push_back("stdout or exit status differs on " + std::to_string(r.diffs.size()) + " of " +
                              std::to_string(problem.io_tests.size()) + " tests");
    }
    return r;
  }

  Limits limits(const Toolchain& tc, std::chrono::milliseconds timeout) const {
    Limits l;
    l.timeout = timeout;
    l.memory_mb = tc.memory_mb;
    l.isolate_network = policy_.isolate_network;
    return l;
  }

  static std::map<std::string, std::string> expand_env(const Toolchain& tc, const Placeholders& vars) {
    std::map<std::string, std::string> env;
    for (const auto& [k, v] : tc.env) env[k] = expand(v, vars);
    return env;
  }

  std::string clip(std::string s) const {
    if (s.size() > policy_.max_diagnostic_bytes) {
      s.resize(policy_.max_diagnostic_bytes);
      s += "...";
    }
    return s;
  }

  std::filesystem::path scratch_dir(const std::string& hint = "job") {
    static std::atomic<std::uint64_t> counter{0};
    return policy_.work_root / (std::to_string(::getpid()) + "-" + hint + "-" + std::to_string(counter++));
  }

  void cleanup(const std::filesystem::path& dir) const {
    std::error_code ec;
    if (!policy_.keep_work_dirs) std::filesystem::remove_all(dir, ec);
  }

  /// Runs the toolchain's prepare steps whose output is missing.
  void prepare(Language lang, const Toolchain& tc) {
    if (tc.prepare.empty()) return;
    std::lock_guard lock(prepare_mutex_);
    if (prepared_.count(lang)) return;
    for (const auto& step : tc.prepare) {
      Placeholders vars;
      vars.cache = toolchains_.cache_dir.string();
      const std::filesystem::path target = expand(step.creates, vars);
      if (std::filesystem::exists(target)) continue;
      const auto dir = scratch_dir("prepare");
      std::filesystem::create_directories(dir / "out");
      vars.dir = dir.string();
      vars.out = (dir / "out").string();
      vars.src = (dir / step.file).string();
      io::atomic_write(vars.src, step.source);
      ProcessResult r = run_process(expand(step.run, vars), "", dir, expand_env(tc, vars),
                                    limits(tc, policy_.compile_timeout));
      const auto produced = dir / "out" / target.filename();
      if (!r.ok() || !std::filesystem::exists(produced)) {
        cleanup(dir);
        throw Error(ErrorCode::ToolchainMissing, std::string(to_string(lang)) + " prepare step failed (" +
                                                      r.status() + "): " + clip(r.err));
      }
      std::filesystem::create_directories(target.parent_path());
      std::filesystem::path tmp = target;
      tmp += ".tmp" + std::to_string(::getpid());
      std::filesystem::copy_file(produced, tmp, std::filesystem::copy_options::overwrite_existing);
      std::filesystem::rename(tmp, target);
      cleanup(dir);
    }
    prepared_.insert(lang);
  }

  ToolchainSet toolchains_;
  ValidationPolicy policy_;
  std::mutex prepare_mutex_;
  std::set<Language> prepared_;
};

/// Flagged variants with everything a reviewer needs, one JSON object per
/// line, in variant_id order.
inline std::string flagged_export(const std::vector<transforms::BiasVariant>& variants,
                                  const std::vector<ValidationResult>& results, const corpus::Dataset& dataset) {
  std::map<std::string, const ValidationResult*> by_id;
  for (const auto& r : results) by_id[r.variant_id] = &r;
  std::map<std::string, const corpus::CodeSample*> samples;
  for (const auto& s : dataset.samples) samples[s.sample_id] = &s;
  std::vector<const transforms::BiasVariant*> flagged;
  for (const auto& v : variants) {
    if (v.validation_state == transforms::ValidationState::Flagged) flagged.push_back(&v);
  }
  std::sort(flagged.begin(), flagged.end(), [](auto* a, auto* b) { return a->variant_id < b->variant_id; });
  std::string out;
  for (const auto* v : flagged) {
    nlohmann::json j = {{"variant_id", v->variant_id},
                        {"base_sample_id", v->base_sample_id},
                        {"language", to_string(v->language)},
                        {"bias", transforms::to_string(v->bias)},
                        {"flag_reason", v->flag_reason},
                        {"variant_source", v->source}};
    auto s = samples.find(v->base_sample_id);
    j["original_source"] = s == samples.end() ? nlohmann::json(nullptr) : nlohmann::json(s->second->source);
    auto r = by_id.find(v->variant_id);
    j["validation"] = r == by_id.end() ? nlohmann::json(nullptr) : to_json(*r->second);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace biasforge::validation

#endif  // BIASFORGE_VALIDATION_VALIDATE_HPP
