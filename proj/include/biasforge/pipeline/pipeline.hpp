#ifndef BIASFORGE_PIPELINE_PIPELINE_HPP
#define BIASFORGE_PIPELINE_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "biasforge/corpus.hpp"
#include "biasforge/io.hpp"
#include "biasforge/judge/judge.hpp"
#include "biasforge/metrics/report.hpp"
#include "biasforge/pipeline/config.hpp"
#include "biasforge/transforms/apply.hpp"
#include "biasforge/validation/validate.hpp"

namespace biasforge::pipeline {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kPartial = 3 };

/// Config problems and missing tools are the caller's to fix (1); anything
/// else wrong with the inputs is a data error (2).
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::ToolchainMissing:
    case ErrorCode::GeneratorUnavailable:
      return kUsage;
    default:
      return kDataError;
  }
}

struct StageResult {
  int exit_code = kOk;
  nlohmann::json summary;
};

/// Stand-in for a model that writes misleading comments. The first comment
/// is always the same so mock judges can key on it.
class MockCommentGenerator : public transforms::TextGenerator {
 public:
  static constexpr std::string_view kLead = "Reverses the input before processing it.";

  std::string generate(const transforms::GenerationRequest& request) override {
    static constexpr std::string_view kOthers[] = {
        "Computes the greatest common divisor of the two values.",
        "Counts the vowels on every input line.",
        "Sorts the values in descending order and prints the median.",
        "Returns the length of the longest palindrome in the input.",
    };
    const std::string token = syntax::profile(request.language).line_comment_token;
    std::string out = token + " " + std::string(kLead) + "\n";
    out += token + " " + std::string(kOthers[request.seed % std::size(kOthers)]) + "\n";
    return out + request.code;
  }
  [[nodiscard]] std::string model() const override { return "mock-comment-writer"; }
};

namespace detail {

inline std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Appends complete lines to a file; safe to call from several threads.
class LineSink {
 public:
  explicit LineSink(const fs::path& path) {
    fs::create_directories(path.parent_path());
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_) throw Error(ErrorCode::IoError, "cannot append to " + path.string());
  }
  void write(const std::string& line) {
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

/// Parsed lines of a journal; a torn last line is ignored.
inline std::vector<nlohmann::json> read_journal(const fs::path& path) {
  std::vector<nlohmann::json> out;
  if (!fs::exists(path)) return out;
  io::for_each_line(io::read_file(path), [&](std::size_t, std::string_view line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded()) out.push_back(std::move(j));
  });
  return out;
}

inline std::string jsonl(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

}  // namespace detail

/// Output layout: dataset/, variants/, validation/, judgments/, reports/,
/// logs/. Every stage directory carries a files.sha256 listing; logs/ holds
/// everything that varies between identical runs (timestamps, journals,
/// replay logs).
class Pipeline {
 public:
  explicit Pipeline(RunConfig config) : cfg_(std::move(config)) {}

  [[nodiscard]] const RunConfig& config() const { return cfg_; }
  [[nodiscard]] fs::path dir(const char* stage) const { return cfg_.out / stage; }

  StageResult ingest() {
    begin();
    corpus::Dataset ds = corpus::load_dataset(cfg_.dataset);
    corpus::Dataset kept;
    kept.manifest = ds.manifest;
    const std::set<Language> langs(cfg_.languages.begin(), cfg_.languages.end());
    const std::set<std::string> problems(cfg_.problems.begin(), cfg_.problems.end());
    for (const auto& s : ds.samples) {
      if (!langs.count(s.language) || (!problems.empty() && !problems.count(s.problem_id))) continue;
      kept.samples.push_back(s);
      kept.problems.emplace(s.problem_id, ds.problem(s.problem_id));
    }
    if (kept.samples.empty()) throw Error(ErrorCode::InsufficientData, "no samples left after filtering");
    corpus::refresh_manifest(kept);
    std::string digest = corpus::save_dataset(kept, dir("dataset"));
    StageResult r;
    r.summary = {{"stage", "ingest"},
                 {"problems", kept.problems.size()},
                 {"samples", kept.samples.size()},
                 {"dataset_sha256", digest}};
    finish("dataset", r);
    return r;
  }

  StageResult inject() {
    begin();
    const corpus::Dataset ds = load_dataset_stage();
    transforms::TransformConfig tc;
    for (const auto& t : cfg_.templates) {
      auto more = transforms::parse_templates(io::read_file(t));
      tc.templates.insert(tc.templates.end(), more.begin(), more.end());
    }
    if (!cfg_.dummy_pool.empty()) tc.dummy_pool = transforms::parse_dummy_pool(io::read_file(cfg_.dummy_pool));
    tc.max_attempts = cfg_.max_attempts;
    tc.generator = make_generator();

    struct Slot {
      std::optional<transforms::BiasVariant> variant;
      nlohmann::json error;
    };
    std::vector<std::pair<const corpus::CodeSample*, transforms::BiasKind>> work;
    for (const auto& s : ds.samples) {
      for (const auto& b : cfg_.biases) work.emplace_back(&s, b);
    }
    std::vector<Slot> slots(work.size());
    parallel_for(work.size(), cfg_.inject_workers, [&](std::size_t i) {
      const auto& [sample, bias] = work[i];
      try {
        slots[i].variant = transforms::apply(*sample, bias, tc, transforms::item_seed(cfg_.seed, sample->sample_id, bias));
      } catch (const Error& e) {
        slots[i].error = {{"sample_id", sample->sample_id},
                          {"bias", transforms::to_string(bias)},
                          {"error", std::string(to_string(e.code()))},
                          {"message", e.detail()}};
      } catch (const std::exception& e) {
        slots[i].error = {{"sample_id", sample->sample_id},
                          {"bias", transforms::to_string(bias)},
                          {"error", "Unexpected"},
                          {"message", e.what()}};
      }
    });

    std::vector<transforms::BiasVariant> variants;
    nlohmann::json errors = nlohmann::json::array(), flagged = nlohmann::json::array();
    for (auto& s : slots) {
      if (s.variant) {
        if (s.variant->validation_state == transforms::ValidationState::Flagged) {
          flagged.push_back({{"variant_id", s.variant->variant_id}, {"reason", s.variant->flag_reason}});
        }
        variants.push_back(std::move(*s.variant));
      } else {
        errors.push_back(std::move(s.error));
      }
    }
    std::sort(variants.begin(), variants.end(), [](const auto& a, const auto& b) { return a.variant_id < b.variant_id; });
    io::atomic_write(dir("variants") / "variants.jsonl", transforms::serialize_variants(variants));
    std::map<std::string, std::size_t> per_bias;
    for (const auto& v : variants) ++per_bias[transforms::to_string(v.bias)];
    StageResult r;
    r.summary = {{"stage", "inject"}, {"variants", variants.size()}, {"per_bias", per_bias},
                 {"flagged", flagged},  {"errors", errors}};
    io::atomic_write(dir("variants") / "summary.json", r.summary.dump(2) + "\n");
    r.exit_code = flagged.empty() && errors.empty() ? kOk : kPartial;
    finish("variants", r);
    return r;
  }

  StageResult validate() {
    begin();
    const corpus::Dataset ds = load_dataset_stage();
    auto variants = load_variants(dir("variants") / "variants.jsonl", "inject");
    validation::ValidationPolicy policy;
    policy.timeout = cfg_.timeout;
    policy.compile_timeout = cfg_.compile_timeout;
    policy.workers = cfg_.validate_workers;
    policy.work_root = fs::temp_directory_path() / ("biasforge-validate-" + std::to_string(::getpid()));
    validation::Validator validator(validation::load_toolchains(cfg_.toolchains), policy);
    auto results = validator.validate_batch(variants, ds);
    fs::remove_all(policy.work_root);

    std::vector<nlohmann::json> lines;
    for (const auto& res : results) lines.push_back(validation::to_json(res));
    io::atomic_write(dir("validation") / "results.jsonl", detail::jsonl(lines));
    io::atomic_write(dir("validation") / "variants.jsonl", transforms::serialize_variants(variants));
    io::atomic_write(dir("validation") / "flagged.jsonl", validation::flagged_export(variants, results, ds));

    std::map<std::string, const validation::ValidationResult*> by_id;
    for (const auto& res : results) by_id[res.variant_id] = &res;
    std::string csv = metrics::csv::row({"variant_id", "language", "bias", "stage", "outcome", "state", "reason"});
    std::size_t n_flagged = 0;
    std::map<std::string, std::map<std::string, std::size_t>> per_bias;
    for (const auto& v : variants) {
      const auto* res = by_id.count(v.variant_id) ? by_id[v.variant_id] : nullptr;
      const bool bad = v.validation_state == transforms::ValidationState::Flagged;
      n_flagged += bad ? 1 : 0;
      ++per_bias[transforms::to_string(v.bias)][std::string(transforms::to_string(v.validation_state))];
      csv += metrics::csv::row({v.variant_id, std::string(to_string(v.language)), transforms::to_string(v.bias),
                                res ? std::string(validation::to_string(res->stage)) : "",
                                res ? std::string(validation::to_string(res->outcome)) : "",
                                std::string(transforms::to_string(v.validation_state)), v.flag_reason});
    }
    io::atomic_write(dir("validation") / "summary.csv", csv);
    StageResult r;
    r.summary = {{"stage", "validate"},
                 {"variants", variants.size()},
                 {"validated", variants.size() - n_flagged},
                 {"flagged", n_flagged},
                 {"per_bias", per_bias}};
    r.exit_code = n_flagged == 0 ? kOk : kPartial;
    finish("validation", r);
    return r;
  }

  StageResult evaluate() {
    begin();
    if (cfg_.judges.empty()) throw Error(ErrorCode::ConfigError, "no judges configured");
    const corpus::Dataset ds = load_dataset_stage();
    const auto variants = evaluation_variants();
    const judge::PromptSet prompts = judge::load_prompts(cfg_.prompts);

    std::vector<judge::EvalItem> items;
    std::vector<nlohmann::json> index;
    for (const auto& s : ds.samples) {
      items.push_back({s.sample_id, &ds.problem(s.problem_id), s.source, s.language, s.label});
      index.push_back({{"item_id", s.sample_id}, {"base_sample_id", s.sample_id}, {"problem_id", s.problem_id},
                       {"language", to_string(s.language)}, {"bias", "original"}, {"label", to_string(s.label)}});
    }
    std::size_t skipped_variants = 0;
    for (const auto& v : variants) {
      const bool usable = cfg_.validate ? v.validation_state == transforms::ValidationState::Validated
                                        : v.validation_state != transforms::ValidationState::Flagged;
      if (!usable) {
        ++skipped_variants;
        continue;
      }
      items.push_back({v.variant_id, &ds.problem(v.problem_id), v.source, v.language, v.label});
      index.push_back({{"item_id", v.variant_id}, {"base_sample_id", v.base_sample_id}, {"problem_id", v.problem_id},
                       {"language", to_string(v.language)}, {"bias", transforms::to_string(v.bias)},
                       {"label", to_string(v.label)}});
    }
    std::sort(index.begin(), index.end(), [](const auto& a, const auto& b) { return a["item_id"] < b["item_id"]; });
    io::atomic_write(dir("judgments") / "items.jsonl", detail::jsonl(index));

    nlohmann::json per_judge = nlohmann::json::object();
    std::size_t total_errors = 0;
    for (const auto& jc : cfg_.judges) {
      auto judge = make_judge(jc, prompts);
      const std::size_t trials = cfg_.trials.value_or(jc.effective_trials());
      const fs::path store = dir("judgments") / jc.judge_id;

      // Test cases: reuse the final file or the journal of an interrupted run.
      const fs::path tc_journal = dir("logs") / "journal" / (jc.judge_id + ".testcases.jsonl");
      detail::LineSink tc_sink(tc_journal);
      judge::TestCaseCache cache([&](std::size_t trial, const judge::TestCaseSet& set) {
        auto j = judge::to_json(set);
        j["trial"] = trial;
        tc_sink.write(j.dump());
      });
      for (const auto& src : {store / "testcases.jsonl", tc_journal}) {
        for (const auto& j : detail::read_journal(src)) {
          cache.preload(j.at("trial").get<std::size_t>(), judge::test_case_set_from_json(j));
        }
      }

      nlohmann::json paradigms = nlohmann::json::object();
      for (auto paradigm : cfg_.paradigms) {
        const std::string name(judge::to_string(paradigm));
        const fs::path final_path = store / (name + ".jsonl");
        const fs::path journal = dir("logs") / "journal" / (jc.judge_id + "." + name + ".jsonl");
        judge::RunOptions opts;
        for (const auto& src : {final_path, journal}) {
          for (const auto& j : detail::read_journal(src)) {
            auto jd = judge::judgment_from_json(j);
            if (!judge::failed_call(jd)) opts.existing.push_back(std::move(jd));  // failed calls are retried
          }
        }
        const std::size_t reused = opts.existing.size();
        detail::LineSink sink(journal);
        opts.on_judgment = [&](const judge::Judgment& j) { sink.write(judge::to_json(j).dump()); };
        opts.test_cases = &cache;
        auto result = judge::run_condition(*judge, items, paradigm, trials, opts);
        std::vector<nlohmann::json> lines;
        for (const auto& j : result.judgments) lines.push_back(judge::to_json(j));
        io::atomic_write(final_path, detail::jsonl(lines));
        total_errors += result.errors;
        paradigms[name] = {{"judgments", result.judgments.size()},
                           {"reused", reused},
                           {"errors", result.errors},
                           {"empty_test_sets", result.empty_test_sets}};
      }
      std::vector<nlohmann::json> sets;
      for (const auto& [trial, set] : cache.all()) {
        auto j = judge::to_json(set);
        j["trial"] = trial;
        sets.push_back(std::move(j));
      }
      if (!sets.empty()) io::atomic_write(store / "testcases.jsonl", detail::jsonl(sets));
      per_judge[jc.judge_id] = {{"trials", trials}, {"paradigms", paradigms}};
    }
    // The stores are complete; journals only matter for interrupted runs.
    fs::remove_all(dir("logs") / "journal");

    StageResult r;
    r.summary = {{"stage", "evaluate"},
                 {"items", items.size()},
                 {"skipped_variants", skipped_variants},
                 {"judges", per_judge},
                 {"errors", total_errors}};
    // How much a run reused depends on where it was interrupted, so the
    // stored copy leaves it out; stdout and the run log keep it.
    nlohmann::json stored = r.summary;
    for (auto& [id, jj] : stored["judges"].items()) {
      for (auto& [p, pj] : jj["paradigms"].items()) pj.erase("reused");
    }
    io::atomic_write(dir("judgments") / "summary.json", stored.dump(2) + "\n");
    r.exit_code = total_errors == 0 ? kOk : kPartial;
    finish("judgments", r);
    return r;
  }

  StageResult report() {
    begin();
    const fs::path index_path = dir("judgments") / "items.jsonl";
    if (!fs::exists(index_path)) throw Error(ErrorCode::EmptyInput, "no judgment store; run evaluate first");
    struct ItemInfo {
      Language language;
      std::optional<transforms::BiasKind> bias;
      Label label;
    };
    std::map<std::string, ItemInfo> info;
    for (const auto& j : detail::read_journal(index_path)) {
      info[j.at("item_id")] = {parse_language(j.at("language").get<std::string>()),
                               metrics::parse_bias_name(j.at("bias").get<std::string>()),
                               *try_parse_label(j.at("label").get<std::string>())};
    }

    std::map<metrics::ConditionKey, std::vector<judge::Judgment>> grouped;
    std::map<metrics::ConditionKey, std::map<std::string, Label>> labels;
    std::size_t judgments = 0;
    for (const auto& jc : cfg_.judges) {
      for (auto paradigm : cfg_.paradigms) {
        const fs::path store = dir("judgments") / jc.judge_id / (std::string(judge::to_string(paradigm)) + ".jsonl");
        for (const auto& line : detail::read_journal(store)) {
          auto j = judge::judgment_from_json(line);
          auto it = info.find(j.item_id);
          if (it == info.end()) throw Error(ErrorCode::IntegrityError, "judgment for unknown item " + j.item_id);
          metrics::ConditionKey key{jc.judge_id, it->second.language, it->second.bias, paradigm};
          labels[key][j.item_id] = it->second.label;
          grouped[key].push_back(std::move(j));
          ++judgments;
        }
      }
    }
    if (judgments == 0) throw Error(ErrorCode::EmptyInput, "the judgment store is empty");

    std::vector<std::pair<metrics::ConditionKey, metrics::ConditionStats>> stats;
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [key, js] : grouped) {
      try {
        stats.emplace_back(key, metrics::accuracy(metrics::score_items(js, labels.at(key))));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyGroup) throw;
        skipped.push_back({{"condition", metrics::to_string(key)}, {"reason", e.detail()}});
      }
    }
    auto report = metrics::aggregate(stats, cfg_.dead_band);
    io::atomic_write(dir("reports") / "conditions.csv", metrics::conditions_csv(report));
    io::atomic_write(dir("reports") / "mad.csv", metrics::mads_csv(report));
    io::atomic_write(dir("reports") / "table.txt", metrics::render_table(report));
    nlohmann::json sweeps = nlohmann::json::array();
    for (auto tag : {transforms::BiasTag::VariableRename, transforms::BiasTag::IllusoryComplexity}) {
      auto series = metrics::sweeps(report, tag);
      if (series.empty()) continue;
      const std::string name = "sweep_" + std::string(transforms::tag_name(tag)) + ".csv";
      io::atomic_write(dir("reports") / name, metrics::sweep_csv(series));
      sweeps.push_back(name);
    }
    std::map<std::string, std::size_t> directions;
    for (const auto& row : report.rows) {
      if (row.direction) ++directions[std::string(metrics::to_string(*row.direction))];
    }
    StageResult r;
    r.summary = {{"stage", "report"},     {"conditions", report.rows.size()}, {"judgments", judgments},
                 {"directions", directions}, {"sweeps", sweeps},              {"skipped", skipped}};
    io::atomic_write(dir("reports") / "summary.json", r.summary.dump(2) + "\n");
    r.exit_code = skipped.empty() ? kOk : kPartial;
    finish("reports", r);
    return r;
  }

  /// ingest, inject, validate (unless disabled), evaluate, report. Stops at
  /// the first stage that fails outright; partial failures carry on.
  StageResult run() {
    StageResult all;
    all.summary = {{"stage", "run"}, {"stages", nlohmann::json::array()}};
    auto step = [&](StageResult r) {
      all.exit_code = std::max(all.exit_code, r.exit_code);
      all.summary["stages"].push_back(std::move(r.summary));
    };
    step(ingest());
    step(inject());
    if (cfg_.validate) step(validate());
    step(evaluate());
    step(report());
    return all;
  }

  void log(const std::string& message) {
    fs::create_directories(dir("logs"));
    std::ofstream(dir("logs") / "run.log", std::ios::app) << detail::utc_now() << " " << message << "\n";
  }

 private:
  /// Echoes the effective config; the output path itself is left out so that
  /// two runs into different directories compare equal.
  void begin() {
    fs::create_directories(cfg_.out);
    nlohmann::json echo = cfg_.raw;
    echo.erase("out");
    io::atomic_write(cfg_.out / "config.json", echo.dump(2) + "\n");
  }

  void finish(const char* stage, const StageResult& r) {
    write_listing(dir(stage));
    nlohmann::json top = nlohmann::json::object();
    for (const char* s : {"dataset", "variants", "validation", "judgments", "reports"}) {
      if (fs::exists(dir(s) / "files.sha256")) top[s] = io::sha256_hex(io::read_file(dir(s) / "files.sha256"));
    }
    io::atomic_write(cfg_.out / "manifest.json", top.dump(2) + "\n");
    log(std::string(r.summary.value("stage", stage)) + " exit=" + std::to_string(r.exit_code) + " " +
        r.summary.dump());
  }

  /// sha256sum-style listing of every file below `d`.
  static void write_listing(const fs::path& d) {
    std::vector<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(d)) {
      if (!e.is_regular_file()) continue;
      auto rel = fs::relative(e.path(), d).generic_string();
      if (rel != "files.sha256") names.push_back(rel);
    }
    std::sort(names.begin(), names.end());
    std::string out;
    for (const auto& n : names) out += io::sha256_hex(io::read_file(d / n)) + "  " + n + "\n";
    io::atomic_write(d / "files.sha256", out);
  }

  corpus::Dataset load_dataset_stage() const {
    if (!fs::exists(dir("dataset") / "dataset.jsonl")) {
      throw Error(ErrorCode::ConfigError, "no dataset in " + cfg_.out.string() + "; run ingest first");
    }
    return corpus::load_saved_dataset(dir("dataset"));
  }

  static std::vector<transforms::BiasVariant> load_variants(const fs::path& p, const char* producer) {
    if (!fs::exists(p)) throw Error(ErrorCode::ConfigError, "missing " + p.string() + "; run " + producer + " first");
    return transforms::parse_variants(io::read_file(p));
  }

  std::vector<transforms::BiasVariant> evaluation_variants() const {
    if (cfg_.validate) return load_variants(dir("validation") / "variants.jsonl", "validate");
    return load_variants(dir("variants") / "variants.jsonl", "inject");
  }

  std::shared_ptr<judge::Judge> make_judge(const judge::JudgeConfig& jc, const judge::PromptSet& prompts) {
    auto transport = judge::make_transport(jc);
    if (jc.kind == judge::JudgeKind::HttpModel) {
      transport = std::make_shared<judge::RecordingTransport>(transport,
                                                              dir("logs") / ("replay-" + jc.judge_id + ".jsonl"));
    }
    return std::make_shared<judge::Judge>(jc, transport, prompts);
  }

  std::shared_ptr<transforms::TextGenerator> make_generator() {
    switch (cfg_.generator.kind) {
      case GeneratorConfig::Kind::None: return nullptr;
      case GeneratorConfig::Kind::Mock: return std::make_shared<MockCommentGenerator>();
      case GeneratorConfig::Kind::Judge:
        return std::make_shared<judge::JudgeTextGenerator>(make_judge(*cfg_.generator.judge, {}));
    }
    return nullptr;
  }

  static void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    auto run = [&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
  }

  RunConfig cfg_;
};

}  // namespace biasforge::pipeline

#endif  // BIASFORGE_PIPELINE_PIPELINE_HPP
