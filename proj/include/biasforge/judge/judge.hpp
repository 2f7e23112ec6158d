#ifndef BIASFORGE_JUDGE_JUDGE_HPP
#define BIASFORGE_JUDGE_JUDGE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "biasforge/corpus.hpp"
#include "biasforge/judge/prompts.hpp"
#include "biasforge/judge/transport.hpp"
#include "biasforge/judge/types.hpp"
#include "biasforge/judge/verdict.hpp"
#include "biasforge/transforms/misleading.hpp"

namespace biasforge::judge {

/// One piece of code to judge with its task and ground truth.
struct EvalItem {
  std::string item_id;
  const corpus::Problem* problem = nullptr;
  std::string code;
  Language language = Language::Cpp;
  Label label = Label::Correct;
};

class Judge {
 public:
  Judge(JudgeConfig config, std::shared_ptr<Transport> transport, PromptSet prompts = {})
      : config_(std::move(config)),
        transport_(std::move(transport)),
        prompts_(std::move(prompts)),
        limiter_(std::make_shared<RateLimiter>(config_.rate_limit)) {}

  [[nodiscard]] const JudgeConfig& config() const { return config_; }

  Judgment direct_evaluate(const EvalItem& item, std::size_t trial) {
    ChatRequest req = request(render(prompts_.direct, item, nullptr), trial);
    req.context = context(CallKind::Evaluate, item);
    return to_judgment(item, Paradigm::Direct, trial, call(req));
  }

  /// Parse failures give an empty set that keeps the raw reply.
  TestCaseSet generate_test_cases(const corpus::Problem& task, std::size_t trial) {
    ChatRequest req = request(biasforge::judge::render(prompts_.test_generation, {{"task", task.description}}), trial);
    req.context.kind = CallKind::GenerateTests;
    req.context.item_id = task.problem_id;
    Reply r = call(req);
    if (!r.error.empty()) {
      TestCaseSet failed;
      failed.item_id = task.problem_id;
      failed.error = r.error;
      return failed;
    }
    return parse_test_cases(task.problem_id, std::move(r.text));
  }

  /// An unusable case set is recorded as Unparseable without calling the
  /// judge.
  Judgment testcase_evaluate(const EvalItem& item, const TestCaseSet& cases, std::size_t trial) {
    if (!cases.usable()) {
      Judgment j;
      j.item_id = item.item_id;
      j.judge_id = config_.judge_id;
      j.paradigm = Paradigm::TestCaseBased;
      j.trial_index = trial;
      j.verdict = Verdict::Unparseable;
      j.error = std::string(to_string(ErrorCode::EmptyTestCaseSet)) +
                (cases.error.empty() ? std::string() : ": " + cases.error);
      return j;
    }
    ChatRequest req = request(render(prompts_.testcase_evaluation, item, &cases), trial);
    req.context = context(CallKind::EvaluateWithTests, item);
    req.context.test_case_count = cases.cases.size();
    return to_judgment(item, Paradigm::TestCaseBased, trial, call(req));
  }

  /// Sends a free-form prompt (used for comment generation) with the same
  /// rate limit but without retries; failures propagate.
  ChatResponse complete(const std::string& prompt, std::size_t attempt) {
    ChatRequest req = request(prompt, attempt);
    req.context.kind = CallKind::Generate;
    limiter_->acquire();
    return transport_->send(req);
  }

 private:
  struct Reply {
    std::string text;
    Usage usage;
    std::string error;
    double latency_ms = 0;
  };

  ChatRequest request(std::string prompt, std::size_t trial) const {
    ChatRequest req;
    req.model = config_.model;
    req.prompt = std::move(prompt);
    req.temperature = config_.temperature;
    req.max_tokens = config_.max_output_tokens;
    req.trial = trial;
    return req;
  }

  CallContext context(CallKind kind, const EvalItem& item) const {
    CallContext c;
    c.kind = kind;
    c.item_id = item.item_id;
    c.code = item.code;
    if (config_.kind == JudgeKind::Mock) c.label = item.label;
    return c;
  }

  static std::string render(const std::string& tmpl, const EvalItem& item, const TestCaseSet* cases) {
    std::map<std::string, std::string> slots = {{"task", item.problem ? item.problem->description : ""},
                                                {"code", item.code},
                                                {"language", std::string(display_name(item.language))}};
    if (cases) slots["test_cases"] = format_test_cases(*cases);
    return biasforge::judge::render(tmpl, slots);
  }

  /// Sends with rate limiting and retries. Transport and rate-limit errors
  /// are retried with exponential backoff; the final failure is returned
  /// as an error string rather than thrown.
  Reply call(const ChatRequest& req) {
    Reply out;
    double backoff = config_.retry.initial_backoff_s;
    for (std::size_t attempt = 0;; ++attempt) {
      limiter_->acquire();
      auto start = std::chrono::steady_clock::now();
      try {
        ChatResponse r = transport_->send(req);
        out.text = std::move(r.text);
        out.usage = r.usage;
        out.error.clear();
        out.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return out;
      } catch (const Error& e) {
        const bool retryable = e.code() == ErrorCode::TransportError || e.code() == ErrorCode::RateLimited;
        out.error = e.what();
        if (!retryable || attempt >= config_.retry.max_retries) return out;
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(std::min(backoff, config_.retry.max_backoff_s)));
      backoff *= config_.retry.multiplier;
    }
  }

  Judgment to_judgment(const EvalItem& item, Paradigm paradigm, std::size_t trial, Reply r) const {
    Judgment j;
    j.item_id = item.item_id;
    j.judge_id = config_.judge_id;
    j.paradigm = paradigm;
    j.trial_index = trial;
    j.raw_output = std::move(r.text);
    j.error = std::move(r.error);
    j.usage = r.usage;
    j.latency_ms = r.latency_ms;
    j.verdict = j.error.empty() ? parse_verdict(j.raw_output) : Verdict::Unparseable;
    return j;
  }

  JudgeConfig config_;
  std::shared_ptr<Transport> transport_;
  PromptSet prompts_;
  std::shared_ptr<RateLimiter> limiter_;
};

/// Test cases depend only on the task, so each (problem, trial) is generated
/// once per judge and reused for the original and every biased variant.
class TestCaseCache {
 public:
  using Listener = std::function<void(std::size_t trial, const TestCaseSet&)>;

  explicit TestCaseCache(Listener on_new = {}) : on_new_(std::move(on_new)) {}

  TestCaseSet get(Judge& judge, const corpus::Problem& task, std::size_t trial) {
    std::shared_future<TestCaseSet> fut;
    std::promise<TestCaseSet> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto key = std::make_pair(trial, task.problem_id);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        fut = promise.get_future().share();
        entries_.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      TestCaseSet set = judge.generate_test_cases(task, trial);
      if (on_new_) on_new_(trial, set);
      promise.set_value(std::move(set));
    }
    return fut.get();
  }

  /// Adds a set loaded from a previous run.
  void preload(std::size_t trial, TestCaseSet set) {
    std::promise<TestCaseSet> p;
    auto key = std::make_pair(trial, set.item_id);
    p.set_value(std::move(set));
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(key, p.get_future().share());
  }

  /// Every generated or preloaded set, ordered by (problem, trial).
  std::vector<std::pair<std::size_t, TestCaseSet>> all() const {
    std::vector<std::pair<std::size_t, TestCaseSet>> out;
    std::lock_guard lock(mutex_);
    for (const auto& [key, fut] : entries_) out.emplace_back(key.first, fut.get());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return std::tie(a.second.item_id, a.first) < std::tie(b.second.item_id, b.first);
    });
    return out;
  }

 private:
  Listener on_new_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::size_t, std::string>, std::shared_future<TestCaseSet>> entries_;
};

/// Judgments for trials x items under one paradigm, ordered by
/// (item_id, trial).
struct ConditionResult {
  std::vector<Judgment> judgments;
  std::map<std::string, double> item_scores;  // fraction of trials matching the label
  double accuracy = 0.0;                      // mean of item scores
  std::size_t errors = 0;                     // failed calls
  std::size_t empty_test_sets = 0;            // scored as wrong, not failures
};

/// True when the call behind a judgment failed. An empty test-case set is a
/// wrong verdict, not a failure.
inline bool failed_call(const Judgment& j) {
  return !j.error.empty() && j.error.rfind(to_string(ErrorCode::EmptyTestCaseSet), 0) != 0;
}

/// Fraction of an item's trials whose verdict equals the label; Unparseable
/// counts as wrong.
inline double item_score(const std::vector<const Judgment*>& trials, Label label) {
  if (trials.empty()) return 0.0;
  std::size_t right = 0;
  for (const auto* j : trials) right += j->verdict == verdict_for(label) ? 1 : 0;
  return static_cast<double>(right) / static_cast<double>(trials.size());
}

struct RunOptions {
  /// Judgments from an earlier, interrupted run; their (item, trial) pairs
  /// are not sent again.
  std::vector<Judgment> existing;
  /// Called once per new judgment, from worker threads, before the run ends.
  std::function<void(const Judgment&)> on_judgment;
  /// Shared across conditions of one judge; required for TestCaseBased.
  TestCaseCache* test_cases = nullptr;
};

inline ConditionResult run_condition(Judge& judge, const std::vector<EvalItem>& items, Paradigm paradigm,
                                     std::size_t trials, RunOptions options = {}) {
  if (trials == 0) throw Error(ErrorCode::ConfigError, "trials must be >= 1");
  TestCaseCache local_cache;
  TestCaseCache& cache = options.test_cases ? *options.test_cases : local_cache;

  std::map<std::pair<std::string, std::size_t>, Judgment> done;
  for (auto& j : options.existing) {
    if (j.paradigm == paradigm && j.trial_index < trials) done.insert_or_assign({j.item_id, j.trial_index}, j);
  }
  std::vector<std::pair<const EvalItem*, std::size_t>> todo;
  for (const auto& item : items) {
    for (std::size_t t = 0; t < trials; ++t) {
      if (!done.count({item.item_id, t})) todo.emplace_back(&item, t);
    }
  }

  std::vector<Judgment> fresh(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const auto& [item, t] = todo[k];
      Judgment j;
      try {
        if (paradigm == Paradigm::Direct) {
          j = judge.direct_evaluate(*item, t);
        } else {
          if (item->problem == nullptr) throw Error(ErrorCode::IntegrityError, "item without task");
          j = judge.testcase_evaluate(*item, cache.get(judge, *item->problem, t), t);
        }
      } catch (const std::exception& e) {
        j = Judgment{};
        j.item_id = item->item_id;
        j.judge_id = judge.config().judge_id;
        j.paradigm = paradigm;
        j.trial_index = t;
        j.verdict = Verdict::Unparseable;
        j.error = e.what();
      }
      if (options.on_judgment) options.on_judgment(j);
      fresh[k] = std::move(j);
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(judge.config().max_in_flight, todo.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (auto& j : fresh) done.insert_or_assign({j.item_id, j.trial_index}, std::move(j));
  ConditionResult out;
  std::set<std::string> wanted;
  for (const auto& item : items) wanted.insert(item.item_id);
  for (auto& [key, j] : done) {
    if (!wanted.count(key.first)) continue;
    if (failed_call(j)) {
      ++out.errors;
    } else if (!j.error.empty()) {
      ++out.empty_test_sets;
    }
    out.judgments.push_back(j);
  }
  double sum = 0.0;
  for (const auto& item : items) {
    std::vector<const Judgment*> per;
    for (std::size_t t = 0; t < trials; ++t) per.push_back(&done.at({item.item_id, t}));
    double s = item_score(per, item.label);
    out.item_scores[item.item_id] = s;
    sum += s;
  }
  out.accuracy = items.empty() ? 0.0 : sum / static_cast<double>(items.size());
  return out;
}

/// Lets a judge endpoint write misleading comments.
class JudgeTextGenerator : public transforms::TextGenerator {
 public:
  explicit JudgeTextGenerator(std::shared_ptr<Judge> judge) : judge_(std::move(judge)) {}

  std::string generate(const transforms::GenerationRequest& request) override {
    return judge_->complete(request.prompt, request.attempt).text;
  }
  std::string model() const override { return judge_->config().model; }

 private:
  std::shared_ptr<Judge> judge_;
};

}  // namespace biasforge::judge

#endif  // BIASFORGE_JUDGE_JUDGE_HPP
