#ifndef BIASFORGE_JUDGE_TYPES_HPP
#define BIASFORGE_JUDGE_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biasforge/error.hpp"
#include "biasforge/language.hpp"

namespace biasforge::judge {

enum class Paradigm { Direct, TestCaseBased };
enum class Verdict { Correct, Incorrect, Unparseable };
enum class JudgeKind { HttpModel, Mock, Replay };

inline std::string_view to_string(Paradigm p) { return p == Paradigm::Direct ? "direct" : "testcase"; }

inline Paradigm parse_paradigm(std::string_view s) {
  if (s == "direct") return Paradigm::Direct;
  if (s == "testcase" || s == "test_case" || s == "testcase_based") return Paradigm::TestCaseBased;
  throw Error(ErrorCode::ConfigError, "unknown paradigm " + std::string(s));
}

inline std::string_view display_name(Paradigm p) { return p == Paradigm::Direct ? "Direct" : "Test-case"; }

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::Incorrect: return "incorrect";
    case Verdict::Unparseable: return "unparseable";
  }
  return "?";
}

inline Verdict parse_verdict_name(std::string_view s) {
  if (s == "correct") return Verdict::Correct;
  if (s == "incorrect") return Verdict::Incorrect;
  if (s == "unparseable") return Verdict::Unparseable;
  throw Error(ErrorCode::MalformedRecord, "unknown verdict " + std::string(s));
}

/// The verdict a perfect judge would give for a label.
inline Verdict verdict_for(Label label) { return label == Label::Correct ? Verdict::Correct : Verdict::Incorrect; }

inline std::string_view to_string(JudgeKind k) {
  switch (k) {
    case JudgeKind::HttpModel: return "http";
    case JudgeKind::Mock: return "mock";
    case JudgeKind::Replay: return "replay";
  }
  return "?";
}

struct RetryPolicy {
  std::size_t max_retries = 3;
  double initial_backoff_s = 1.0;
  double multiplier = 2.0;
  double max_backoff_s = 60.0;
};

/// One judge. Mock judges carry their rules in `mock`; HTTP judges name the
/// environment variable that holds the API key, never the key.
struct JudgeConfig {
  std::string judge_id;
  JudgeKind kind = JudgeKind::Mock;
  std::string model;
  std::string endpoint;     // base URL of an OpenAI-compatible API
  std::string api_key_env;  // name of the variable holding the key
  double temperature = 0.0;
  std::size_t max_output_tokens = 2048;
  std::optional<std::size_t> trials;  // default depends on determinism
  double rate_limit = 0.0;            // requests per second; 0 = unlimited
  std::size_t max_in_flight = 4;
  double timeout_s = 120.0;
  RetryPolicy retry;
  nlohmann::json mock;  // rules for Mock judges
  std::string replay_log;

  [[nodiscard]] bool deterministic() const { return kind != JudgeKind::HttpModel; }
  [[nodiscard]] std::size_t effective_trials() const { return trials.value_or(deterministic() ? 1 : 3); }
};

inline JudgeConfig parse_judge_config(const nlohmann::json& j) {
  JudgeConfig c;
  c.judge_id = j.at("id").get<std::string>();
  std::string kind = j.value("kind", std::string("mock"));
  if (kind == "http") {
    c.kind = JudgeKind::HttpModel;
  } else if (kind == "mock") {
    c.kind = JudgeKind::Mock;
  } else if (kind == "replay") {
    c.kind = JudgeKind::Replay;
  } else {
    throw Error(ErrorCode::ConfigError, "judge " + c.judge_id + ": unknown kind " + kind);
  }
  c.model = j.value("model", c.judge_id);
  c.endpoint = j.value("endpoint", std::string());
  c.api_key_env = j.value("api_key_env", std::string());
  if (j.contains("api_key")) {
    throw Error(ErrorCode::ConfigError, "judge " + c.judge_id + ": put the key in an environment variable and name "
                                        "it with api_key_env");
  }
  c.temperature = j.value("temperature", 0.0);
  c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
  if (j.contains("trials")) c.trials = j["trials"].get<std::size_t>();
  c.rate_limit = j.value("rate_limit", 0.0);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    c.retry.max_retries = r.value("max_retries", c.retry.max_retries);
    c.retry.initial_backoff_s = r.value("initial_backoff_s", c.retry.initial_backoff_s);
    c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
    c.retry.max_backoff_s = r.value("max_backoff_s", c.retry.max_backoff_s);
  }
  c.mock = j.value("mock", nlohmann::json::object());
  c.replay_log = j.value("replay_log", std::string());
  if (c.trials && *c.trials == 0) throw Error(ErrorCode::ConfigError, "judge " + c.judge_id + ": trials must be >= 1");
  if (c.temperature < 0) throw Error(ErrorCode::ConfigError, "judge " + c.judge_id + ": temperature must be >= 0");
  if (c.max_in_flight == 0) c.max_in_flight = 1;
  if (c.kind == JudgeKind::HttpModel && (c.endpoint.empty() || c.api_key_env.empty())) {
    throw Error(ErrorCode::ConfigError, "judge " + c.judge_id + ": http judges need endpoint and api_key_env");
  }
  return c;
}

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  friend bool operator==(const Usage&, const Usage&) = default;
};

/// One judge call on one item. Latency is kept in memory and logs only, so
/// stores stay reproducible.
struct Judgment {
  std::string item_id;
  std::string judge_id;
  Paradigm paradigm = Paradigm::Direct;
  std::size_t trial_index = 0;
  Verdict verdict = Verdict::Unparseable;
  std::string raw_output;
  std::string error;  // transport failure or empty test-case set
  Usage usage;
  double latency_ms = 0;

  friend bool operator==(const Judgment& a, const Judgment& b) {
    return a.item_id == b.item_id && a.judge_id == b.judge_id && a.paradigm == b.paradigm &&
           a.trial_index == b.trial_index && a.verdict == b.verdict && a.raw_output == b.raw_output &&
           a.error == b.error && a.usage == b.usage;
  }
};

inline nlohmann::json to_json(const Judgment& j) {
  nlohmann::json out = {{"item_id", j.item_id},
                        {"judge_id", j.judge_id},
                        {"paradigm", to_string(j.paradigm)},
                        {"trial", j.trial_index},
                        {"verdict", to_string(j.verdict)},
                        {"raw_output", j.raw_output},
                        {"usage", {{"prompt_tokens", j.usage.prompt_tokens},
                                   {"completion_tokens", j.usage.completion_tokens}}}};
  if (!j.error.empty()) out["error"] = j.error;
  return out;
}

inline Judgment judgment_from_json(const nlohmann::json& j) {
  Judgment out;
  out.item_id = j.at("item_id").get<std::string>();
  out.judge_id = j.at("judge_id").get<std::string>();
  out.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
  out.trial_index = j.at("trial").get<std::size_t>();
  out.verdict = parse_verdict_name(j.at("verdict").get<std::string>());
  out.raw_output = j.at("raw_output").get<std::string>();
  out.error = j.value("error", std::string());
  if (j.contains("usage")) {
    out.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
    out.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
  }
  return out;
}

struct TestCase {
  std::string input;
  std::string expected_output;
  friend bool operator==(const TestCase&, const TestCase&) = default;
};

/// Cases written by a judge for one task. An empty set means generation
/// failed; `error` says why and raw_output keeps the reply.
struct TestCaseSet {
  std::string item_id;
  std::vector<TestCase> cases;
  std::string raw_output;
  std::string error;

  [[nodiscard]] bool usable() const { return !cases.empty(); }
  friend bool operator==(const TestCaseSet&, const TestCaseSet&) = default;
};

inline nlohmann::json to_json(const TestCaseSet& s) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : s.cases) cases.push_back({{"input", c.input}, {"expected_output", c.expected_output}});
  nlohmann::json out = {{"item_id", s.item_id}, {"cases", cases}, {"raw_output", s.raw_output}};
  if (!s.error.empty()) out["error"] = s.error;
  return out;
}

inline TestCaseSet test_case_set_from_json(const nlohmann::json& j) {
  TestCaseSet s;
  s.item_id = j.at("item_id").get<std::string>();
  for (const auto& c : j.at("cases")) {
    s.cases.push_back({c.at("input").get<std::string>(), c.at("expected_output").get<std::string>()});
  }
  s.raw_output = j.value("raw_output", std::string());
  s.error = j.value("error", std::string());
  return s;
}

}  // namespace biasforge::judge

#endif  // BIASFORGE_JUDGE_TYPES_HPP
