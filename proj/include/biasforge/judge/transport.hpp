#ifndef BIASFORGE_JUDGE_TRANSPORT_HPP
#define BIASFORGE_JUDGE_TRANSPORT_HPP

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "biasforge/error.hpp"
#include "biasforge/io.hpp"
#include "biasforge/judge/types.hpp"
#include "biasforge/language.hpp"

namespace biasforge::judge {

enum class CallKind { Evaluate, GenerateTests, EvaluateWithTests, Generate };

inline std::string_view to_string(CallKind k) {
  switch (k) {
    case CallKind::Evaluate: return "evaluate";
    case CallKind::GenerateTests: return "generate_tests";
    case CallKind::EvaluateWithTests: return "evaluate_with_tests";
    case CallKind::Generate: return "generate";
  }
  return "?";
}

/// What the call is about. Only mock transports look at this; HTTP
/// transports send the prompt and nothing else.
struct CallContext {
  CallKind kind = CallKind::Evaluate;
  std::string item_id;
  std::string code;
  std::optional<Label> label;  // filled for mock judges only
  std::size_t test_case_count = 0;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  std::size_t max_tokens = 2048;
  std::size_t trial = 0;
  CallContext context;
};

struct ChatResponse {
  std::string text;
  Usage usage;
};

/// Key under which a request is recorded and replayed.
inline std::string request_hash(const ChatRequest& r) {
  nlohmann::json j = {{"model", r.model},
                      {"prompt", r.prompt},
                      {"temperature", r.temperature},
                      {"max_tokens", r.max_tokens},
                      {"trial", r.trial}};
  return io::sha256_hex(j.dump());
}

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws TransportError or RateLimited on failures worth retrying.
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

/// Spaces request starts at least 1/rate seconds apart across all threads
/// sharing the limiter.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second) : per_second_(per_second) {}

  /// Blocks until at least 1/rate has passed since the previous caller was
  /// released. Callers queue on the mutex, so spacing holds under contention.
  void acquire() {
    if (per_second_ <= 0) return;
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / per_second_));
    std::lock_guard lock(mutex_);
    if (last_) std::this_thread::sleep_until(*last_ + interval);
    last_ = std::chrono::steady_clock::now();
  }

 private:
  double per_second_;
  std::mutex mutex_;
  std::optional<std::chrono::steady_clock::time_point> last_;
};

/// OpenAI-compatible chat completions endpoint. The key is read from the
/// environment variable named in the config at call time.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, std::string api_key_env, double timeout_s)
      : api_key_env_(std::move(api_key_env)), timeout_s_(timeout_s) {
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint needs a scheme: " + endpoint);
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    base_ = endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/chat/completions";
  }

  ChatResponse send(const ChatRequest& request) override {
    const char* key = std::getenv(api_key_env_.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::ConfigError, "environment variable " + api_key_env_ + " is not set");
    }
    nlohmann::json body = {{"model", request.model},
                           {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_tokens}};
    httplib::Client client(base_);
    const auto secs = static_cast<time_t>(timeout_s_);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(res.error()));
    if (res->status == 429) throw Error(ErrorCode::RateLimited, "HTTP 429");
    if (res->status >= 500 || res->status == 408) {
      throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::ConfigError, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      throw Error(ErrorCode::TransportError, "unexpected response body");
    }
    ChatResponse out;
    const auto& message = j["choices"][0]["message"];
    if (message.contains("content") && message["content"].is_string()) out.text = message["content"];
    if (j.contains("usage")) {
      out.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
      out.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
    }
    return out;
  }

 private:
  std::string api_key_env_;
  double timeout_s_;
  std::string base_;
  std::string path_;
};

/// Deterministic judge driven by rules (all keys optional):
///
///   "base":  "label" | "correct" | "incorrect" | "unparseable"
///            | {"contains": "tok"}           correct iff the code has tok
///            | {"trials": ["correct", ...]}  by trial index, cycling
///   "rules": [{"first_line_contains": "...", "contains": "...",
///              "action": "flip" | "correct" | "incorrect" | "unparseable"}]
///            the first rule whose conditions all hold is applied
///   "test_cases": number of cases to write (0: prose without cases)
///   "testcase": an object with the same keys, used for test-case based
///            evaluation calls instead of the top level
///   "delay_ms": sleep before every reply
///
/// "label" echoes the ground truth, which only mocks are given.
class MockTransport : public Transport {
 public:
  MockTransport(std::string judge_id, nlohmann::json rules) : judge_id_(std::move(judge_id)), rules_(std::move(rules)) {
    if (!rules_.is_object()) rules_ = nlohmann::json::object();
  }

  ChatResponse send(const ChatRequest& request) override {
    const CallContext& ctx = request.context;
    if (auto delay = rules_.value("delay_ms", 0); delay > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    std::string text;
    if (ctx.kind == CallKind::GenerateTests) {
      text = test_case_reply(request);
    } else if (ctx.kind == CallKind::Generate) {
      throw Error(ErrorCode::GeneratorUnavailable, "mock judge " + judge_id_ + " does not generate text");
    } else {
      const nlohmann::json& r = ctx.kind == CallKind::EvaluateWithTests && rules_.contains("testcase")
                                    ? rules_["testcase"]
                                    : rules_;
      Verdict v = decide(r, request);
      text = "Mock judge " + judge_id_ + " looked at " + std::to_string(ctx.code.size()) + " bytes of code";
      if (ctx.kind == CallKind::EvaluateWithTests) {
        text += " and " + std::to_string(ctx.test_case_count) + " test cases";
      }
      text += ".\n";
      text += v == Verdict::Unparseable ? std::string("I cannot decide.\n")
                                        : "Final verdict: " + std::string(to_string(v)) + "\n";
    }
    ChatResponse out;
    out.text = std::move(text);
    out.usage.prompt_tokens = (request.prompt.size() + 3) / 4;
    out.usage.completion_tokens = (out.text.size() + 3) / 4;
    return out;
  }

 private:
  static Verdict named(const std::string& s) {
    if (s == "correct") return Verdict::Correct;
    if (s == "incorrect") return Verdict::Incorrect;
    if (s == "unparseable") return Verdict::Unparseable;
    throw Error(ErrorCode::ConfigError, "unknown mock verdict " + s);
  }

  static Verdict flip(Verdict v) {
    if (v == Verdict::Correct) return Verdict::Incorrect;
    if (v == Verdict::Incorrect) return Verdict::Correct;
    return v;
  }

  static Verdict decide(const nlohmann::json& r, const ChatRequest& request) {
    const CallContext& ctx = request.context;
    Verdict v = Verdict::Unparseable;
    nlohmann::json base = r.value("base", nlohmann::json("label"));
    if (base.is_string()) {
      const std::string b = base.get<std::string>();
      if (b == "label") {
        v = ctx.label ? verdict_for(*ctx.label) : Verdict::Unparseable;
      } else {
        v = named(b);
      }
    } else if (base.is_object() && base.contains("contains")) {
      v = ctx.code.find(base["contains"].get<std::string>()) != std::string::npos ? Verdict::Correct
                                                                                  : Verdict::Incorrect;
    } else if (base.is_object() && base.contains("trials")) {
      const auto& seq = base["trials"];
      if (!seq.is_array() || seq.empty()) throw Error(ErrorCode::ConfigError, "mock trials must be a list");
      v = named(seq[request.trial % seq.size()].get<std::string>());
    } else {
      throw Error(ErrorCode::ConfigError, "unknown mock base " + base.dump());
    }
    const std::string first_line = ctx.code.substr(0, ctx.code.find('\n'));
    for (const auto& rule : r.value("rules", nlohmann::json::array())) {
      bool match = true;
      if (rule.contains("first_line_contains")) {
        match = match && first_line.find(rule["first_line_contains"].get<std::string>()) != std::string::npos;
      }
      if (rule.contains("contains")) {
        match = match && ctx.code.find(rule["contains"].get<std::string>()) != std::string::npos;
      }
      if (!match) continue;
      const std::string action = rule.value("action", std::string("flip"));
      v = action == "flip" ? flip(v) : named(action);
      break;
    }
    return v;
  }

  std::string test_case_reply(const ChatRequest& request) const {
    const auto count = rules_.value("test_cases", std::size_t{2});
    if (count == 0) return "The task is clear, so no explicit cases are needed.\n";
    nlohmann::json cases = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i) {
      cases.push_back({{"input", "case " + std::to_string(i + 1) + " for " + request.context.item_id + "\n"},
                       {"expected_output", "expected " + std::to_string(i + 1) + "\n"}});
    }
    return "Here are the cases.\n" + cases.dump() + "\n";
  }

  std::string judge_id_;
  nlohmann::json rules_;
};

/// One replay-log line per call: request hash, prompt, response, usage and
/// wall-clock timestamp.
struct ReplayEntry {
  std::string request_hash;
  std::string prompt;
  ChatResponse response;
};

/// Serves responses from a replay log by request hash. A request that was
/// never recorded is a TransportError. When several entries share a hash the
/// last one wins.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& log) {
    const std::string text = io::read_file(log);
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
      if (raw.empty()) return;
      auto j = nlohmann::json::parse(raw, nullptr, false);
      if (j.is_discarded()) throw RecordError(ErrorCode::MalformedRecord, line, "replay log line is not JSON");
      ChatResponse r;
      r.text = j.at("response").get<std::string>();
      if (j.contains("usage")) {
        r.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
        r.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
      }
      responses_[j.at("request_hash").get<std::string>()] = r;
    });
  }

  ChatResponse send(const ChatRequest& request) override {
    auto it = responses_.find(request_hash(request));
    if (it == responses_.end()) throw Error(ErrorCode::TransportError, "no recorded response for this request");
    return it->second;
  }

  [[nodiscard]] std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, ChatResponse> responses_;
};

/// Passes calls through and appends each successful exchange to a replay log.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path log)
      : inner_(std::move(inner)), log_(std::move(log)) {
    if (log_.has_parent_path()) std::filesystem::create_directories(log_.parent_path());
  }

  ChatResponse send(const ChatRequest& request) override {
    ChatResponse r = inner_->send(request);
    nlohmann::json j = {{"request_hash", request_hash(request)},
                        {"model", request.model},
                        {"prompt", request.prompt},
                        {"response", r.text},
                        {"usage", {{"prompt_tokens", r.usage.prompt_tokens},
                                   {"completion_tokens", r.usage.completion_tokens}}},
                        {"timestamp", std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count()}};
    std::lock_guard lock(mutex_);
    std::ofstream out(log_, std::ios::app | std::ios::binary);
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "cannot append to " + log_.string());
    return r;
  }

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path log_;
  std::mutex mutex_;
};

/// The transport a judge config asks for. Replay judges need replay_log.
inline std::shared_ptr<Transport> make_transport(const JudgeConfig& c) {
  switch (c.kind) {
    case JudgeKind::HttpModel: return std::make_shared<HttpTransport>(c.endpoint, c.api_key_env, c.timeout_s);
    case JudgeKind::Mock: return std::make_shared<MockTransport>(c.judge_id, c.mock);
    case JudgeKind::Replay:
      if (c.replay_log.empty()) throw Error(ErrorCode::ConfigError, "judge " + c.judge_id + " needs replay_log");
      return std::make_shared<ReplayTransport>(c.replay_log);
  }
  throw Error(ErrorCode::ConfigError, "unhandled judge kind");
}

}  // namespace biasforge::judge

#endif  // BIASFORGE_JUDGE_TRANSPORT_HPP
