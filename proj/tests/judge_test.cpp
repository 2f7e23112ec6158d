#include <gtest/gtest.h>

#include <cstdlib>

#include "biasforge/judge/judge.hpp"
#include "biasforge/transforms/apply.hpp"
#include "support.hpp"

using namespace biasforge;
using namespace biasforge::judge;

namespace {

corpus::Problem task(std::string id = "p1") { return {std::move(id), "Print the sum of two integers.", {}}; }

EvalItem item(const corpus::Problem& p, std::string id, std::string code, Label label) {
  return EvalItem{std::move(id), &p, std::move(code), Language::Python, label};
}

JudgeConfig mock_config(nlohmann::json rules, std::string id = "mock") {
  JudgeConfig c;
  c.judge_id = std::move(id);
  c.model = "mock-model";
  c.kind = JudgeKind::Mock;
  c.mock = std::move(rules);
  return c;
}

Judge mock_judge(nlohmann::json rules) {
  auto c = mock_config(std::move(rules));
  return Judge(c, make_transport(c));
}

/// Counts calls and records their start times.
class CountingTransport : public Transport {
 public:
  explicit CountingTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}
  ChatResponse send(const ChatRequest& r) override {
    {
      std::lock_guard lock(mutex_);
      starts.push_back(std::chrono::steady_clock::now());
      kinds.push_back(r.context.kind);
    }
    return inner_->send(r);
  }
  std::mutex mutex_;
  std::vector<std::chrono::steady_clock::time_point> starts;
  std::vector<CallKind> kinds;

 private:
  std::shared_ptr<Transport> inner_;
};

/// Fails the first `failures` calls with the given error code.
class FlakyTransport : public Transport {
 public:
  FlakyTransport(std::size_t failures, ErrorCode code) : failures_(failures), code_(code) {}
  ChatResponse send(const ChatRequest&) override {
    ++calls;
    if (calls <= failures_) throw Error(code_, "flaky");
    return {"Final verdict: correct", {}};
  }
  std::atomic<std::size_t> calls{0};

 private:
  std::size_t failures_;
  ErrorCode code_;
};

}  // namespace

TEST(ParseVerdict, Examples) {
  EXPECT_EQ(parse_verdict("step 1...\nFinal verdict: correct"), Verdict::Correct);
  EXPECT_EQ(parse_verdict("the code is incorrect... Final verdict: incorrect"), Verdict::Incorrect);
  EXPECT_EQ(parse_verdict("maybe"), Verdict::Unparseable);
}

TEST(ParseVerdict, LastMarkerWinsAndAmbiguityIsUnparseable) {
  EXPECT_EQ(parse_verdict("Verdict: incorrect\nOn reflection...\nFinal Verdict: CORRECT."), Verdict::Correct);
  EXPECT_EQ(parse_verdict("**Final verdict:** Incorrect"), Verdict::Incorrect);
  EXPECT_EQ(parse_verdict("Final verdict: correct or incorrect"), Verdict::Unparseable);
  EXPECT_EQ(parse_verdict("Final verdict: not correct"), Verdict::Unparseable);
  EXPECT_EQ(parse_verdict("Final verdict: correct\nFinal verdict:"), Verdict::Unparseable);
  EXPECT_EQ(parse_verdict("The code is correct."), Verdict::Unparseable);
  EXPECT_EQ(parse_verdict("verdicts: correct"), Verdict::Unparseable);
  EXPECT_EQ(parse_verdict(""), Verdict::Unparseable);
}

TEST(ParseTestCases, WellFormedFencedAndProse) {
  auto two = parse_test_cases("p", "Cases:\n```json\n[{\"input\": \"1 2\\n\", \"expected_output\": \"3\\n\"},"
                                   " {\"input\": \"5 5\", \"output\": 10}]\n```\n");
  ASSERT_EQ(two.cases.size(), 2u);
  EXPECT_EQ(two.cases[0], (TestCase{"1 2\n", "3\n"}));
  EXPECT_EQ(two.cases[1], (TestCase{"5 5", "10"}));
  EXPECT_TRUE(two.error.empty());

  auto prose = parse_test_cases("p", "I think the function is simple enough [citation needed].");
  EXPECT_TRUE(prose.cases.empty());
  EXPECT_FALSE(prose.usable());
  EXPECT_FALSE(prose.error.empty());
  EXPECT_EQ(prose.raw_output, "I think the function is simple enough [citation needed].");

  auto trailing = parse_test_cases("p", "Consider a[i] and b[j].\n[{\"input\": \"x\", \"expected_output\": \"y\"}]");
  ASSERT_EQ(trailing.cases.size(), 1u);
}

TEST(Config, ParsesAndRejectsSecrets) {
  auto c = parse_judge_config(nlohmann::json::parse(R"({"id": "m", "kind": "mock"})"));
  EXPECT_EQ(c.effective_trials(), 1u);
  EXPECT_EQ(c.temperature, 0.0);
  auto h = parse_judge_config(nlohmann::json::parse(
      R"({"id": "h", "kind": "http", "model": "x", "endpoint": "https://e/v1", "api_key_env": "K", "rate_limit": 2})"));
  EXPECT_EQ(h.effective_trials(), 3u);
  EXPECT_EQ(h.rate_limit, 2.0);
  EXPECT_THROW(parse_judge_config(nlohmann::json::parse(
                   R"({"id": "h", "kind": "http", "endpoint": "https://e", "api_key": "sk-secret"})")),
               Error);
  EXPECT_THROW(parse_judge_config(nlohmann::json::parse(R"({"id": "h", "kind": "http", "endpoint": "https://e"})")),
               Error);
  EXPECT_THROW(parse_judge_config(nlohmann::json::parse(R"({"id": "m", "trials": 0})")), Error);
  EXPECT_THROW(parse_judge_config(nlohmann::json::parse(R"({"id": "m", "temperature": -1})")), Error);
}

TEST(DirectEvaluate, AlwaysCorrectMock) {
  auto j = mock_judge({{"base", "correct"}});
  auto p = task();
  auto r = j.direct_evaluate(item(p, "a", "print(1)", Label::Incorrect), 0);
  EXPECT_EQ(r.verdict, Verdict::Correct);
  EXPECT_EQ(r.paradigm, Paradigm::Direct);
  EXPECT_EQ(r.judge_id, "mock");
  EXPECT_NE(r.raw_output.find("Final verdict: correct"), std::string::npos);
  EXPECT_GT(r.usage.prompt_tokens, 0u);
}

TEST(RunCondition, LabelEchoingMockIsPerfect) {
  auto j = mock_judge({{"base", "label"}});
  auto p = task();
  std::vector<EvalItem> items = {item(p, "a", "x", Label::Correct), item(p, "b", "y", Label::Incorrect),
                                 item(p, "c", "z", Label::Incorrect)};
  auto r = run_condition(j, items, Paradigm::Direct, 1);
  EXPECT_EQ(r.judgments.size(), 3u);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
}

TEST(RunCondition, TrialAveragingPerItem) {
  auto j = mock_judge({{"base", {{"trials", {"correct", "correct", "incorrect"}}}}});
  auto p = task();
  std::vector<EvalItem> items = {item(p, "a", "x", Label::Correct)};
  auto r = run_condition(j, items, Paradigm::Direct, 3);
  ASSERT_EQ(r.judgments.size(), 3u);
  EXPECT_DOUBLE_EQ(r.item_scores.at("a"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3.0);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(r.judgments[t].trial_index, t);
}

TEST(RunCondition, UnparseableCountsAsWrong) {
  auto j = mock_judge({{"base", "unparseable"}});
  auto p = task();
  auto r = run_condition(j, {item(p, "a", "x", Label::Correct), item(p, "b", "x", Label::Incorrect)},
                         Paradigm::Direct, 2);
  EXPECT_EQ(r.judgments.size(), 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.0);
}

TEST(RunCondition, SelfDeclaredSensitiveMockShiftsAccuracy) {
  // Right on everything, except that a "correct code" first line flips it.
  auto j = mock_judge({{"base", "label"}, {"rules", {{{"first_line_contains", "correct code"}, {"action", "flip"}}}}});
  auto p = task();
  std::vector<corpus::CodeSample> samples = {{"a", "p1", Language::Python, "print(3)\n", Label::Correct},
                                             {"b", "p1", Language::Python, "print(4)\n", Label::Incorrect}};
  std::vector<EvalItem> original, biased;
  for (const auto& s : samples) {
    original.push_back(item(p, s.sample_id, s.source, s.label));
    biased.push_back(item(p, s.sample_id, transforms::inject_self_declared(s).source, s.label));
  }
  EXPECT_DOUBLE_EQ(run_condition(j, original, Paradigm::Direct, 1).accuracy, 1.0);
  EXPECT_DOUBLE_EQ(run_condition(j, biased, Paradigm::Direct, 1).accuracy, 0.0);
}

TEST(RunCondition, NeverLosesItemsAndSkipsExisting) {
  auto c = mock_config({{"base", "label"}});
  auto counting = std::make_shared<CountingTransport>(make_transport(c));
  c.max_in_flight = 3;
  Judge j(c, counting);
  auto p = task();
  std::vector<EvalItem> items;
  for (int i = 0; i < 7; ++i) items.push_back(item(p, "i" + std::to_string(i), "x", Label::Correct));
  auto full = run_condition(j, items, Paradigm::Direct, 2);
  EXPECT_EQ(full.judgments.size(), 14u);
  EXPECT_EQ(counting->starts.size(), 14u);

  RunOptions resume;
  resume.existing.assign(full.judgments.begin(), full.judgments.begin() + 5);
  std::atomic<int> callbacks{0};
  resume.on_judgment = [&](const Judgment&) { ++callbacks; };
  auto again = run_condition(j, items, Paradigm::Direct, 2, resume);
  EXPECT_EQ(counting->starts.size(), 14u + 9u);
  EXPECT_EQ(callbacks.load(), 9);
  EXPECT_EQ(again.judgments, full.judgments);
}

TEST(RunCondition, TransportFailuresAreRecordedNotThrown) {
  auto c = mock_config({});
  c.retry.max_retries = 2;
  c.retry.initial_backoff_s = 0.001;
  auto always = std::make_shared<FlakyTransport>(100, ErrorCode::TransportError);
  Judge j(c, always);
  auto p = task();
  auto r = run_condition(j, {item(p, "a", "x", Label::Correct)}, Paradigm::Direct, 1);
  ASSERT_EQ(r.judgments.size(), 1u);
  EXPECT_EQ(r.judgments[0].verdict, Verdict::Unparseable);
  EXPECT_NE(r.judgments[0].error.find("TransportError"), std::string::npos);
  EXPECT_EQ(r.errors, 1u);
  EXPECT_EQ(always->calls.load(), 3u);
}

TEST(Retry, TransientFailuresAndRateLimitsAreRetried) {
  auto c = mock_config({});
  c.retry.initial_backoff_s = 0.001;
  for (ErrorCode code : {ErrorCode::TransportError, ErrorCode::RateLimited}) {
    auto flaky = std::make_shared<FlakyTransport>(2, code);
    Judge j(c, flaky);
    auto p = task();
    EXPECT_EQ(j.direct_evaluate(item(p, "a", "x", Label::Correct), 0).verdict, Verdict::Correct);
    EXPECT_EQ(flaky->calls.load(), 3u);
  }
}

TEST(RateLimit, ObservedRateNeverExceedsLimit) {
  auto c = mock_config({{"base", "label"}});
  c.rate_limit = 20.0;
  c.max_in_flight = 4;
  auto counting = std::make_shared<CountingTransport>(make_transport(c));
  Judge j(c, counting);
  auto p = task();
  std::vector<EvalItem> items;
  for (int i = 0; i < 10; ++i) items.push_back(item(p, "i" + std::to_string(i), "x", Label::Correct));
  run_condition(j, items, Paradigm::Direct, 1);
  auto starts = counting->starts;
  ASSERT_EQ(starts.size(), 10u);
  std::sort(starts.begin(), starts.end());
  // Timestamps are taken just after the limiter releases, so allow a little
  // scheduling jitter per gap but none across the whole run.
  for (std::size_t i = 1; i < starts.size(); ++i) {
    EXPECT_GE(starts[i] - starts[i - 1], std::chrono::milliseconds(45)) << i;
  }
  EXPECT_GE(starts.back() - starts.front(), std::chrono::milliseconds(9 * 50 - 2));
}

TEST(TestCases, MockGenerationAndEmptySets) {
  auto p = task();
  auto two = mock_judge({{"test_cases", 2}}).generate_test_cases(p, 0);
  EXPECT_EQ(two.cases.size(), 2u);
  EXPECT_EQ(two.item_id, "p1");
  auto none = mock_judge({{"test_cases", 0}}).generate_test_cases(p, 0);
  EXPECT_TRUE(none.cases.empty());
  EXPECT_FALSE(none.error.empty());
  EXPECT_FALSE(none.raw_output.empty());
}

TEST(TestCases, ChainedMockIsDeterministic) {
  auto j = mock_judge({{"testcase", {{"base", {{"contains", "ok"}}}}}});
  auto p = task();
  auto cases = j.generate_test_cases(p, 0);
  auto yes = j.testcase_evaluate(item(p, "a", "print('ok')", Label::Incorrect), cases, 0);
  auto no = j.testcase_evaluate(item(p, "b", "print('no')", Label::Correct), cases, 0);
  EXPECT_EQ(yes.verdict, Verdict::Correct);
  EXPECT_EQ(no.verdict, Verdict::Incorrect);
  EXPECT_EQ(yes.paradigm, Paradigm::TestCaseBased);
  EXPECT_NE(yes.raw_output.find("2 test cases"), std::string::npos);
  EXPECT_EQ(j.testcase_evaluate(item(p, "a", "print('ok')", Label::Incorrect), cases, 0), yes);
}

TEST(TestCases, EmptySetIsUnparseableAndScoresWrong) {
  auto c = mock_config({{"base", "label"}, {"test_cases", 0}});
  auto counting = std::make_shared<CountingTransport>(make_transport(c));
  Judge j(c, counting);
  auto p = task();
  auto r = j.testcase_evaluate(item(p, "a", "x", Label::Correct), TestCaseSet{"p1", {}, "prose", "none"}, 0);
  EXPECT_EQ(r.verdict, Verdict::Unparseable);
  EXPECT_NE(r.error.find("EmptyTestCaseSet"), std::string::npos);
  EXPECT_TRUE(counting->starts.empty());

  TestCaseCache cache;
  RunOptions opts;
  opts.test_cases = &cache;
  auto cond = run_condition(j, {item(p, "a", "x", Label::Correct), item(p, "b", "y", Label::Incorrect)},
                            Paradigm::TestCaseBased, 1, opts);
  EXPECT_DOUBLE_EQ(cond.accuracy, 0.0);
  EXPECT_EQ(cond.errors, 0u);
  EXPECT_EQ(cond.empty_test_sets, 2u);
  EXPECT_FALSE(failed_call(cond.judgments[0]));
  EXPECT_EQ(counting->starts.size(), 1u);  // one generation call, no evaluation calls
}

TEST(TestCases, GeneratedOncePerProblemAndTrial) {
  auto c = mock_config({{"base", "label"}});
  c.max_in_flight = 4;
  auto counting = std::make_shared<CountingTransport>(make_transport(c));
  Judge j(c, counting);
  auto p1 = task("p1");
  auto p2 = task("p2");
  std::vector<EvalItem> items;
  for (int i = 0; i < 6; ++i) items.push_back(item(i % 2 ? p1 : p2, "i" + std::to_string(i), "x", Label::Correct));
  std::vector<std::size_t> generated;
  std::mutex m;
  TestCaseCache cache([&](std::size_t t, const TestCaseSet&) {
    std::lock_guard lock(m);
    generated.push_back(t);
  });
  RunOptions opts;
  opts.test_cases = &cache;
  auto r = run_condition(j, items, Paradigm::TestCaseBased, 2, opts);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_EQ(generated.size(), 4u);  // 2 problems x 2 trials
  std::size_t gen_calls = std::count(counting->kinds.begin(), counting->kinds.end(), CallKind::GenerateTests);
  EXPECT_EQ(gen_calls, 4u);
  EXPECT_EQ(cache.all().size(), 4u);
  // Reusing the cache for another condition generates nothing new.
  run_condition(j, items, Paradigm::TestCaseBased, 2, opts);
  EXPECT_EQ(generated.size(), 4u);
}

TEST(Replay, RecordedRunReplaysIdentically) {
  auto dir = testsupport::fresh_dir("replay");
  auto log = dir / "replay.jsonl";
  auto c = mock_config({{"base", {{"contains", "ok"}}}});
  Judge recording(c, std::make_shared<RecordingTransport>(make_transport(c), log));
  auto p = task();
  std::vector<EvalItem> items = {item(p, "a", "ok", Label::Correct), item(p, "b", "no", Label::Correct)};
  TestCaseCache cache1, cache2;
  RunOptions o1, o2;
  o1.test_cases = &cache1;
  o2.test_cases = &cache2;
  auto direct = run_condition(recording, items, Paradigm::Direct, 1);
  auto tc = run_condition(recording, items, Paradigm::TestCaseBased, 1, o1);

  auto lines = testsupport::lines_of(testsupport::slurp(log));
  EXPECT_EQ(lines.size(), 5u);
  for (const auto& l : lines) {
    auto j = nlohmann::json::parse(l);
    for (const char* k : {"request_hash", "prompt", "response", "timestamp"}) EXPECT_TRUE(j.contains(k)) << k;
  }

  JudgeConfig rc = c;
  rc.kind = JudgeKind::Replay;
  rc.replay_log = log.string();
  Judge replay(rc, make_transport(rc));
  EXPECT_EQ(run_condition(replay, items, Paradigm::Direct, 1).judgments, direct.judgments);
  EXPECT_EQ(run_condition(replay, items, Paradigm::TestCaseBased, 1, o2).judgments, tc.judgments);

  // Unrecorded requests fail as transport errors.
  rc.retry.max_retries = 0;
  Judge strict(rc, make_transport(rc));
  auto miss = strict.direct_evaluate(item(p, "c", "never seen", Label::Correct), 0);
  EXPECT_EQ(miss.verdict, Verdict::Unparseable);
  EXPECT_NE(miss.error.find("TransportError"), std::string::npos);
}

TEST(Prompts, SlotsAreFilledOnce) {
  EXPECT_EQ(render("{task}|{code}|{other}", {{"task", "T {code}"}, {"code", "C"}}), "T {code}|C|{other}");
  PromptSet defaults;
  for (const auto* t : {&defaults.direct, &defaults.testcase_evaluation}) {
    EXPECT_NE(t->find("{task}"), std::string::npos);
    EXPECT_NE(t->find("{code}"), std::string::npos);
    EXPECT_NE(t->find("Final verdict"), std::string::npos);
  }
  EXPECT_NE(defaults.testcase_evaluation.find("{test_cases}"), std::string::npos);
  EXPECT_NE(defaults.test_generation.find("{task}"), std::string::npos);
}

TEST(Prompts, BundledFilesMatchDefaults) {
  auto loaded = load_prompts(testsupport::source_dir() / "data" / "prompts");
  PromptSet defaults;
  EXPECT_EQ(loaded.direct, defaults.direct);
  EXPECT_EQ(loaded.test_generation, defaults.test_generation);
  EXPECT_EQ(loaded.testcase_evaluation, defaults.testcase_evaluation);
}

TEST(Http, TalksToAnOpenAiCompatibleServer) {
  httplib::Server server;
  std::string seen_auth, seen_model;
  std::atomic<int> mode{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    auto body = nlohmann::json::parse(req.body);
    seen_model = body["model"];
    if (mode == 1) {
      res.status = 429;
      return;
    }
    if (mode == 2) {
      res.status = 503;
      return;
    }
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Final verdict: correct"}}}}}},
                            {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 4}}}};
    res.set_content(reply.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("BIASFORGE_TEST_KEY", "sk-test-123", 1);
  JudgeConfig c;
  c.judge_id = "local";
  c.kind = JudgeKind::HttpModel;
  c.model = "local-model";
  c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  c.api_key_env = "BIASFORGE_TEST_KEY";
  c.retry.max_retries = 1;
  c.retry.initial_backoff_s = 0.001;
  Judge j(c, make_transport(c));
  auto p = task();
  auto ok = j.direct_evaluate(item(p, "a", "x", Label::Correct), 0);
  EXPECT_EQ(ok.verdict, Verdict::Correct);
  EXPECT_EQ(ok.usage.prompt_tokens, 11u);
  EXPECT_EQ(seen_auth, "Bearer sk-test-123");
  EXPECT_EQ(seen_model, "local-model");

  mode = 1;
  auto limited = j.direct_evaluate(item(p, "a", "x", Label::Correct), 0);
  EXPECT_NE(limited.error.find("RateLimited"), std::string::npos);
  mode = 2;
  auto down = j.direct_evaluate(item(p, "a", "x", Label::Correct), 0);
  EXPECT_NE(down.error.find("TransportError"), std::string::npos);
  // The key never reaches stored output.
  EXPECT_EQ(to_json(down).dump().find("sk-test"), std::string::npos);

  ::unsetenv("BIASFORGE_TEST_KEY");
  mode = 0;
  auto missing = j.direct_evaluate(item(p, "a", "x", Label::Correct), 0);
  EXPECT_NE(missing.error.find("BIASFORGE_TEST_KEY"), std::string::npos);
  server.stop();
  t.join();
}

TEST(Generator, JudgeEndpointWritesMisleadingComments) {
  // A transport that answers like a model asked to add two comments.
  class CommentingTransport : public Transport {
   public:
    ChatResponse send(const ChatRequest& r) override {
      EXPECT_EQ(r.context.kind, CallKind::Generate);
      return {"```python\n# Sorts the list in place.\ntotal = 0\n# Returns the median.\nprint(total)\n```", {}};
    }
  };
  JudgeConfig c = mock_config({}, "writer");
  c.model = "writer-model";
  auto gen = std::make_shared<JudgeTextGenerator>(std::make_shared<Judge>(c, std::make_shared<CommentingTransport>()));
  corpus::CodeSample s{"s", "p1", Language::Python, "total = 0\nprint(total)\n", Label::Correct};
  auto v = transforms::inject_misleading_task(s, gen.get(), 3, 5);
  EXPECT_EQ(v.validation_state, transforms::ValidationState::Unvalidated) << v.flag_reason;
  EXPECT_EQ(v.provenance.generator_model, "writer-model");
  EXPECT_NE(v.source.find("# Sorts the list in place."), std::string::npos);
}

TEST(Serialization, JudgmentAndTestCaseSetRoundTrip) {
  Judgment j;
  j.item_id = "s~authority";
  j.judge_id = "m";
  j.paradigm = Paradigm::TestCaseBased;
  j.trial_index = 2;
  j.verdict = Verdict::Incorrect;
  j.raw_output = "r\n";
  j.error = "e";
  j.usage = {3, 4};
  EXPECT_EQ(judgment_from_json(nlohmann::json::parse(to_json(j).dump())), j);
  TestCaseSet s{"p1", {{"1", "2"}}, "raw", ""};
  EXPECT_EQ(test_case_set_from_json(to_json(s)), s);
}
