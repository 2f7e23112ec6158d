#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "biasforge/judge/judge.hpp"
#include "biasforge/metrics/report.hpp"
#include "biasforge/transforms/apply.hpp"
#include "support.hpp"

using namespace biasforge;
using namespace biasforge::metrics;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::vector<ScoredItem> items(std::initializer_list<std::tuple<Label, std::size_t, std::size_t>> spec) {
  std::vector<ScoredItem> out;
  for (auto [label, right, trials] : spec) out.push_back({"i" + std::to_string(out.size()), label, right, trials});
  return out;
}

ConditionStats stats(double c, double i, std::size_t n = 10) { return {c, i, n, n}; }

ConditionKey key(std::string judge, Language lang, std::optional<BiasKind> bias,
                 Paradigm p = Paradigm::Direct) {
  return {std::move(judge), lang, bias, p};
}

}  // namespace

TEST(Accuracy, Examples) {
  constexpr auto C = Label::Correct;
  constexpr auto I = Label::Incorrect;
  auto s = accuracy(items({{C, 1, 1}, {C, 1, 1}, {C, 1, 1}, {C, 0, 1}, {I, 1, 1}}));
  EXPECT_DOUBLE_EQ(s.acc_correct, 0.75);
  EXPECT_EQ(s.n_correct, 4u);
  EXPECT_EQ(s.n_incorrect, 1u);
  auto all = accuracy(items({{C, 3, 3}, {I, 1, 1}}));
  EXPECT_EQ(all.acc_correct, 1.0);
  EXPECT_EQ(all.acc_incorrect, 1.0);
  auto trials = accuracy(items({{C, 3, 3}, {C, 2, 3}, {C, 1, 3}, {I, 0, 3}}));
  EXPECT_DOUBLE_EQ(trials.acc_correct, 2.0 / 3.0);
  EXPECT_EQ(trials.acc_incorrect, 0.0);
}

TEST(Accuracy, EqualMeansGiveEqualDoubles) {
  // 1 + 1/3 + 2/3 and 2/3 * 3 are both 2; summing doubles would not
  // guarantee identical results.
  constexpr auto C = Label::Correct;
  constexpr auto I = Label::Incorrect;
  auto a = accuracy(items({{C, 3, 3}, {C, 1, 3}, {C, 2, 3}, {I, 1, 7}, {I, 3, 7}}));
  auto b = accuracy(items({{C, 2, 3}, {C, 2, 3}, {C, 2, 3}, {I, 2, 7}, {I, 2, 7}}));
  EXPECT_EQ(a.acc_correct, b.acc_correct);
  EXPECT_EQ(a.acc_incorrect, b.acc_incorrect);
  EXPECT_EQ(degradation(a.acc_correct, b.acc_correct), 0.0);
}

TEST(Accuracy, EmptyGroupsAndBadScores) {
  EXPECT_EQ(code_of([] { accuracy({}); }), ErrorCode::EmptyGroup);
  EXPECT_EQ(code_of([] { accuracy(items({{Label::Correct, 1, 1}})); }), ErrorCode::EmptyGroup);
  EXPECT_EQ(code_of([] { accuracy(items({{Label::Incorrect, 1, 1}})); }), ErrorCode::EmptyGroup);
  EXPECT_EQ(code_of([] { accuracy(items({{Label::Correct, 2, 1}, {Label::Incorrect, 0, 1}})); }),
            ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { accuracy(items({{Label::Correct, 0, 0}, {Label::Incorrect, 0, 1}})); }),
            ErrorCode::MalformedRecord);
}

TEST(Accuracy, ScoresFromJudgments) {
  using judge::Judgment;
  using judge::Verdict;
  std::vector<Judgment> js;
  auto add = [&](std::string id, std::size_t t, Verdict v) {
    Judgment j;
    j.item_id = std::move(id);
    j.trial_index = t;
    j.verdict = v;
    js.push_back(j);
  };
  add("a", 0, Verdict::Correct);
  add("a", 1, Verdict::Unparseable);
  add("a", 2, Verdict::Correct);
  add("b", 0, Verdict::Incorrect);
  add("stray", 0, Verdict::Correct);
  auto scored = score_items(js, {{"a", Label::Correct}, {"b", Label::Incorrect}});
  ASSERT_EQ(scored.size(), 2u);
  EXPECT_EQ(scored[0].right, 2u);
  EXPECT_EQ(scored[0].trials, 3u);
  EXPECT_EQ(scored[1].right, 1u);
  EXPECT_EQ(scored[1].trials, 1u);
}

TEST(Degradation, Examples) {
  EXPECT_EQ(degradation(0.80, 0.80), 0.0);
  EXPECT_DOUBLE_EQ(degradation(0.50, 0.75), 25.0);
  // A drop of 26.7 %p survives to the rendered table.
  EXPECT_NEAR(degradation(0.900, 0.633), -26.7, 1e-9);
  EXPECT_EQ(signed1(degradation(0.900, 0.633)), "-26.7");
}

TEST(Mad, Examples) {
  EXPECT_DOUBLE_EQ(mad({10, -20}), 15.0);
  EXPECT_EQ(mad({0, 0, 0}), 0.0);
  EXPECT_EQ(code_of([] { mad({}); }), ErrorCode::EmptyInput);
}

TEST(Mad, BoundsHoldForRandomDeltas) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> acc(0.0, 1.0);
  for (int round = 0; round < 500; ++round) {
    double a = acc(rng);
    EXPECT_EQ(degradation(a, a), 0.0);
    std::vector<double> d(1 + rng() % 20);
    for (auto& x : d) x = degradation(acc(rng), acc(rng));
    double m = mad(d);
    double max_abs = 0;
    for (double x : d) max_abs = std::max(max_abs, std::fabs(x));
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, max_abs + 1e-12);
  }
}

TEST(Direction, Examples) {
  EXPECT_EQ(classify_direction(10, -20), Direction::Positive);
  EXPECT_EQ(classify_direction(-5, 3), Direction::Negative);
  EXPECT_EQ(classify_direction(2, 4), Direction::Mixed);
  EXPECT_EQ(classify_direction(0, 0), Direction::Neutral);
  EXPECT_EQ(classify_direction(0, -3), Direction::Mixed);
}

TEST(Direction, DeadBand) {
  EXPECT_EQ(classify_direction(1.5, -1.5, 2.0), Direction::Neutral);
  EXPECT_EQ(classify_direction(2.5, -1.5, 2.0), Direction::Mixed);
  EXPECT_EQ(classify_direction(2.5, -2.5, 2.0), Direction::Positive);
  EXPECT_EQ(classify_direction(2.0, -2.0, 2.0), Direction::Neutral);
  EXPECT_EQ(code_of([] { classify_direction(1, 1, -0.1); }), ErrorCode::ConfigError);
}

TEST(Direction, AntisymmetricOutsideTheBand) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-50, 50);
  for (int i = 0; i < 2000; ++i) {
    double band = (rng() % 3) * 1.5;
    double c = d(rng), x = d(rng);
    if (std::fabs(c) <= band || std::fabs(x) <= band) continue;
    EXPECT_EQ(classify_direction(c, x, band) == Direction::Positive,
              classify_direction(x, c, band) == Direction::Negative);
  }
}

TEST(Aggregate, SingleJudgeSingleLanguage) {
  auto sd = BiasKind::self_declared();
  auto r = aggregate({{key("m", Language::Python, std::nullopt), stats(0.6, 0.8)},
                      {key("m", Language::Python, sd), stats(0.9, 0.5)}});
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(r.rows[0].key.original());
  EXPECT_EQ(r.rows[0].delta_correct, 0.0);
  EXPECT_EQ(r.rows[0].delta_incorrect, 0.0);
  EXPECT_FALSE(r.rows[0].direction);
  EXPECT_NEAR(r.rows[1].delta_correct, 30.0, 1e-9);
  EXPECT_NEAR(r.rows[1].delta_incorrect, -30.0, 1e-9);
  EXPECT_EQ(r.rows[1].direction, Direction::Positive);
  for (Grouping g : kAllGroupings) {
    bool found = false;
    for (const auto& m : r.mads) found |= m.grouping == g;
    EXPECT_TRUE(found) << to_string(g);
  }
  EXPECT_NEAR(r.find_mad(Paradigm::Direct, Grouping::Overall, "all")->mad, 30.0, 1e-9);
}

TEST(Aggregate, MissingBaselineAndDuplicates) {
  auto sd = BiasKind::self_declared();
  EXPECT_EQ(code_of([&] { aggregate({{key("m", Language::Go, sd), stats(0.5, 0.5)}}); }), ErrorCode::MissingBaseline);
  // A baseline from the other paradigm does not count.
  EXPECT_EQ(code_of([&] {
              aggregate({{key("m", Language::Go, std::nullopt, Paradigm::Direct), stats(0.5, 0.5)},
                         {key("m", Language::Go, sd, Paradigm::TestCaseBased), stats(0.5, 0.5)}});
            }),
            ErrorCode::MissingBaseline);
  EXPECT_EQ(code_of([&] {
              aggregate({{key("m", Language::Go, std::nullopt), stats(0.5, 0.5)},
                         {key("m", Language::Go, std::nullopt), stats(0.6, 0.5)}});
            }),
            ErrorCode::InconsistentKeys);
}

TEST(Aggregate, BaselinesAreSameParadigm) {
  auto mt = BiasKind::misleading_task();
  auto r = aggregate({{key("m", Language::Java, std::nullopt, Paradigm::Direct), stats(0.8, 0.6)},
                      {key("m", Language::Java, mt, Paradigm::Direct), stats(0.5, 0.7)},
                      {key("m", Language::Java, std::nullopt, Paradigm::TestCaseBased), stats(0.7, 0.7)},
                      {key("m", Language::Java, mt, Paradigm::TestCaseBased), stats(0.6, 0.75)}});
  auto direct = r.find(key("m", Language::Java, mt, Paradigm::Direct));
  auto tc = r.find(key("m", Language::Java, mt, Paradigm::TestCaseBased));
  EXPECT_NEAR(direct->delta_correct, -30.0, 1e-9);
  EXPECT_NEAR(direct->delta_incorrect, 10.0, 1e-9);
  EXPECT_NEAR(tc->delta_correct, -10.0, 1e-9);
  EXPECT_NEAR(tc->delta_incorrect, 5.0, 1e-9);
  EXPECT_NEAR(r.find_mad(Paradigm::Direct, Grouping::Bias, "misleading_task")->mad, 20.0, 1e-9);
  EXPECT_NEAR(r.find_mad(Paradigm::TestCaseBased, Grouping::Bias, "misleading_task")->mad, 7.5, 1e-9);
}

TEST(Aggregate, PermutationInvariant) {
  std::vector<std::pair<ConditionKey, ConditionStats>> input;
  std::mt19937_64 rng(3);
  for (const char* j : {"a", "b", "c"}) {
    for (Language l : kAllLanguages) {
      input.push_back({key(j, l, std::nullopt), stats((rng() % 11) / 10.0, (rng() % 11) / 10.0)});
      for (BiasTag t : transforms::kAllBiasTags) {
        BiasKind b{t, t == BiasTag::VariableRename ? 24u : t == BiasTag::IllusoryComplexity ? 1u : 0u};
        input.push_back({key(j, l, b), stats((rng() % 11) / 10.0, (rng() % 11) / 10.0)});
      }
    }
  }
  auto reference = aggregate(input);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(input.begin(), input.end(), rng);
    EXPECT_EQ(aggregate(input), reference);
  }
}

TEST(Report, CsvRoundTrip) {
  auto r = aggregate({{key("judge,\"quoted\"", Language::Cpp, std::nullopt), stats(1.0 / 3.0, 0.7)},
                      {key("judge,\"quoted\"", Language::Cpp, BiasKind::variable_rename(8)), stats(0.1, 2.0 / 7.0)},
                      {key("x", Language::Go, std::nullopt, Paradigm::TestCaseBased), stats(0.2, 0.3, 4)},
                      {key("x", Language::Go, BiasKind::illusory_complexity(3), Paradigm::TestCaseBased),
                       stats(0.25, 0.35, 4)}});
  auto back = report_from_csv(conditions_csv(r), mads_csv(r));
  EXPECT_EQ(back, r);
  EXPECT_EQ(conditions_csv(back), conditions_csv(r));
  EXPECT_EQ(code_of([] { report_from_csv("a,b\n", ""); }), ErrorCode::MalformedRecord);
}

TEST(Report, PerLanguageMadLine) {
  // One bias per language with symmetric deltas of the listed size.
  const std::pair<Language, double> mads[] = {{Language::Cpp, 7.4},
                                              {Language::Python, 8.0},
                                              {Language::Java, 7.8},
                                              {Language::JavaScript, 7.8},
                                              {Language::Go, 7.7}};
  std::vector<std::pair<ConditionKey, ConditionStats>> input;
  for (auto [lang, m] : mads) {
    input.push_back({key("judge", lang, std::nullopt), stats(0.5, 0.5)});
    input.push_back({key("judge", lang, BiasKind::authority()), stats(0.5 + m / 100, 0.5 - m / 100)});
  }
  auto r = aggregate(input);
  EXPECT_EQ(mad_line(r, Paradigm::Direct, Grouping::Language), "C++ 7.4, Python 8.0, Java 7.8, JavaScript 7.8, Go 7.7");
  EXPECT_NE(render_table(r).find("MAD by language (%p): C++ 7.4, Python 8.0, Java 7.8, JavaScript 7.8, Go 7.7\n"),
            std::string::npos);
}

TEST(Report, Formatting) {
  EXPECT_EQ(fixed1(-0.04), "0.0");
  EXPECT_EQ(signed1(-0.04), "0.0");
  EXPECT_EQ(signed1(6.66), "+6.7");
  EXPECT_EQ(signed1(-33.333), "-33.3");
  EXPECT_EQ(fixed1(100), "100.0");
}

// ------------------------------------------------------------------ fixture

namespace {

struct Fixture {
  std::map<ConditionKey, std::vector<judge::Judgment>> judgments;
  std::map<ConditionKey, std::map<std::string, Label>> labels;
};

Fixture load_fixture() {
  Fixture f;
  auto text = io::read_file(testsupport::source_dir() / "tests" / "data" / "metrics" / "judgments.jsonl");
  io::for_each_line(text, [&](std::size_t, std::string_view line) {
    auto j = nlohmann::json::parse(line);
    ConditionKey k{j["judge_id"], parse_language(j["language"].get<std::string>()),
                   parse_bias_name(j["bias"].get<std::string>()), judge::parse_paradigm(j["paradigm"].get<std::string>())};
    judge::Judgment jd;
    jd.item_id = j["item_id"];
    jd.judge_id = k.judge_id;
    jd.trial_index = j["trial"];
    std::string v = j["verdict"];
    jd.verdict = v == "correct" ? judge::Verdict::Correct
                 : v == "incorrect" ? judge::Verdict::Incorrect
                                    : judge::Verdict::Unparseable;
    f.judgments[k].push_back(jd);
    f.labels[k][jd.item_id] = *try_parse_label(j["label"].get<std::string>());
  });
  return f;
}

RobustnessReport fixture_report() {
  auto f = load_fixture();
  std::vector<std::pair<ConditionKey, ConditionStats>> input;
  for (const auto& [k, js] : f.judgments) input.push_back({k, accuracy(score_items(js, f.labels.at(k)))});
  return aggregate(input);
}

}  // namespace

TEST(Fixture, MatchesOracle) {
  auto r = fixture_report();
  auto expected = nlohmann::json::parse(
      io::read_file(testsupport::source_dir() / "tests" / "data" / "metrics" / "expected.json"));
  ASSERT_EQ(r.rows.size(), 2u * 2u * 7u);
  ASSERT_EQ(expected["conditions"].size(), r.rows.size());
  for (const auto& e : expected["conditions"]) {
    ConditionKey k{e["judge_id"], parse_language(e["language"].get<std::string>()),
                   parse_bias_name(e["bias"].get<std::string>()), Paradigm::Direct};
    const ConditionRow* row = r.find(k);
    ASSERT_NE(row, nullptr) << to_string(k);
    EXPECT_NEAR(row->stats.acc_correct, e["acc_correct"].get<double>(), 1e-9) << to_string(k);
    EXPECT_NEAR(row->stats.acc_incorrect, e["acc_incorrect"].get<double>(), 1e-9) << to_string(k);
    EXPECT_EQ(row->stats.n_correct, e["n_correct"].get<std::size_t>());
    EXPECT_EQ(row->stats.n_incorrect, e["n_incorrect"].get<std::size_t>());
    EXPECT_NEAR(row->delta_correct, e["delta_correct"].get<double>(), 1e-9) << to_string(k);
    EXPECT_NEAR(row->delta_incorrect, e["delta_incorrect"].get<double>(), 1e-9) << to_string(k);
    std::string dir = e["direction"];
    EXPECT_EQ(row->direction ? std::string(to_string(*row->direction)) : "", dir) << to_string(k);
  }
  ASSERT_EQ(expected["mads"].size(), r.mads.size());
  for (const auto& e : expected["mads"]) {
    const MadEntry* m = r.find_mad(Paradigm::Direct, parse_grouping(e["grouping"].get<std::string>()), e["group"]);
    ASSERT_NE(m, nullptr) << e.dump();
    EXPECT_NEAR(m->mad, e["mad"].get<double>(), 1e-9) << e.dump();
    EXPECT_EQ(m->n, e["n"].get<std::size_t>());
  }
}

TEST(Fixture, TableMatchesGolden) {
  auto golden = io::read_file(testsupport::source_dir() / "tests" / "data" / "metrics" / "golden_table.txt");
  EXPECT_EQ(render_table(fixture_report()), golden);
}

TEST(Fixture, CsvRoundTrip) {
  auto r = fixture_report();
  EXPECT_EQ(report_from_csv(conditions_csv(r), mads_csv(r)), r);
}

// ------------------------------------------------------------------ sweeps

TEST(Sweep, RenameLengthsInOrder) {
  const std::size_t lengths[] = {48, 1, 24, 2, 16, 8, 12};
  std::vector<std::pair<ConditionKey, ConditionStats>> input = {{key("m", Language::Cpp, std::nullopt), stats(0.5, 0.5)}};
  for (std::size_t n : lengths) {
    input.push_back({key("m", Language::Cpp, BiasKind::variable_rename(n)), stats(0.5 + n / 200.0, 0.5)});
  }
  input.push_back({key("m", Language::Cpp, BiasKind::authority()), stats(0.1, 0.1)});
  auto series = sweeps(aggregate(input), BiasTag::VariableRename);
  ASSERT_EQ(series.size(), 1u);
  std::vector<std::size_t> got;
  for (const auto& p : series[0].points) got.push_back(p.parameter);
  EXPECT_EQ(got, (std::vector<std::size_t>{1, 2, 8, 12, 16, 24, 48}));
  EXPECT_NEAR(series[0].points.back().delta_correct, 24.0, 1e-9);
  auto text = sweep_csv(series);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
}

TEST(Sweep, SinglePointAndInconsistentKeys) {
  ConditionRow one{key("m", Language::Go, BiasKind::illusory_complexity(2)), stats(0.4, 0.6), 1, -1, Direction::Positive};
  EXPECT_EQ(sweep_summary({one}).points.size(), 1u);
  ConditionRow other_judge = one;
  other_judge.key.judge_id = "n";
  EXPECT_EQ(code_of([&] { sweep_summary({one, other_judge}); }), ErrorCode::InconsistentKeys);
  ConditionRow other_tag = one;
  other_tag.key.bias = BiasKind::variable_rename(2);
  EXPECT_EQ(code_of([&] { sweep_summary({one, other_tag}); }), ErrorCode::InconsistentKeys);
  EXPECT_EQ(code_of([&] { sweep_summary({one, one}); }), ErrorCode::InconsistentKeys);
  ConditionRow plain{key("m", Language::Go, BiasKind::authority()), stats(0.4, 0.6), 0, 0, std::nullopt};
  EXPECT_EQ(code_of([&] { sweep_summary({plain}); }), ErrorCode::InconsistentKeys);
  EXPECT_EQ(code_of([&] { sweep_summary({}); }), ErrorCode::EmptyInput);
}

namespace {

/// Says "correct" once the code holds at least h function definitions,
/// where h in 1..6 is fixed per item. More dummies can only turn a verdict
/// from incorrect to correct.
class LengthSwayedTransport : public judge::Transport {
 public:
  judge::ChatResponse send(const judge::ChatRequest& r) override {
    const auto& code = r.context.code;
    std::size_t defs = testsupport_count(code, "def ");
    std::size_t h = 1 + std::hash<std::string>{}(r.context.item_id) % 6;
    return {defs >= h ? "Final verdict: correct" : "Final verdict: incorrect", {}};
  }
  static std::size_t testsupport_count(const std::string& s, const std::string& w) {
    std::size_t n = 0;
    for (auto p = s.find(w); p != std::string::npos; p = s.find(w, p + 1)) ++n;
    return n;
  }
};

}  // namespace

TEST(Sweep, MonotoneMockGivesMonotoneSeries) {
  auto ds = corpus::load_dataset(testsupport::source_dir() / "data" / "corpus" / "mini.jsonl");
  auto pool = transforms::parse_dummy_pool(io::read_file(testsupport::source_dir() / "data" / "dummy" / "pool.jsonl"));
  judge::JudgeConfig c;
  c.judge_id = "swayed";
  c.kind = judge::JudgeKind::Mock;
  judge::Judge j(c, std::make_shared<LengthSwayedTransport>());

  auto condition = [&](std::optional<BiasKind> bias) {
    std::vector<judge::EvalItem> evals;
    std::map<std::string, Label> labels;
    for (const auto& s : ds.samples) {
      if (s.language != Language::Python) continue;
      std::string code = s.source;
      if (bias) code = transforms::inject_illusory_complexity(s, pool, bias->param, 17).source;
      evals.push_back({s.sample_id, &ds.problem(s.problem_id), code, s.language, s.label});
      labels[s.sample_id] = s.label;
    }
    auto res = judge::run_condition(j, evals, Paradigm::Direct, 1);
    return accuracy(score_items(res.judgments, labels));
  };
  std::vector<std::pair<ConditionKey, ConditionStats>> input = {
      {key("swayed", Language::Python, std::nullopt), condition(std::nullopt)}};
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    input.push_back({key("swayed", Language::Python, BiasKind::illusory_complexity(n)),
                     condition(BiasKind::illusory_complexity(n))});
  }
  auto series = sweeps(aggregate(input), BiasTag::IllusoryComplexity);
  ASSERT_EQ(series.size(), 1u);
  ASSERT_EQ(series[0].points.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_GE(series[0].points[i].acc_correct, series[0].points[i - 1].acc_correct);
    EXPECT_LE(series[0].points[i].acc_incorrect, series[0].points[i - 1].acc_incorrect);
  }
  EXPECT_GT(series[0].points.back().acc_correct, series[0].points.front().acc_correct);
}
