#ifndef BIASFORGE_METRICS_METRICS_HPP
#define BIASFORGE_METRICS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "biasforge/error.hpp"
#include "biasforge/judge/types.hpp"
#include "biasforge/language.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::metrics {

using judge::Paradigm;
using transforms::BiasKind;
using transforms::BiasTag;

/// One cell of the judge x language x bias x paradigm grid. An empty bias
/// is the unperturbed baseline.
struct ConditionKey {
  std::string judge_id;
  Language language = Language::Cpp;
  std::optional<BiasKind> bias;
  Paradigm paradigm = Paradigm::Direct;

  [[nodiscard]] bool original() const { return !bias.has_value(); }
  [[nodiscard]] ConditionKey baseline() const { return {judge_id, language, std::nullopt, paradigm}; }

  friend bool operator==(const ConditionKey&, const ConditionKey&) = default;
  friend bool operator<(const ConditionKey& a, const ConditionKey& b) {
    return std::tie(a.paradigm, a.judge_id, a.language, a.bias) < std::tie(b.paradigm, b.judge_id, b.language, b.bias);
  }
};

inline std::string bias_name(const std::optional<BiasKind>& b) { return b ? transforms::to_string(*b) : "original"; }

inline std::optional<BiasKind> parse_bias_name(std::string_view s) {
  if (s == "original") return std::nullopt;
  return transforms::parse_bias(s);
}

inline std::string to_string(const ConditionKey& k) {
  return k.judge_id + "/" + std::string(to_string(k.language)) + "/" + bias_name(k.bias) + "/" +
         std::string(judge::to_string(k.paradigm));
}

struct ConditionStats {
  double acc_correct = 0;
  double acc_incorrect = 0;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  friend bool operator==(const ConditionStats&, const ConditionStats&) = default;
};

/// An item's score is right / trials: the fraction of its trials whose
/// verdict matched the label.
struct ScoredItem {
  std::string item_id;
  Label label = Label::Correct;
  std::size_t right = 0;
  std::size_t trials = 1;
  [[nodiscard]] double score() const { return static_cast<double>(right) / static_cast<double>(trials); }
};

namespace detail {

/// Exact sum of small fractions, so that equal means give equal doubles.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  void add(std::int64_t n, std::int64_t d) {
    std::int64_t l = std::lcm(den, d);
    num = num * (l / den) + n * (l / d);
    den = l;
    std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  [[nodiscard]] double mean(std::size_t count) const {
    return static_cast<double>(num) / (static_cast<double>(den) * static_cast<double>(count));
  }
};

}  // namespace detail

/// Mean item score per label. Both label groups must be non-empty.
inline ConditionStats accuracy(const std::vector<ScoredItem>& items) {
  ConditionStats s;
  detail::Rational sum_c, sum_i;
  for (const auto& it : items) {
    if (it.trials == 0 || it.right > it.trials) {
      throw Error(ErrorCode::MalformedRecord, "score out of range for item " + it.item_id);
    }
    const auto n = static_cast<std::int64_t>(it.right), d = static_cast<std::int64_t>(it.trials);
    if (it.label == Label::Correct) {
      sum_c.add(n, d);
      ++s.n_correct;
    } else {
      sum_i.add(n, d);
      ++s.n_incorrect;
    }
  }
  if (s.n_correct == 0) throw Error(ErrorCode::EmptyGroup, "no correct-labeled items");
  if (s.n_incorrect == 0) throw Error(ErrorCode::EmptyGroup, "no incorrect-labeled items");
  s.acc_correct = sum_c.mean(s.n_correct);
  s.acc_incorrect = sum_i.mean(s.n_incorrect);
  return s;
}

/// Per-item scores from stored judgments. Unparseable verdicts count as
/// wrong; items without a label are skipped.
inline std::vector<ScoredItem> score_items(const std::vector<judge::Judgment>& judgments,
                                           const std::map<std::string, Label>& labels) {
  std::map<std::string, ScoredItem> tally;
  for (const auto& j : judgments) {
    auto it = labels.find(j.item_id);
    if (it == labels.end()) continue;
    auto [slot, fresh] = tally.try_emplace(j.item_id, ScoredItem{j.item_id, it->second, 0, 0});
    slot->second.right += j.verdict == judge::verdict_for(it->second) ? 1 : 0;
    ++slot->second.trials;
  }
  std::vector<ScoredItem> out;
  for (auto& [_, item] : tally) out.push_back(std::move(item));
  return out;
}

/// Signed change in percentage points.
inline double degradation(double acc_original, double acc_biased) { return (acc_biased - acc_original) * 100.0; }

inline double mad(const std::vector<double>& deltas) {
  if (deltas.empty()) throw Error(ErrorCode::EmptyInput, "mad of no deltas");
  double sum = 0;
  for (double d : deltas) sum += std::fabs(d);
  return sum / static_cast<double>(deltas.size());
}

enum class Direction { Positive, Negative, Mixed, Neutral };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Positive: return "positive";
    case Direction::Negative: return "negative";
    case Direction::Mixed: return "mixed";
    case Direction::Neutral: return "neutral";
  }
  return "?";
}

inline Direction parse_direction(std::string_view s) {
  for (Direction d : {Direction::Positive, Direction::Negative, Direction::Mixed, Direction::Neutral}) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown direction '" + std::string(s) + "'");
}

/// Positive pushes toward "correct": up on correct code, down on incorrect.
inline Direction classify_direction(double delta_correct, double delta_incorrect, double dead_band = 0.0) {
  if (dead_band < 0) throw Error(ErrorCode::ConfigError, "dead band must be >= 0");
  if (delta_correct > dead_band && delta_incorrect < -dead_band) return Direction::Positive;
  if (delta_correct < -dead_band && delta_incorrect > dead_band) return Direction::Negative;
  if (std::fabs(delta_correct) <= dead_band && std::fabs(delta_incorrect) <= dead_band) return Direction::Neutral;
  return Direction::Mixed;
}

struct ConditionRow {
  ConditionKey key;
  ConditionStats stats;
  double delta_correct = 0;    // %p vs. the same-paradigm baseline
  double delta_incorrect = 0;
  std::optional<Direction> direction;  // unset for baselines
  friend bool operator==(const ConditionRow&, const ConditionRow&) = default;
};

/// Grouping levels for MAD. Every level is computed within one paradigm.
enum class Grouping { Overall, Bias, Language, Judge, JudgeLanguage, JudgeBias, LanguageBias };

inline std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::Overall: return "overall";
    case Grouping::Bias: return "bias";
    case Grouping::Language: return "language";
    case Grouping::Judge: return "judge";
    case Grouping::JudgeLanguage: return "judge_language";
    case Grouping::JudgeBias: return "judge_bias";
    case Grouping::LanguageBias: return "language_bias";
  }
  return "?";
}

inline constexpr Grouping kAllGroupings[] = {Grouping::Overall,       Grouping::Bias,      Grouping::Language,
                                             Grouping::Judge,         Grouping::JudgeLanguage, Grouping::JudgeBias,
                                             Grouping::LanguageBias};

inline Grouping parse_grouping(std::string_view s) {
  for (Grouping g : kAllGroupings) {
    if (to_string(g) == s) return g;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown grouping '" + std::string(s) + "'");
}

/// MAD over the correct and incorrect deltas of every biased condition in
/// the group. `group` joins the group's values with '/', e.g. "gpt/cpp".
struct MadEntry {
  Paradigm paradigm = Paradigm::Direct;
  Grouping grouping = Grouping::Overall;
  std::string group;
  double mad = 0;
  std::size_t n = 0;  // number of deltas
  friend bool operator==(const MadEntry&, const MadEntry&) = default;
};

struct RobustnessReport {
  std::vector<ConditionRow> rows;  // sorted by key
  std::vector<MadEntry> mads;      // sorted by (paradigm, grouping, group)
  friend bool operator==(const RobustnessReport&, const RobustnessReport&) = default;

  [[nodiscard]] const ConditionRow* find(const ConditionKey& k) const {
    for (const auto& r : rows) {
      if (r.key == k) return &r;
    }
    return nullptr;
  }
  [[nodiscard]] const MadEntry* find_mad(Paradigm p, Grouping g, const std::string& group) const {
    for (const auto& m : mads) {
      if (m.paradigm == p && m.grouping == g && m.group == group) return &m;
    }
    return nullptr;
  }
};

inline std::string group_label(Grouping g, const ConditionKey& k) {
  const std::string lang(to_string(k.language));
  const std::string bias = bias_name(k.bias);
  switch (g) {
    case Grouping::Overall: return "all";
    case Grouping::Bias: return bias;
    case Grouping::Language: return lang;
    case Grouping::Judge: return k.judge_id;
    case Grouping::JudgeLanguage: return k.judge_id + "/" + lang;
    case Grouping::JudgeBias: return k.judge_id + "/" + bias;
    case Grouping::LanguageBias: return lang + "/" + bias;
  }
  return "";
}

inline bool operator<(const MadEntry& a, const MadEntry& b) {
  return std::tie(a.paradigm, a.grouping, a.group) < std::tie(b.paradigm, b.grouping, b.group);
}

/// Builds the report from per-condition stats. Input order does not matter.
inline RobustnessReport aggregate(std::vector<std::pair<ConditionKey, ConditionStats>> conditions,
                                  double dead_band = 0.0) {
  std::map<ConditionKey, ConditionStats> by_key;
  for (auto& [k, s] : conditions) {
    if (!by_key.emplace(k, s).second) throw Error(ErrorCode::InconsistentKeys, "duplicate condition " + to_string(k));
  }
  RobustnessReport report;
  std::map<std::tuple<Paradigm, Grouping, std::string>, std::vector<double>> groups;
  for (const auto& [k, s] : by_key) {
    ConditionRow row{k, s, 0, 0, std::nullopt};
    if (!k.original()) {
      auto base = by_key.find(k.baseline());
      if (base == by_key.end()) throw Error(ErrorCode::MissingBaseline, "no baseline for " + to_string(k));
      row.delta_correct = degradation(base->second.acc_correct, s.acc_correct);
      row.delta_incorrect = degradation(base->second.acc_incorrect, s.acc_incorrect);
      row.direction = classify_direction(row.delta_correct, row.delta_incorrect, dead_band);
      for (Grouping g : kAllGroupings) {
        auto& bucket = groups[{k.paradigm, g, group_label(g, k)}];
        bucket.push_back(row.delta_correct);
        bucket.push_back(row.delta_incorrect);
      }
    }
    report.rows.push_back(std::move(row));
  }
  for (const auto& [key, deltas] : groups) {
    const auto& [p, g, label] = key;
    report.mads.push_back({p, g, label, mad(deltas), deltas.size()});
  }
  return report;
}

/// One point of a parameter sweep (rename length or dummy count).
struct SweepPoint {
  std::size_t parameter = 0;
  double acc_correct = 0;
  double acc_incorrect = 0;
  double delta_correct = 0;
  double delta_incorrect = 0;
  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct SweepSeries {
  std::string judge_id;
  Language language = Language::Cpp;
  Paradigm paradigm = Paradigm::Direct;
  BiasTag tag = BiasTag::VariableRename;
  std::vector<SweepPoint> points;  // ascending parameter
  friend bool operator==(const SweepSeries&, const SweepSeries&) = default;
};

/// Orders the rows of one sweep by parameter. All rows must share judge,
/// language, paradigm and bias tag, and parameters must be distinct.
inline SweepSeries sweep_summary(const std::vector<ConditionRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "empty sweep");
  const auto& first = rows.front().key;
  if (!first.bias || !first.bias->has_param()) {
    throw Error(ErrorCode::InconsistentKeys, "sweep rows need a parameterised bias: " + to_string(first));
  }
  SweepSeries s{first.judge_id, first.language, first.paradigm, first.bias->tag, {}};
  for (const auto& r : rows) {
    const auto& k = r.key;
    if (k.judge_id != s.judge_id || k.language != s.language || k.paradigm != s.paradigm || !k.bias ||
        k.bias->tag != s.tag) {
      throw Error(ErrorCode::InconsistentKeys, to_string(k) + " does not belong to sweep " + to_string(first));
    }
    s.points.push_back({k.bias->param, r.stats.acc_correct, r.stats.acc_incorrect, r.delta_correct,
                        r.delta_incorrect});
  }
  std::sort(s.points.begin(), s.points.end(),
            [](const SweepPoint& a, const SweepPoint& b) { return a.parameter < b.parameter; });
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    if (s.points[i].parameter == s.points[i - 1].parameter) {
      throw Error(ErrorCode::InconsistentKeys, "sweep parameter " + std::to_string(s.points[i].parameter) + " repeated");
    }
  }
  return s;
}

/// Every sweep in a report for the given tag, one series per
/// (paradigm, judge, language).
inline std::vector<SweepSeries> sweeps(const RobustnessReport& report, BiasTag tag) {
  std::map<std::tuple<Paradigm, std::string, Language>, std::vector<ConditionRow>> grouped;
  for (const auto& r : report.rows) {
    if (r.key.bias && r.key.bias->tag == tag) grouped[{r.key.paradigm, r.key.judge_id, r.key.language}].push_back(r);
  }
  std::vector<SweepSeries> out;
  for (const auto& [_, rows] : grouped) out.push_back(sweep_summary(rows));
  return out;
}

}  // namespace biasforge::metrics

#endif  // BIASFORGE_METRICS_METRICS_HPP
