#ifndef BIASFORGE_METRICS_REPORT_HPP
#define BIASFORGE_METRICS_REPORT_HPP

#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/metrics/metrics.hpp"

namespace biasforge::metrics {

namespace csv {

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  return out + "\n";
}

/// RFC 4180 records; a trailing newline does not start a new record.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> cur;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cur.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      cur.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(cur));
      cur.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedRecord, "unterminated quoted CSV field");
  if (any) {
    cur.push_back(std::move(field));
    rows.push_back(std::move(cur));
  }
  return rows;
}

/// Shortest form that reads back to the same double.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double to_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw Error(ErrorCode::MalformedRecord, "bad number '" + s + "'");
  return v;
}

inline std::size_t to_count(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::MalformedRecord, "bad count '" + s + "'");
  }
  return std::stoull(s);
}

/// Rows after the header, each checked against the header's width.
inline std::vector<std::vector<std::string>> body(std::string_view text, const std::vector<std::string>& header) {
  auto rows = parse(text);
  if (rows.empty() || rows.front() != header) throw Error(ErrorCode::MalformedRecord, "unexpected CSV header");
  rows.erase(rows.begin());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != header.size()) {
      throw Error(ErrorCode::MalformedRecord, "CSV row " + std::to_string(i + 2) + " has " +
                                                  std::to_string(rows[i].size()) + " fields");
    }
  }
  return rows;
}

}  // namespace csv

inline const std::vector<std::string> kConditionColumns = {
    "judge_id",     "language",      "bias",          "paradigm",        "n_correct", "n_incorrect",
    "acc_correct",  "acc_incorrect", "delta_correct", "delta_incorrect", "direction"};
inline const std::vector<std::string> kMadColumns = {"paradigm", "grouping", "group", "mad", "n"};
inline const std::vector<std::string> kSweepColumns = {"judge_id",    "language",      "paradigm",
                                                       "bias",        "parameter",     "acc_correct",
                                                       "acc_incorrect", "delta_correct", "delta_incorrect"};

inline std::string conditions_csv(const RobustnessReport& r) {
  std::string out = csv::row(kConditionColumns);
  for (const auto& row : r.rows) {
    const auto& k = row.key;
    out += csv::row({k.judge_id, std::string(to_string(k.language)), bias_name(k.bias),
                     std::string(judge::to_string(k.paradigm)), std::to_string(row.stats.n_correct),
                     std::to_string(row.stats.n_incorrect), csv::num(row.stats.acc_correct),
                     csv::num(row.stats.acc_incorrect), csv::num(row.delta_correct), csv::num(row.delta_incorrect),
                     row.direction ? std::string(to_string(*row.direction)) : ""});
  }
  return out;
}

inline std::string mads_csv(const RobustnessReport& r) {
  std::string out = csv::row(kMadColumns);
  for (const auto& m : r.mads) {
    out += csv::row({std::string(judge::to_string(m.paradigm)), std::string(to_string(m.grouping)), m.group,
                     csv::num(m.mad), std::to_string(m.n)});
  }
  return out;
}

inline RobustnessReport report_from_csv(std::string_view conditions, std::string_view mads) {
  RobustnessReport r;
  for (const auto& f : csv::body(conditions, kConditionColumns)) {
    ConditionRow row;
    row.key = {f[0], parse_language(f[1]), parse_bias_name(f[2]), judge::parse_paradigm(f[3])};
    row.stats = {csv::to_double(f[6]), csv::to_double(f[7]), csv::to_count(f[4]), csv::to_count(f[5])};
    row.delta_correct = csv::to_double(f[8]);
    row.delta_incorrect = csv::to_double(f[9]);
    if (!f[10].empty()) row.direction = parse_direction(f[10]);
    r.rows.push_back(std::move(row));
  }
  for (const auto& f : csv::body(mads, kMadColumns)) {
    r.mads.push_back({judge::parse_paradigm(f[0]), parse_grouping(f[1]), f[2], csv::to_double(f[3]),
                      csv::to_count(f[4])});
  }
  std::sort(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  std::sort(r.mads.begin(), r.mads.end());
  return r;
}

inline std::string sweep_csv(const std::vector<SweepSeries>& series) {
  std::string out = csv::row(kSweepColumns);
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      out += csv::row({s.judge_id, std::string(to_string(s.language)), std::string(judge::to_string(s.paradigm)),
                       std::string(transforms::tag_name(s.tag)), std::to_string(p.parameter), csv::num(p.acc_correct),
                       csv::num(p.acc_incorrect), csv::num(p.delta_correct), csv::num(p.delta_incorrect)});
    }
  }
  return out;
}

// ---- text table ----

/// One decimal; never prints "-0.0".
inline std::string fixed1(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

inline std::string signed1(double v) {
  std::string s = fixed1(v);
  return (s != "0.0" && s[0] != '-') ? "+" + s : s;
}

namespace detail {

inline std::string layout(const std::vector<std::vector<std::string>>& cells, std::size_t left_cols) {
  std::vector<std::size_t> width;
  for (const auto& r : cells) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (const auto& r : cells) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) line += "  ";
      std::string pad(width[c] - r[c].size(), ' ');
      line += c < left_cols ? r[c] + pad : pad + r[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace detail

/// "C++ 7.4, Python 8.0, ..." for one grouping level, in display order.
inline std::string mad_line(const RobustnessReport& r, Paradigm p, Grouping g) {
  std::vector<const MadEntry*> entries;
  for (const auto& m : r.mads) {
    if (m.paradigm == p && m.grouping == g) entries.push_back(&m);
  }
  auto display = [&](const std::string& group) -> std::string {
    if (g == Grouping::Language) return std::string(display_name(parse_language(group)));
    if (g == Grouping::Bias) {
      auto b = parse_bias_name(group);
      return b ? transforms::display_name(*b) : "Original";
    }
    return group;
  };
  auto rank = [&](const MadEntry* m) -> std::pair<std::size_t, std::string> {
    if (g == Grouping::Language) return {static_cast<std::size_t>(parse_language(m->group)), ""};
    if (g == Grouping::Bias) {
      std::size_t i = 0;
      auto b = parse_bias_name(m->group);
      for (BiasTag t : transforms::kAllBiasTags) {
        if (b && b->tag == t) break;
        ++i;
      }
      return {i * 1000 + (b ? b->param : 0), ""};
    }
    return {0, m->group};
  };
  std::stable_sort(entries.begin(), entries.end(), [&](auto a, auto b) { return rank(a) < rank(b); });
  std::string out;
  for (const auto* m : entries) {
    if (!out.empty()) out += ", ";
    out += display(m->group) + " " + fixed1(m->mad);
  }
  return out;
}

/// Judges and languages as row groups with Correct / Incorrect / Direction
/// sub-rows, biases as columns, accuracy in percent with the change in
/// percentage points in parentheses, and a per-row-group MAD column. One
/// block per paradigm, followed by the grouped MAD summaries.
inline std::string render_table(const RobustnessReport& r) {
  std::string out;
  std::set<Paradigm> paradigms;
  for (const auto& row : r.rows) paradigms.insert(row.key.paradigm);
  for (Paradigm p : paradigms) {
    std::set<BiasKind> biases;
    std::set<std::pair<std::string, Language>> groups;
    for (const auto& row : r.rows) {
      if (row.key.paradigm != p) continue;
      if (row.key.bias) biases.insert(*row.key.bias);
      groups.insert({row.key.judge_id, row.key.language});
    }
    if (!out.empty()) out += "\n";
    out += std::string(display_name(p)) + " evaluation: accuracy % (change in %p vs. Original)\n\n";
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = {"Judge", "Language", "Code", "Original"};
    for (const auto& b : biases) header.push_back(transforms::display_name(b));
    header.push_back("MAD");
    cells.push_back(header);
    for (const auto& [judge_id, lang] : groups) {
      const ConditionRow* base = r.find({judge_id, lang, std::nullopt, p});
      std::vector<std::string> c = {judge_id, std::string(display_name(lang)), "Correct",
                                    base ? fixed1(base->stats.acc_correct * 100) : "-"};
      std::vector<std::string> i = {"", "", "Incorrect", base ? fixed1(base->stats.acc_incorrect * 100) : "-"};
      std::vector<std::string> d = {"", "", "Direction", ""};
      for (const auto& b : biases) {
        const ConditionRow* row = r.find({judge_id, lang, b, p});
        if (!row) {
          c.push_back("-");
          i.push_back("-");
          d.push_back("-");
          continue;
        }
        c.push_back(fixed1(row->stats.acc_correct * 100) + " (" + signed1(row->delta_correct) + ")");
        i.push_back(fixed1(row->stats.acc_incorrect * 100) + " (" + signed1(row->delta_incorrect) + ")");
        d.push_back(row->direction ? std::string(to_string(*row->direction)) : "");
      }
      const MadEntry* m = r.find_mad(p, Grouping::JudgeLanguage, judge_id + "/" + std::string(to_string(lang)));
      c.push_back(m ? fixed1(m->mad) : "-");
      cells.push_back(std::move(c));
      cells.push_back(std::move(i));
      cells.push_back(std::move(d));
    }
    out += detail::layout(cells, 3);
    if (biases.empty()) continue;
    out += "\nMAD by bias (%p): " + mad_line(r, p, Grouping::Bias) + "\n";
    out += "MAD by language (%p): " + mad_line(r, p, Grouping::Language) + "\n";
    out += "MAD by judge (%p): " + mad_line(r, p, Grouping::Judge) + "\n";
    out += "Overall MAD (%p): " + mad_line(r, p, Grouping::Overall).substr(4) + "\n";
  }
  return out;
}

}  // namespace biasforge::metrics

#endif  // BIASFORGE_METRICS_REPORT_HPP
