#ifndef BIASFORGE_CORPUS_HPP
#define BIASFORGE_CORPUS_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biasforge/error.hpp"
#include "biasforge/io.hpp"
#include "biasforge/language.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/syntax/comments.hpp"

namespace biasforge::corpus {

inline constexpr int kSchemaVersion = 1;

struct IoTest {
  std::string input;
  std::string expected_output;
  friend bool operator==(const IoTest&, const IoTest&) = default;
};

struct Problem {
  std::string problem_id;
  std::string description;
  std::vector<IoTest> io_tests;  // empty: validation-limited

  [[nodiscard]] bool validation_limited() const { return io_tests.empty(); }
  friend bool operator==(const Problem&, const Problem&) = default;
};

struct CodeSample {
  std::string sample_id;
  std::string problem_id;
  Language language = Language::Cpp;
  std::string source;
  Label label = Label::Correct;
  friend bool operator==(const CodeSample&, const CodeSample&) = default;
};

struct LanguageCounts {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  friend bool operator==(const LanguageCounts&, const LanguageCounts&) = default;
};

struct Manifest {
  int schema_version = kSchemaVersion;
  std::optional<std::uint64_t> seed;  // creation seed, when sampled
  std::string prng = std::string(kPrngName);
  std::size_t problems = 0;
  std::map<Language, LanguageCounts> counts;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct Dataset {
  std::map<std::string, Problem> problems;
  std::vector<CodeSample> samples;
  Manifest manifest;

  [[nodiscard]] const Problem& problem(const std::string& id) const {
    auto it = problems.find(id);
    if (it == problems.end()) throw Error(ErrorCode::IntegrityError, "unknown problem " + id);
    return it->second;
  }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Recomputes manifest counts from the records.
inline void refresh_manifest(Dataset& ds) {
  ds.manifest.problems = ds.problems.size();
  ds.manifest.counts.clear();
  for (const auto& s : ds.samples) {
    auto& c = ds.manifest.counts[s.language];
    (s.label == Label::Correct ? c.correct : c.incorrect) += 1;
  }
}

// ------------------------------------------------------------------ JSON

inline nlohmann::json to_json(const Problem& p) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : p.io_tests) tests.push_back({t.input, t.expected_output});
  return {{"kind", "problem"}, {"problem_id", p.problem_id}, {"description", p.description}, {"io_tests", tests}};
}

inline nlohmann::json to_json(const CodeSample& s) {
  return {{"kind", "sample"},
          {"sample_id", s.sample_id},
          {"problem_id", s.problem_id},
          {"language", to_string(s.language)},
          {"label", to_string(s.label)},
          {"source", s.source}};
}

inline nlohmann::json to_json(const Manifest& m) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [lang, c] : m.counts) {
    counts[std::string(to_string(lang))] = {{"correct", c.correct}, {"incorrect", c.incorrect}};
  }
  nlohmann::json j = {{"schema_version", m.schema_version}, {"prng", m.prng}, {"problems", m.problems},
                      {"counts", counts}};
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  return j;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& rec, const char* name, std::size_t line) {
  auto it = rec.find(name);
  if (it == rec.end()) throw RecordError(ErrorCode::MalformedRecord, line, std::string("missing field '") + name + "'");
  return *it;
}

inline std::string string_field(const nlohmann::json& rec, const char* name, std::size_t line) {
  const auto& v = field(rec, name, line);
  if (!v.is_string()) throw RecordError(ErrorCode::MalformedRecord, line, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Parses the JSONL text of a dataset. Sources are parsed (rejecting invalid
/// code) and stripped of comments, so the result satisfies every invariant of
/// a normalized dataset.
inline Dataset parse_dataset(std::string_view text) {
  Dataset ds;
  std::set<std::string> sample_ids;
  std::vector<std::size_t> sample_lines;
  io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) return;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      throw RecordError(ErrorCode::MalformedRecord, line, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw RecordError(ErrorCode::MalformedRecord, line, "record is not an object");
    std::string kind = detail::string_field(rec, "kind", line);
    if (kind == "problem") {
      Problem p;
      p.problem_id = detail::string_field(rec, "problem_id", line);
      p.description = detail::string_field(rec, "description", line);
      if (p.problem_id.empty()) throw RecordError(ErrorCode::MalformedRecord, line, "empty problem_id");
      if (p.description.empty()) throw RecordError(ErrorCode::MalformedRecord, line, "empty description");
      if (auto it = rec.find("io_tests"); it != rec.end() && !it->is_null()) {
        if (!it->is_array()) throw RecordError(ErrorCode::MalformedRecord, line, "io_tests must be an array");
        for (const auto& t : *it) {
          if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_string()) {
            throw RecordError(ErrorCode::MalformedRecord, line, "io_tests entries must be [stdin, stdout] string pairs");
          }
          p.io_tests.push_back({t[0].get<std::string>(), t[1].get<std::string>()});
        }
      }
      if (ds.problems.count(p.problem_id)) {
        throw RecordError(ErrorCode::IntegrityError, line, "duplicate problem_id " + p.problem_id);
      }
      ds.problems.emplace(p.problem_id, std::move(p));
    } else if (kind == "sample") {
      CodeSample s;
      s.sample_id = detail::string_field(rec, "sample_id", line);
      s.problem_id = detail::string_field(rec, "problem_id", line);
      std::string lang = detail::string_field(rec, "language", line);
      auto parsed_lang = try_parse_language(lang);
      if (!parsed_lang) throw RecordError(ErrorCode::UnsupportedLanguage, line, "unsupported language '" + lang + "'");
      s.language = *parsed_lang;
      std::string label = detail::string_field(rec, "label", line);
      auto parsed_label = try_parse_label(label);
      if (!parsed_label) throw RecordError(ErrorCode::MalformedRecord, line, "label must be correct|incorrect, got '" + label + "'");
      s.label = *parsed_label;
      std::string source = detail::string_field(rec, "source", line);
      try {
        s.source = syntax::strip_comments(source, s.language);
      } catch (const ParseError& e) {
        throw RecordError(ErrorCode::MalformedRecord, line, "source does not parse as " + lang + ": " + e.detail());
      }
      if (!sample_ids.insert(s.sample_id).second) {
        throw RecordError(ErrorCode::IntegrityError, line, "duplicate sample_id " + s.sample_id);
      }
      ds.samples.push_back(std::move(s));
      sample_lines.push_back(line);
    } else {
      throw RecordError(ErrorCode::MalformedRecord, line, "unknown kind '" + kind + "'");
    }
  });
  // Problems may follow the samples that use them, so resolve at the end.
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (!ds.problems.count(ds.samples[i].problem_id)) {
      throw RecordError(ErrorCode::IntegrityError, sample_lines[i],
                        "sample " + ds.samples[i].sample_id + " references unknown problem " + ds.samples[i].problem_id);
    }
  }
  refresh_manifest(ds);
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "dataset not found: " + path.string());
  return parse_dataset(io::read_file(path));
}

/// JSONL text: problems in id order, then samples in dataset order.
inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& [id, p] : ds.problems) out += to_json(p).dump() + "\n";
  for (const auto& s : ds.samples) out += to_json(s).dump() + "\n";
  return out;
}

/// Writes dataset.jsonl and manifest.json into `dir`; returns the sha256 of
/// the dataset file, which the manifest also records.
inline std::string save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::string body = serialize_dataset(ds);
  std::string digest = io::sha256_hex(body);
  io::atomic_write(dir / "dataset.jsonl", body);
  nlohmann::json manifest = to_json(ds.manifest);
  manifest["dataset_sha256"] = digest;
  io::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
  return digest;
}

/// Loads what save_dataset wrote, including the manifest's seed.
inline Dataset load_saved_dataset(const std::filesystem::path& dir) {
  Dataset ds = load_dataset(dir / "dataset.jsonl");
  if (std::filesystem::exists(dir / "manifest.json")) {
    auto m = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
    if (m.contains("seed") && !m["seed"].is_null()) ds.manifest.seed = m["seed"].get<std::uint64_t>();
  }
  return ds;
}

/// Comment-free source; the token stream other than comments is unchanged.
inline std::string strip_comments(std::string_view source, Language lang) {
  return syntax::strip_comments(source, lang);
}

struct Pair {
  Problem problem;
  CodeSample correct;
  CodeSample incorrect;
};

/// Picks n distinct problems that have both labels in `lang`, and one random
/// solution of each label for each. Deterministic in (dataset, n, seed).
inline std::vector<Pair> prepare_pairs(const Dataset& ds, Language lang, std::size_t n, std::uint64_t seed) {
  std::map<std::string, std::pair<std::vector<const CodeSample*>, std::vector<const CodeSample*>>> by_problem;
  for (const auto& s : ds.samples) {
    if (s.language != lang) continue;
    auto& slot = by_problem[s.problem_id];
    (s.label == Label::Correct ? slot.first : slot.second).push_back(&s);
  }
  std::vector<std::string> eligible;
  for (auto& [id, slot] : by_problem) {
    if (slot.first.empty() || slot.second.empty()) continue;
    auto by_id = [](const CodeSample* a, const CodeSample* b) { return a->sample_id < b->sample_id; };
    std::sort(slot.first.begin(), slot.first.end(), by_id);
    std::sort(slot.second.begin(), slot.second.end(), by_id);
    eligible.push_back(id);
  }
  if (eligible.size() < n) {
    throw Error(ErrorCode::InsufficientData, std::to_string(eligible.size()) + " problems have both labels in " +
                                                 std::string(to_string(lang)) + ", " + std::to_string(n) + " requested");
  }
  SeededRng rng(derive_seed(seed, {"prepare_pairs", to_string(lang)}));
  rng.shuffle(eligible);
  std::vector<Pair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& slot = by_problem[eligible[i]];
    const CodeSample* c = slot.first[rng.below(slot.first.size())];
    const CodeSample* w = slot.second[rng.below(slot.second.size())];
    out.push_back({ds.problem(eligible[i]), *c, *w});
  }
  return out;
}

/// Number of problems prepare_pairs could draw from.
inline std::size_t eligible_problems(const Dataset& ds, Language lang) {
  std::map<std::string, unsigned> seen;
  for (const auto& s : ds.samples) {
    if (s.language == lang) seen[s.problem_id] |= s.label == Label::Correct ? 1u : 2u;
  }
  return static_cast<std::size_t>(std::count_if(seen.begin(), seen.end(), [](auto& kv) { return kv.second == 3u; }));
}

/// Builds the prepared dataset: the union of the per-language pairs, with only
/// the problems they use. Each problem gets exactly one solution of each label
/// per language.
inline Dataset prepared_dataset(const Dataset& ds, const std::vector<Language>& languages,
                                std::optional<std::size_t> per_language, std::uint64_t seed) {
  Dataset out;
  for (Language lang : languages) {
    std::size_t n = per_language ? *per_language : eligible_problems(ds, lang);
    auto pairs = prepare_pairs(ds, lang, n, seed);
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return a.problem.problem_id < b.problem.problem_id; });
    for (auto& p : pairs) {
      out.problems.emplace(p.problem.problem_id, p.problem);
      out.samples.push_back(p.correct);
      out.samples.push_back(p.incorrect);
    }
  }
  out.manifest.seed = seed;
  refresh_manifest(out);
  return out;
}

}  // namespace biasforge::corpus

#endif  // BIASFORGE_CORPUS_HPP
