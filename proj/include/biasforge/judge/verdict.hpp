#ifndef BIASFORGE_JUDGE_VERDICT_HPP
#define BIASFORGE_JUDGE_VERDICT_HPP

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biasforge/judge/types.hpp"

namespace biasforge::judge {

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Whole-word occurrences of `word` in `text` (both lower-case).
inline std::size_t count_word(std::string_view text, std::string_view word) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
    bool left = pos == 0 || !word_char(text[pos - 1]);
    bool right = pos + word.size() >= text.size() || !word_char(text[pos + word.size()]);
    if (left && right) ++n;
  }
  return n;
}

}  // namespace detail

/// Reads the answer after the last "verdict" marker, up to the end of that
/// line. Exactly one of correct/incorrect must appear there; anything else
/// (no marker, no value, both values, a negation) is Unparseable.
inline Verdict parse_verdict(std::string_view raw) {
  const std::string text = detail::lower(raw);
  std::size_t marker = std::string::npos;
  for (std::size_t pos = text.find("verdict"); pos != std::string::npos; pos = text.find("verdict", pos + 1)) {
    bool left = pos == 0 || !detail::word_char(text[pos - 1]);
    bool right = pos + 7 >= text.size() || !detail::word_char(text[pos + 7]);
    if (left && right) marker = pos;
  }
  if (marker == std::string::npos) return Verdict::Unparseable;
  std::size_t end = text.find('\n', marker);
  std::string_view answer = std::string_view(text).substr(marker + 7, end == std::string::npos ? end : end - marker - 7);
  const std::size_t correct = detail::count_word(answer, "correct");
  const std::size_t incorrect = detail::count_word(answer, "incorrect");
  const bool negated = detail::count_word(answer, "not") > 0 || detail::count_word(answer, "or") > 0;
  if (negated) return Verdict::Unparseable;
  if (correct > 0 && incorrect == 0) return Verdict::Correct;
  if (incorrect > 0 && correct == 0) return Verdict::Incorrect;
  return Verdict::Unparseable;
}

/// Extracts cases from a reply holding a JSON array of objects with
/// "input" and "expected_output" (or "output") string fields, optionally
/// inside a code fence and surrounded by prose. Returns an empty set with
/// `error` set when no usable case is found.
inline TestCaseSet parse_test_cases(std::string item_id, std::string raw) {
  TestCaseSet set;
  set.item_id = std::move(item_id);
  set.raw_output = std::move(raw);
  const std::string& text = set.raw_output;
  std::size_t attempts = 0;
  // Try each '[' from the last backwards, so a trailing array wins over
  // brackets that appear in the reasoning.
  for (std::size_t open = text.rfind('['); open != std::string::npos;
       open = open == 0 ? std::string::npos : text.rfind('[', open - 1)) {
    std::size_t close = text.rfind(']');
    while (close != std::string::npos && close > open && ++attempts < 500) {
      auto parsed = nlohmann::json::parse(text.begin() + static_cast<std::ptrdiff_t>(open),
                                          text.begin() + static_cast<std::ptrdiff_t>(close) + 1, nullptr, false);
      if (!parsed.is_discarded() && parsed.is_array()) {
        std::vector<TestCase> cases;
        for (const auto& c : parsed) {
          if (!c.is_object()) continue;
          auto in = c.find("input");
          auto out = c.find("expected_output");
          if (out == c.end()) out = c.find("output");
          if (in == c.end() || out == c.end()) continue;
          auto as_text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
          cases.push_back({as_text(*in), as_text(*out)});
        }
        if (!cases.empty()) {
          set.cases = std::move(cases);
          return set;
        }
      }
      close = close == 0 ? std::string::npos : text.rfind(']', close - 1);
    }
  }
  set.error = "no test cases found in reply";
  return set;
}

/// Plain-text listing used to fill the {test_cases} slot.
inline std::string format_test_cases(const TestCaseSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.cases.size(); ++i) {
    out += "Test case " + std::to_string(i + 1) + "\nInput:\n" + set.cases[i].input + "\nExpected output:\n" +
           set.cases[i].expected_output + "\n\n";
  }
  return out;
}

}  // namespace biasforge::judge

#endif  // BIASFORGE_JUDGE_VERDICT_HPP
