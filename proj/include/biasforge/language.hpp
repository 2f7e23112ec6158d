#ifndef BIASFORGE_LANGUAGE_HPP
#define BIASFORGE_LANGUAGE_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "biasforge/error.hpp"

namespace biasforge {

enum class Language { Cpp, Python, Java, JavaScript, Go };

inline constexpr std::array<Language, 5> kAllLanguages = {
    Language::Cpp, Language::Python, Language::Java, Language::JavaScript, Language::Go};

/// Wire name used in every file format: cpp|python|java|javascript|go.
inline std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::Cpp: return "cpp";
    case Language::Python: return "python";
    case Language::Java: return "java";
    case Language::JavaScript: return "javascript";
    case Language::Go: return "go";
  }
  return "?";
}

/// Human-facing name for report tables.
inline std::string_view display_name(Language lang) {
  switch (lang) {
    case Language::Cpp: return "C++";
    case Language::Python: return "Python";
    case Language::Java: return "Java";
    case Language::JavaScript: return "JavaScript";
    case Language::Go: return "Go";
  }
  return "?";
}

inline std::optional<Language> try_parse_language(std::string_view text) {
  for (Language lang : kAllLanguages) {
    if (to_string(lang) == text) return lang;
  }
  return std::nullopt;
}

inline Language parse_language(std::string_view text) {
  if (auto lang = try_parse_language(text)) return *lang;
  throw Error(ErrorCode::UnsupportedLanguage, "unknown language '" + std::string(text) + "'");
}

enum class Label { Correct, Incorrect };

inline std::string_view to_string(Label label) {
  return label == Label::Correct ? "correct" : "incorrect";
}

inline std::optional<Label> try_parse_label(std::string_view text) {
  if (text == "correct") return Label::Correct;
  if (text == "incorrect") return Label::Incorrect;
  return std::nullopt;
}

}  // namespace biasforge

#endif  // BIASFORGE_LANGUAGE_HPP
