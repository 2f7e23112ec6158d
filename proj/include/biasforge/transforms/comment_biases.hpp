#ifndef BIASFORGE_TRANSFORMS_COMMENT_BIASES_HPP
#define BIASFORGE_TRANSFORMS_COMMENT_BIASES_HPP

#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/corpus.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/syntax/profile.hpp"
#include "biasforge/syntax/tree.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::transforms {

/// Variant skeleton carrying the sample's identity.
inline BiasVariant variant_of(const corpus::CodeSample& sample, const BiasKind& bias, std::string source,
                              std::uint64_t seed) {
  BiasVariant v;
  v.variant_id = variant_id_for(sample.sample_id, bias);
  v.base_sample_id = sample.sample_id;
  v.problem_id = sample.problem_id;
  v.language = sample.language;
  v.label = sample.label;
  v.bias = bias;
  v.source = std::move(source);
  v.provenance.seed = seed;
  return v;
}

/// Why `text` cannot be the body of a single-line comment in `lang`, if it
/// cannot. Catches text that would end the comment early or turn it into
/// something other than a comment: line breaks (including the JavaScript
/// separators U+2028/U+2029), a trailing backslash (a C++ line splice),
/// `\u` escapes (decoded before lexing in Java), and Python source-encoding
/// declarations.
inline std::optional<std::string> unsafe_comment_text(std::string_view text, Language lang) {
  if (text.find_first_of(std::string_view("\r\n\0", 3)) != std::string_view::npos) return "contains a line break";
  if (text.find("\xe2\x80\xa8") != std::string_view::npos || text.find("\xe2\x80\xa9") != std::string_view::npos) {
    return "contains a Unicode line separator";
  }
  std::string_view trimmed = text.substr(0, text.find_last_not_of(" \t") + 1);
  if (!trimmed.empty() && trimmed.back() == '\\') return "ends with a backslash";
  if (trimmed.ends_with("?\?/")) return "ends with a backslash trigraph";
  if (lang == Language::Java && text.find("\\u") != std::string_view::npos) return "contains a \\u escape";
  if (lang == Language::Python) {
    static const std::regex coding("coding[:=][ \\t]*[-\\w.]+");
    if (std::regex_search(text.begin(), text.end(), coding)) return "looks like a source-encoding declaration";
  }
  return std::nullopt;
}

inline std::string comment_line(std::string_view text, Language lang) {
  return syntax::profile(lang).line_comment_token + " " + std::string(text) + "\n";
}

/// `<token> correct code` on a new first line.
inline BiasVariant inject_self_declared(const corpus::CodeSample& sample) {
  syntax::parse(sample.source, sample.language);
  BiasVariant v = variant_of(sample, BiasKind::self_declared(),
                             comment_line("correct code", sample.language) + sample.source, 0);
  v.provenance.inserted_lines = std::vector<std::size_t>{0};
  return v;
}

namespace detail {

inline BiasVariant inject_template(const corpus::CodeSample& sample, const std::vector<CommentTemplate>& templates,
                                   std::uint64_t seed, TemplateKind kind) {
  const BiasKind bias = kind == TemplateKind::Authority ? BiasKind::authority() : BiasKind::reverse_authority();
  if (templates.empty()) throw Error(ErrorCode::EmptyTemplateSet, "no " + to_string(bias) + " templates");
  for (const auto& t : templates) {
    if (t.kind != kind) {
      throw Error(ErrorCode::ConfigError, "template " + t.id + " is not a " + to_string(bias) + " template");
    }
    if (auto why = unsafe_comment_text(t.text, sample.language)) {
      throw Error(ErrorCode::ConfigError, "template " + t.id + " " + *why);
    }
  }
  syntax::parse(sample.source, sample.language);
  SeededRng rng(seed);
  const std::size_t index = static_cast<std::size_t>(rng.below(templates.size()));
  const CommentTemplate& chosen = templates[index];
  BiasVariant v = variant_of(sample, bias, comment_line(chosen.text, sample.language) + sample.source, seed);
  v.provenance.template_index = index;
  v.provenance.template_id = chosen.id;
  v.provenance.template_origin = chosen.origin;
  v.provenance.inserted_lines = std::vector<std::size_t>{0};
  return v;
}

}  // namespace detail

/// One template, drawn uniformly under `seed`, as a new first line.
/// Throws EmptyTemplateSet, ConfigError (wrong kind or unsafe text), ParseError.
inline BiasVariant inject_authority(const corpus::CodeSample& sample, const std::vector<CommentTemplate>& templates,
                                    std::uint64_t seed) {
  return detail::inject_template(sample, templates, seed, TemplateKind::Authority);
}

inline BiasVariant inject_reverse_authority(const corpus::CodeSample& sample,
                                            const std::vector<CommentTemplate>& templates, std::uint64_t seed) {
  return detail::inject_template(sample, templates, seed, TemplateKind::ReverseAuthority);
}

/// Deletes the given 0-based lines. Used to undo comment insertions.
inline std::string remove_lines(std::string_view text, const std::vector<std::size_t>& lines) {
  std::string out;
  std::size_t line = 0, pos = 0;
  std::size_t next = 0;  // index into the sorted list
  std::vector<std::size_t> sorted(lines);
  std::sort(sorted.begin(), sorted.end());
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    while (next < sorted.size() && sorted[next] < line) ++next;
    if (next >= sorted.size() || sorted[next] != line) out.append(text.substr(pos, end - pos));
    pos = end;
    ++line;
  }
  return out;
}

}  // namespace biasforge::transforms

#endif  // BIASFORGE_TRANSFORMS_COMMENT_BIASES_HPP
