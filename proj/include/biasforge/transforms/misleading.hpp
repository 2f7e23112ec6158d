#ifndef BIASFORGE_TRANSFORMS_MISLEADING_HPP
#define BIASFORGE_TRANSFORMS_MISLEADING_HPP

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/corpus.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/syntax/comments.hpp"
#include "biasforge/syntax/insertion.hpp"
#include "biasforge/syntax/profile.hpp"
#include "biasforge/syntax/tree.hpp"
#include "biasforge/transforms/comment_biases.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::transforms {

struct GenerationRequest {
  std::string prompt;
  std::string code;
  Language language = Language::Cpp;
  std::uint64_t seed = 0;
  std::size_t attempt = 1;  // 1-based
};

/// Anything that turns a prompt into text. Implementations throw Error with
/// TransportError or RateLimited on failure; must be callable concurrently.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
  [[nodiscard]] virtual std::string model() const = 0;
};

inline constexpr std::size_t kDefaultMaxAttempts = 3;
inline constexpr std::size_t kMinMisleadingComments = 2;
inline constexpr std::size_t kMaxMisleadingComments = 3;

inline constexpr std::string_view kDefaultMisleadingPrompt =
    "Below is a {language} program. Rewrite it with two or three new single-line comments, "
    "each starting with `{comment_token}`, that describe what the code does incorrectly: "
    "the comments must claim the code performs a plausible but different task. "
    "Put each comment on its own line. Do not change, reorder, reformat, or remove any line of code, "
    "and do not add anything except the comment lines. Return only the program.\n\n"
    "{code}";

inline std::string render_prompt(std::string_view tmpl, Language lang, std::string_view code) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        std::string_view key = tmpl.substr(i + 1, close - i - 1);
        if (key == "language") {
          out += display_name(lang);
          i = close + 1;
          continue;
        }
        if (key == "code") {
          out += code;
          i = close + 1;
          continue;
        }
        if (key == "comment_token") {
          out += syntax::profile(lang).line_comment_token;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

/// Drops a surrounding Markdown code fence, if the reply has one.
inline std::string_view strip_code_fence(std::string_view reply) {
  std::size_t open = reply.find("```");
  if (open == std::string_view::npos) return reply;
  std::size_t body = reply.find('\n', open);
  if (body == std::string_view::npos) return reply;
  std::size_t close = reply.find("\n```", body);
  if (close == std::string_view::npos) return reply.substr(body + 1);
  return reply.substr(body + 1, close - body);
}

}  // namespace detail

/// Result of checking a generated candidate against the original.
struct CommentExtraction {
  std::vector<std::string> comments;  // texts without the comment token
  std::string error;                  // empty when usable
  [[nodiscard]] bool ok() const { return error.empty(); }
};

/// Aligns the candidate's lines with the original's. Lines equal to the next
/// unmatched original line are code; other lines must be single-line comments
/// (collected) or blank (ignored). Every original line must be matched, in
/// order, and the number of comments must be in [2, 3].
inline CommentExtraction extract_added_comments(std::string_view original, std::string_view reply, Language lang) {
  CommentExtraction out;
  const std::string& token = syntax::profile(lang).line_comment_token;
  auto orig = detail::split_lines(original);
  auto cand = detail::split_lines(detail::strip_code_fence(reply));
  while (!orig.empty() && detail::trim(orig.back()).empty()) orig.pop_back();
  std::size_t i = 0;
  for (std::string_view line : cand) {
    if (i < orig.size() && line == orig[i]) {
      ++i;
      continue;
    }
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    if (t.starts_with(token)) {
      std::string text(detail::trim(t.substr(token.size())));
      if (text.empty()) {
        out.error = "empty comment";
        return out;
      }
      if (auto why = unsafe_comment_text(text, lang)) {
        out.error = "comment " + *why;
        return out;
      }
      out.comments.push_back(std::move(text));
      continue;
    }
    out.error = i < orig.size() ? "code line " + std::to_string(i + 1) + " was altered or reordered"
                                : "code was added after the original program";
    return out;
  }
  if (i < orig.size()) {
    out.error = "code line " + std::to_string(i + 1) + " is missing";
    return out;
  }
  if (out.comments.size() < kMinMisleadingComments || out.comments.size() > kMaxMisleadingComments) {
    out.error = std::to_string(out.comments.size()) + " comments added, expected 2 or 3";
  }
  return out;
}

namespace detail {

inline bool starts_line(std::string_view src, std::uint32_t at) {
  std::size_t line_start = src.rfind('\n', at == 0 ? 0 : at - 1);
  line_start = (at == 0 || line_start == std::string_view::npos) ? 0 : line_start + 1;
  if (at == 0) return true;
  for (std::size_t k = line_start; k < at; ++k) {
    if (src[k] != ' ' && src[k] != '\t') return false;
  }
  return true;
}

inline std::size_t line_of(std::string_view src, std::uint32_t at) {
  return static_cast<std::size_t>(std::count(src.begin(), src.begin() + at, '\n'));
}

/// Statement-like children of a node's body, if it has one.
inline std::vector<syntax::Node> body_items(syntax::Node n) {
  static constexpr std::string_view kBodies[] = {"block", "compound_statement", "statement_block", "class_body",
                                                 "declaration_list", "field_declaration_list"};
  std::vector<syntax::Node> out;
  std::vector<syntax::Node> stack{n};
  while (!stack.empty()) {
    syntax::Node cur = stack.back();
    stack.pop_back();
    for (std::uint32_t i = 0; i < cur.named_child_count(); ++i) {
      syntax::Node c = cur.named_child(i);
      if (std::find(std::begin(kBodies), std::end(kBodies), c.type()) != std::end(kBodies)) {
        for (std::uint32_t k = 0; k < c.named_child_count(); ++k) {
          if (!syntax::is_comment_node(c.named_child(k))) out.push_back(c.named_child(k));
        }
        return out;
      }
    }
    for (std::uint32_t i = cur.named_child_count(); i-- > 0;) {
      if (cur.named_child(i).type().ends_with("definition") || cur.named_child(i).type().ends_with("declaration")) {
        stack.push_back(cur.named_child(i));
      }
    }
  }
  return out;
}

}  // namespace detail

/// 0-based line numbers (of the original) above which the k comments go:
/// the starts of the k largest top-level statements (members of the primary
/// class in Java), in source order. Descends into the largest statement's
/// body when there are too few, and stacks comments on the last anchor when
/// even that is not enough. Anchors must begin their line, and the line
/// before must not end in a backslash continuation.
inline std::vector<std::size_t> comment_anchor_lines(const syntax::SyntaxTree& tree, std::size_t k) {
  const std::string& src = tree.source();
  std::vector<syntax::Node> items;
  if (tree.language() == Language::Java) {
    syntax::Node cls = syntax::detail::primary_java_class(tree);
    if (cls.valid()) items = detail::body_items(cls);
  }
  if (items.empty()) items = tree.top_level_items();

  auto usable = [&](syntax::Node n) {
    if (n.type() == "hash_bang_line") return false;
    if (!detail::starts_line(src, n.start())) return false;
    std::size_t line = detail::line_of(src, n.start());
    if (line == 0) return true;
    std::size_t prev_end = src.rfind('\n', n.start() - 1);
    std::string_view before(src.data(), prev_end);
    before = before.substr(0, before.find_last_not_of(" \t\r") + 1);
    return before.empty() || before.back() != '\\';
  };
  std::vector<syntax::Node> anchors;
  for (auto n : items) {
    if (usable(n)) anchors.push_back(n);
  }
  if (anchors.size() < k && !items.empty()) {
    auto largest = std::max_element(items.begin(), items.end(), [](syntax::Node a, syntax::Node b) {
      return a.end() - a.start() < b.end() - b.start();
    });
    for (auto n : detail::body_items(*largest)) {
      if (usable(n)) anchors.push_back(n);
    }
  }
  std::stable_sort(anchors.begin(), anchors.end(), [](syntax::Node a, syntax::Node b) {
    return a.end() - a.start() > b.end() - b.start();
  });
  std::vector<std::size_t> lines;
  for (auto n : anchors) {
    std::size_t line = detail::line_of(src, n.start());
    if (std::find(lines.begin(), lines.end(), line) == lines.end()) lines.push_back(line);
    if (lines.size() == k) break;
  }
  if (lines.empty()) lines.push_back(0);
  std::sort(lines.begin(), lines.end());
  while (lines.size() < k) lines.push_back(lines.back());
  return lines;
}

/// Places the comments above their anchors with the anchor's indentation.
/// Returns the new source and the 0-based variant lines that were inserted.
inline std::pair<std::string, std::vector<std::size_t>> place_comments(const syntax::SyntaxTree& tree,
                                                                       const std::vector<std::string>& comments) {
  const std::string& src = tree.source();
  auto anchors = comment_anchor_lines(tree, comments.size());
  std::string out;
  std::vector<std::size_t> inserted;
  std::size_t line = 0, pos = 0, next = 0, out_line = 0;
  auto emit_comments_for = [&](std::size_t l, std::string_view indent) {
    while (next < anchors.size() && anchors[next] == l) {
      out.append(indent);
      out += comment_line(comments[next], tree.language());
      inserted.push_back(out_line++);
      ++next;
    }
  };
  while (pos < src.size()) {
    std::size_t nl = src.find('\n', pos);
    std::size_t end = nl == std::string::npos ? src.size() : nl + 1;
    std::string_view text(src.data() + pos, end - pos);
    std::string_view indent = text.substr(0, text.find_first_not_of(" \t"));
    if (indent.size() == text.size()) indent = {};
    emit_comments_for(line, indent);
    out.append(text);
    ++out_line;
    pos = end;
    ++line;
  }
  if (next < anchors.size()) {
    if (!out.empty() && out.back() != '\n') {
      out.push_back('\n');
      ++out_line;
    }
    emit_comments_for(anchors[next], {});
  }
  return {out, inserted};
}

/// Asks the generator for misleading comments until a candidate keeps every
/// code line intact, then re-places its 2-3 comments deterministically above
/// the largest statements. After `max_attempts` failed candidates (transport
/// errors count as failures) the returned variant is Flagged with the last
/// candidate as its source. Throws GeneratorUnavailable, ParseError.
inline BiasVariant inject_misleading_task(const corpus::CodeSample& sample, TextGenerator* generator,
                                          std::size_t max_attempts = kDefaultMaxAttempts, std::uint64_t seed = 0,
                                          std::string_view prompt_template = kDefaultMisleadingPrompt) {
  if (!generator) throw Error(ErrorCode::GeneratorUnavailable, "misleading-task injection needs a text generator");
  if (max_attempts == 0) throw Error(ErrorCode::ConfigError, "max_attempts must be >= 1");
  syntax::SyntaxTree tree = syntax::parse(sample.source, sample.language);
  const BiasKind bias = BiasKind::misleading_task();

  GenerationRequest req;
  req.prompt = render_prompt(prompt_template, sample.language, sample.source);
  req.code = sample.source;
  req.language = sample.language;
  std::string last_candidate = sample.source;
  std::string last_error;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    req.attempt = attempt;
    req.seed = derive_seed(seed, {"misleading_task", std::to_string(attempt)});
    std::string reply;
    try {
      reply = generator->generate(req);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError && e.code() != ErrorCode::RateLimited) throw;
      last_error = e.what();
      continue;
    }
    last_candidate = std::string(detail::strip_code_fence(reply));
    CommentExtraction ex = extract_added_comments(sample.source, reply, sample.language);
    if (!ex.ok()) {
      last_error = ex.error;
      continue;
    }
    auto [source, lines] = place_comments(tree, ex.comments);
    BiasVariant v = variant_of(sample, bias, std::move(source), seed);
    v.provenance.generator_model = generator->model();
    v.provenance.attempts = attempt;
    v.provenance.inserted_lines = std::move(lines);
    return v;
  }
  BiasVariant v = variant_of(sample, bias, std::move(last_candidate), seed);
  v.provenance.generator_model = generator->model();
  v.provenance.attempts = max_attempts;
  v.validation_state = ValidationState::Flagged;
  v.flag_reason = std::string(to_string(ErrorCode::MaxAttemptsExceeded)) + ": " + last_error;
  return v;
}

/// Deterministic generator for tests and offline runs: returns the code with
/// two or three comments (drawn from `phrases` under the request seed) placed
/// above lines of the program.
class PhraseGenerator : public TextGenerator {
 public:
  explicit PhraseGenerator(std::vector<std::string> phrases, std::string model = "phrase-mock")
      : phrases_(std::move(phrases)), model_(std::move(model)) {}

  std::string generate(const GenerationRequest& request) override {
    if (phrases_.empty()) throw Error(ErrorCode::ConfigError, "phrase generator has no phrases");
    SeededRng rng(request.seed);
    std::size_t n = kMinMisleadingComments + rng.below(kMaxMisleadingComments - kMinMisleadingComments + 1);
    const std::string& token = syntax::profile(request.language).line_comment_token;
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += token + " " + phrases_[rng.below(phrases_.size())] + "\n";
    return out + request.code;
  }
  [[nodiscard]] std::string model() const override { return model_; }

 private:
  std::vector<std::string> phrases_;
  std::string model_;
};

}  // namespace biasforge::transforms

#endif  // BIASFORGE_TRANSFORMS_MISLEADING_HPP
