#ifndef BIASFORGE_SYNTAX_COMMENTS_HPP
#define BIASFORGE_SYNTAX_COMMENTS_HPP

#include <string>
#include <string_view>
#include <vector>

#include "biasforge/language.hpp"
#include "biasforge/syntax/identifiers.hpp"
#include "biasforge/syntax/tree.hpp"

namespace biasforge::syntax {

inline bool is_comment_node(Node n) {
  std::string_view t = n.type();
  return t == "comment" || t == "line_comment" || t == "block_comment";
}

/// Byte ranges of every comment token, in source order.
inline std::vector<ByteRange> comment_ranges(const SyntaxTree& tree) {
  std::vector<ByteRange> out;
  walk(tree.root(), [&](Node n, std::string_view, const std::vector<WalkFrame>&) {
    if (is_comment_node(n)) out.push_back({n.start(), n.end()});
  });
  return out;
}

namespace detail {

inline bool word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '$' ||
         u >= 0x80;
}

inline bool operator_byte(char c) {
  return std::string_view("+-*/%&|^!<>=.:?#~@").find(c) != std::string_view::npos;
}

/// Whether deleting the bytes between `prev` and `next` could fuse two tokens.
inline bool would_glue(char prev, char next) {
  return (word_byte(prev) && word_byte(next)) || (operator_byte(prev) && operator_byte(next));
}

inline bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\f\r") == std::string_view::npos;
}

}  // namespace detail

/// Removes every comment token. Lines that held a comment are right-trimmed
/// when the comment ended them, and dropped when nothing else is left on them;
/// other lines, blank ones included, are copied unchanged. A comment that
/// separated two tokens leaves one space (or a newline, where JavaScript and
/// Go treat a multi-line comment as a line terminator).
inline std::string strip_comments(std::string_view source, Language lang) {
  SyntaxTree tree = parse(source, lang);
  std::vector<ByteRange> comments = comment_ranges(tree);
  if (comments.empty()) return std::string(source);

  std::string out;
  out.reserve(source.size());
  std::string line;
  bool touched = false;
  std::size_t last_removal = 0;  // position in `line` after the latest removal

  auto flush = [&](bool newline) {
    if (touched) {
      if (detail::blank(std::string_view(line).substr(std::min(last_removal, line.size())))) {
        std::size_t keep = line.find_last_not_of(" \t\f\r");
        line.resize(keep == std::string::npos ? 0 : keep + 1);
      }
      if (detail::blank(line)) {
        line.clear();
        touched = false;
        last_removal = 0;
        return;
      }
    }
    out += line;
    if (newline) out += '\n';
    line.clear();
    touched = false;
    last_removal = 0;
  };

  std::size_t next_comment = 0;
  std::size_t i = 0;
  while (i < source.size()) {
    if (next_comment < comments.size() && i == comments[next_comment].begin) {
      ByteRange c = comments[next_comment++];
      std::string_view body = source.substr(c.begin, c.end - c.begin);
      bool multiline = body.find('\n') != std::string_view::npos;
      char prev = c.begin > 0 ? source[c.begin - 1] : '\0';
      char next = c.end < source.size() ? source[c.end] : '\0';
      touched = true;
      if (multiline && (lang == Language::JavaScript || lang == Language::Go)) {
        last_removal = line.size();
        flush(true);
        touched = true;
      } else if (detail::would_glue(prev, next)) {
        line += ' ';
      }
      last_removal = line.size();
      i = c.end;
      continue;
    }
    if (source[i] == '\n') {
      flush(true);
      ++i;
      continue;
    }
    line += source[i++];
  }
  flush(false);
  return out;
}

}  // namespace biasforge::syntax

#endif  // BIASFORGE_SYNTAX_COMMENTS_HPP
