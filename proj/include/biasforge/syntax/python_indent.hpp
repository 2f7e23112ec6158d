#ifndef BIASFORGE_SYNTAX_PYTHON_INDENT_HPP
#define BIASFORGE_SYNTAX_PYTHON_INDENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/error.hpp"

namespace biasforge::syntax {

struct IndentProblem {
  SourceLocation where;
  std::string message;
};

/// Indentation rules the tree-sitter grammar tolerates but CPython rejects:
/// unexpected indent, missing indented block, dedent to an unknown level and
/// tab/space mixes whose meaning depends on the tab size (TabError).
/// Tracks strings, brackets and backslash continuations so only physical
/// lines that start a logical line are measured.
inline std::optional<IndentProblem> check_python_indentation(std::string_view src) {
  struct Level {
    int col8;  // tabs to multiples of 8
    int col1;  // tabs count as one column
  };
  std::vector<Level> stack{{0, 0}};
  bool expect_indent = false;
  int depth = 0;              // bracket nesting
  bool continuation = false;  // previous physical line ended with '\'
  std::size_t i = 0;
  std::uint32_t line = 1;
  char last_significant = '\0';

  auto skip_string = [&](std::size_t pos) -> std::size_t {
    // pos points at the opening quote (prefix letters already consumed).
    char q = src[pos];
    bool triple = pos + 2 < src.size() && src[pos + 1] == q && src[pos + 2] == q;
    std::size_t j = pos + (triple ? 3 : 1);
    while (j < src.size()) {
      char c = src[j];
      if (c == '\\') {
        if (j + 1 < src.size() && src[j + 1] == '\n') ++line;
        j += 2;
        continue;
      }
      if (c == '\n') {
        if (!triple) return j;  // unterminated; the grammar reports it
        ++line;
      }
      if (c == q) {
        if (!triple) return j + 1;
        if (j + 2 < src.size() && src[j + 1] == q && src[j + 2] == q) return j + 3;
      }
      ++j;
    }
    return j;
  };

  while (i < src.size()) {
    // At the start of a physical line.
    std::size_t line_start = i;
    bool logical_start = depth == 0 && !continuation;
    int col8 = 0, col1 = 0;
    while (i < src.size() && (src[i] == ' ' || src[i] == '\t' || src[i] == '\f')) {
      if (src[i] == '\t') {
        col8 = (col8 / 8 + 1) * 8;
        col1 += 1;
      } else if (src[i] == ' ') {
        ++col8;
        ++col1;
      } else {
        col8 = col1 = 0;
      }
      ++i;
    }
    bool blank = i >= src.size() || src[i] == '\n' || src[i] == '#' || src[i] == '\r';
    if (logical_start && !blank) {
      SourceLocation where{line, static_cast<std::uint32_t>(i - line_start + 1),
                           static_cast<std::uint32_t>(i)};
      const Level& top = stack.back();
      bool more8 = col8 > top.col8, more1 = col1 > top.col1;
      bool eq8 = col8 == top.col8, eq1 = col1 == top.col1;
      if (more8 != more1 || eq8 != eq1) {
        return IndentProblem{where, "inconsistent use of tabs and spaces in indentation"};
      }
      if (more8) {
        if (!expect_indent) return IndentProblem{where, "unexpected indent"};
        stack.push_back({col8, col1});
      } else {
        if (expect_indent) return IndentProblem{where, "expected an indented block"};
        while (stack.back().col8 > col8) stack.pop_back();
        if (stack.back().col8 != col8) {
          return IndentProblem{where, "unindent does not match any outer indentation level"};
        }
        if (stack.back().col1 != col1) {
          return IndentProblem{where, "inconsistent use of tabs and spaces in indentation"};
        }
      }
      expect_indent = false;
      last_significant = '\0';
    }
    continuation = false;
    // Scan the rest of the physical line.
    while (i < src.size() && src[i] != '\n') {
      char c = src[i];
      if (c == '#') {
        while (i < src.size() && src[i] != '\n') ++i;
        break;
      }
      if (c == '\'' || c == '"') {
        // Triple-quoted strings may span lines; scanning resumes after the
        // closing quotes on whatever line that is.
        i = skip_string(i);
        last_significant = 'S';
        continue;
      }
      if (c == '\\' && i + 1 < src.size() && src[i + 1] == '\n') {
        continuation = true;
        ++i;
        break;
      }
      if (c == '(' || c == '[' || c == '{') ++depth;
      if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
      if (c != ' ' && c != '\t' && c != '\r') last_significant = c;
      ++i;
    }
    if (depth == 0 && !continuation && last_significant == ':') expect_indent = true;
    if (i < src.size() && src[i] == '\n') {
      ++i;
      ++line;
    }
  }
  if (expect_indent) {
    return IndentProblem{{line, 1, static_cast<std::uint32_t>(src.size())},
                         "expected an indented block"};
  }
  return std::nullopt;
}

}  // namespace biasforge::syntax

#endif  // BIASFORGE_SYNTAX_PYTHON_INDENT_HPP
