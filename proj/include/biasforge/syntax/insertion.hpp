#ifndef BIASFORGE_SYNTAX_INSERTION_HPP
#define BIASFORGE_SYNTAX_INSERTION_HPP

#include <cstdint>
#include <string_view>

#include "biasforge/error.hpp"
#include "biasforge/language.hpp"
#include "biasforge/syntax/tree.hpp"

namespace biasforge::syntax {

enum class InsertionKind { Comment, Function };

namespace detail {

inline std::uint32_t next_line_start(std::string_view src, std::uint32_t pos) {
  std::size_t nl = src.find('\n', pos);
  return nl == std::string_view::npos ? static_cast<std::uint32_t>(src.size())
                                      : static_cast<std::uint32_t>(nl + 1);
}

/// The class that hosts inserted Java methods: the public top-level class,
/// else the one declaring main, else the first.
inline Node primary_java_class(const SyntaxTree& tree) {
  Node first, with_main;
  for (Node item : tree.top_level_items()) {
    if (item.type() != "class_declaration") continue;
    if (!first.valid()) first = item;
    Node mods;
    for (std::uint32_t i = 0; i < item.named_child_count(); ++i) {
      if (item.named_child(i).type() == "modifiers") mods = item.named_child(i);
    }
    if (mods.valid() && mods.text(tree.source()).find("public") != std::string_view::npos) return item;
    Node body = item.field("body");
    for (std::uint32_t i = 0; body.valid() && i < body.named_child_count(); ++i) {
      Node m = body.named_child(i);
      if (m.type() == "method_declaration" && m.field("name").text(tree.source()) == "main" && !with_main.valid()) {
        with_main = item;
      }
    }
  }
  return with_main.valid() ? with_main : first;
}

}  // namespace detail

/// Comments may go at byte 0 in every supported language. New functions go
/// where a top-level function is legal: after `from __future__` imports and
/// a shebang in Python, after a shebang and directive prologue in
/// JavaScript, after the package clause and imports in Go (at the start of the
/// following line), and right after the opening brace of the primary class
/// body in Java. Throws ParseError.
inline std::uint32_t insertion_point(const SyntaxTree& tree, InsertionKind kind) {
  if (kind == InsertionKind::Comment) return 0;
  std::string_view src = tree.source();
  Node root = tree.root();
  switch (tree.language()) {
    case Language::Cpp: return 0;
    case Language::Python: {
      std::uint32_t at = 0;
      if (src.starts_with("#!")) at = detail::next_line_start(src, 0);
      for (Node item : tree.top_level_items()) {
        if (item.type() == "future_import_statement") at = detail::next_line_start(src, item.end());
      }
      return at;
    }
    case Language::JavaScript: {
      std::uint32_t at = 0;
      for (std::uint32_t i = 0; i < root.named_child_count(); ++i) {
        Node item = root.named_child(i);
        if (item.type() == "comment") continue;
        bool directive = item.type() == "expression_statement" && item.named_child_count() == 1 &&
                         item.named_child(0).type() == "string";
        if (item.type() == "hash_bang_line" || directive) {
          at = detail::next_line_start(src, item.end());
          continue;
        }
        break;
      }
      return at;
    }
    case Language::Go: {
      std::uint32_t at = 0;
      for (Node item : tree.top_level_items()) {
        if (item.type() == "package_clause" || item.type() == "import_declaration") {
          at = detail::next_line_start(src, item.end());
        }
      }
      return at;
    }
    case Language::Java: {
      Node cls = detail::primary_java_class(tree);
      if (!cls.valid()) {
        throw ParseError(SourceLocation{1, 1, 0}, "no top-level class to host inserted methods");
      }
      Node body = cls.field("body");
      return body.start() + 1;
    }
  }
  return 0;
}

inline std::uint32_t insertion_point(std::string_view source, Language lang, InsertionKind kind) {
  return insertion_point(parse(source, lang), kind);
}

}  // namespace biasforge::syntax

#endif  // BIASFORGE_SYNTAX_INSERTION_HPP
