#ifndef BIASFORGE_SYNTAX_TREE_HPP
#define BIASFORGE_SYNTAX_TREE_HPP

#include <tree_sitter/api.h>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/error.hpp"
#include "biasforge/language.hpp"
#include "biasforge/syntax/python_indent.hpp"

extern "C" {
const TSLanguage* tree_sitter_cpp(void);
const TSLanguage* tree_sitter_python(void);
const TSLanguage* tree_sitter_java(void);
const TSLanguage* tree_sitter_javascript(void);
const TSLanguage* tree_sitter_go(void);
}

namespace biasforge::syntax {

inline const TSLanguage* grammar_for(Language lang) {
  switch (lang) {
    case Language::Cpp: return tree_sitter_cpp();
    case Language::Python: return tree_sitter_python();
    case Language::Java: return tree_sitter_java();
    case Language::JavaScript: return tree_sitter_javascript();
    case Language::Go: return tree_sitter_go();
  }
  return nullptr;
}

/// Non-owning view of a tree-sitter node. Valid while its SyntaxTree lives.
class Node {
 public:
  Node() = default;
  explicit Node(TSNode raw) : raw_(raw) {}

  [[nodiscard]] bool valid() const { return !ts_node_is_null(raw_); }
  [[nodiscard]] std::string_view type() const { return ts_node_type(raw_); }
  [[nodiscard]] bool named() const { return ts_node_is_named(raw_); }
  [[nodiscard]] bool missing() const { return ts_node_is_missing(raw_); }
  [[nodiscard]] bool is_error() const { return ts_node_is_error(raw_); }
  [[nodiscard]] bool has_error() const { return ts_node_has_error(raw_); }
  [[nodiscard]] std::uint32_t start() const { return ts_node_start_byte(raw_); }
  [[nodiscard]] std::uint32_t end() const { return ts_node_end_byte(raw_); }
  [[nodiscard]] TSPoint start_point() const { return ts_node_start_point(raw_); }
  [[nodiscard]] TSPoint end_point() const { return ts_node_end_point(raw_); }

  [[nodiscard]] std::uint32_t child_count() const { return ts_node_child_count(raw_); }
  [[nodiscard]] Node child(std::uint32_t i) const { return Node(ts_node_child(raw_, i)); }
  [[nodiscard]] std::uint32_t named_child_count() const { return ts_node_named_child_count(raw_); }
  [[nodiscard]] Node named_child(std::uint32_t i) const { return Node(ts_node_named_child(raw_, i)); }
  [[nodiscard]] std::string_view field_name_for_child(std::uint32_t i) const {
    const char* name = ts_node_field_name_for_child(raw_, i);
    return name ? std::string_view(name) : std::string_view();
  }
  [[nodiscard]] Node field(std::string_view name) const {
    return Node(ts_node_child_by_field_name(raw_, name.data(), static_cast<std::uint32_t>(name.size())));
  }
  [[nodiscard]] Node parent() const { return Node(ts_node_parent(raw_)); }

  [[nodiscard]] std::string_view text(std::string_view source) const {
    return source.substr(start(), end() - start());
  }

  [[nodiscard]] TSNode raw() const { return raw_; }

 private:
  TSNode raw_{};
};

/// Parsed source. Owns a copy of the text so node byte ranges stay valid.
class SyntaxTree {
 public:
  SyntaxTree(Language lang, std::string source, TSTree* tree)
      : lang_(lang), source_(std::move(source)), tree_(tree, &ts_tree_delete) {}

  [[nodiscard]] Language language() const { return lang_; }
  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] Node root() const { return Node(ts_tree_root_node(tree_.get())); }

  /// Top-level items, comments excluded.
  [[nodiscard]] std::vector<Node> top_level_items() const {
    std::vector<Node> items;
    Node r = root();
    for (std::uint32_t i = 0; i < r.named_child_count(); ++i) {
      Node c = r.named_child(i);
      if (c.type() != "comment") items.push_back(c);
    }
    return items;
  }

 private:
  Language lang_;
  std::string source_;
  std::unique_ptr<TSTree, decltype(&ts_tree_delete)> tree_;
};

namespace detail {

struct ParserDeleter {
  void operator()(TSParser* p) const { ts_parser_delete(p); }
};

inline TSParser* thread_parser(Language lang) {
  // Parsers are not thread-safe; keep one per thread and language.
  thread_local std::unique_ptr<TSParser, ParserDeleter> parsers[5];
  auto& slot = parsers[static_cast<int>(lang)];
  if (!slot) {
    slot.reset(ts_parser_new());
    ts_parser_set_language(slot.get(), grammar_for(lang));
  }
  return slot.get();
}

inline Node first_error(Node node) {
  if (node.is_error() || node.missing()) return node;
  if (!node.has_error()) return {};
  for (std::uint32_t i = 0; i < node.child_count(); ++i) {
    Node found = first_error(node.child(i));
    if (found.valid()) return found;
  }
  return node;
}

}  // namespace detail

/// Parses without rejecting syntax errors; callers that need a clean tree
/// use parse().
inline SyntaxTree parse_lenient(std::string_view source, Language lang) {
  TSParser* parser = detail::thread_parser(lang);
  ts_parser_reset(parser);
  TSTree* tree = ts_parser_parse_string(parser, nullptr, source.data(),
                                        static_cast<std::uint32_t>(source.size()));
  if (!tree) throw Error(ErrorCode::ParseError, "parser returned no tree");
  return SyntaxTree(lang, std::string(source), tree);
}

/// Full parse. Throws ParseError at the first ERROR or MISSING node.
inline SyntaxTree parse(std::string_view source, Language lang) {
  SyntaxTree tree = parse_lenient(source, lang);
  Node root = tree.root();
  if (root.has_error()) {
    Node bad = detail::first_error(root);
    TSPoint p = bad.start_point();
    SourceLocation where{p.row + 1, p.column + 1, bad.start()};
    std::string what = bad.missing() ? "missing '" + std::string(bad.type()) + "'"
                                     : "unexpected syntax";
    throw ParseError(where, what);
  }
  if (lang == Language::Python) {
    if (auto problem = check_python_indentation(source)) throw ParseError(problem->where, problem->message);
  }
  return tree;
}

/// Depth-first pre-order walk that tells the visitor each node's field name
/// in its parent and the ancestor chain (nearest last).
struct WalkFrame {
  Node node;
  std::string_view field;
};

template <typename Visitor>
void walk(Node root, Visitor&& visit) {
  std::vector<WalkFrame> ancestors;
  TSTreeCursor cursor = ts_tree_cursor_new(root.raw());
  auto current = [&]() {
    const char* f = ts_tree_cursor_current_field_name(&cursor);
    return WalkFrame{Node(ts_tree_cursor_current_node(&cursor)), f ? std::string_view(f) : std::string_view()};
  };
  for (;;) {
    WalkFrame frame = current();
    visit(frame.node, frame.field, static_cast<const std::vector<WalkFrame>&>(ancestors));
    if (ts_tree_cursor_goto_first_child(&cursor)) {
      ancestors.push_back(frame);
      continue;
    }
    while (!ts_tree_cursor_goto_next_sibling(&cursor)) {
      if (ancestors.empty() || !ts_tree_cursor_goto_parent(&cursor)) {
        ts_tree_cursor_delete(&cursor);
        return;
      }
      ancestors.pop_back();
      if (ancestors.empty()) {
        ts_tree_cursor_delete(&cursor);
        return;
      }
    }
  }
}

}  // namespace biasforge::syntax

#endif  // BIASFORGE_SYNTAX_TREE_HPP
