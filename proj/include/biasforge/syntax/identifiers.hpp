#ifndef BIASFORGE_SYNTAX_IDENTIFIERS_HPP
#define BIASFORGE_SYNTAX_IDENTIFIERS_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/language.hpp"
#include "biasforge/syntax/profile.hpp"
#include "biasforge/syntax/tree.hpp"

namespace biasforge::syntax {

enum class ExclusionReason { FunctionName, TypeName, Imported, Builtin, Field, Reserved };

inline std::string_view to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::FunctionName: return "FunctionName";
    case ExclusionReason::TypeName: return "TypeName";
    case ExclusionReason::Imported: return "Imported";
    case ExclusionReason::Builtin: return "Builtin";
    case ExclusionReason::Field: return "Field";
    case ExclusionReason::Reserved: return "Reserved";
  }
  return "?";
}

struct ByteRange {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
  friend auto operator<=>(const ByteRange&, const ByteRange&) = default;
};

struct RenameableName {
  std::string name;
  std::vector<ByteRange> occurrences;  // ascending
};

struct ExcludedName {
  std::string name;
  ExclusionReason reason;
};

/// Names are kept sorted so equal sources give equal sets.
struct IdentifierSet {
  std::vector<RenameableName> renameable;
  std::vector<ExcludedName> excluded;

  [[nodiscard]] const RenameableName* find_renameable(std::string_view name) const {
    auto it = std::lower_bound(renameable.begin(), renameable.end(), name,
                               [](const RenameableName& r, std::string_view n) { return r.name < n; });
    return it != renameable.end() && it->name == name ? &*it : nullptr;
  }
  [[nodiscard]] const ExcludedName* find_excluded(std::string_view name) const {
    auto it = std::lower_bound(excluded.begin(), excluded.end(), name,
                               [](const ExcludedName& e, std::string_view n) { return e.name < n; });
    return it != excluded.end() && it->name == name ? &*it : nullptr;
  }
  [[nodiscard]] bool empty() const { return renameable.empty() && excluded.empty(); }
};

/// Everything the transforms need from one pass over a tree.
struct IdentifierAnalysis {
  IdentifierSet identifiers;
  std::set<std::string, std::less<>> function_names;
  /// Text of every identifier-like token, including words inside C++ macro
  /// bodies. Used for collision checks.
  std::set<std::string, std::less<>> all_names;
};

namespace detail {

enum class Role { Declaration, Reference, Separate, Block, TypeDecl, TypeUse };

struct Classified {
  Role role = Role::Reference;
  unsigned reasons = 0;  // bitmask over ExclusionReason when role == Block
};

inline unsigned bit(ExclusionReason r) { return 1u << static_cast<unsigned>(r); }

inline Classified block(ExclusionReason r) { return {Role::Block, bit(r)}; }
inline Classified block(ExclusionReason a, ExclusionReason b) { return {Role::Block, bit(a) | bit(b)}; }

/// Position of an identifier token: the node, its field in the parent and the
/// ancestor chain from the walk.
class Site {
 public:
  Site(Node node, std::string_view field, const std::vector<WalkFrame>& anc)
      : node_(node), field_(field), anc_(anc) {}

  [[nodiscard]] Node node() const { return node_; }
  /// k-th ancestor; 0 is the parent.
  [[nodiscard]] Node up(std::size_t k) const {
    return k < anc_.size() ? anc_[anc_.size() - 1 - k].node : Node();
  }
  [[nodiscard]] std::string_view up_type(std::size_t k) const {
    Node n = up(k);
    return n.valid() ? n.type() : std::string_view();
  }
  /// Field under which the path continues inside up(k).
  [[nodiscard]] std::string_view field_at(std::size_t k) const {
    if (k == 0) return field_;
    return k <= anc_.size() ? anc_[anc_.size() - k].field : std::string_view();
  }
  [[nodiscard]] std::size_t depth() const { return anc_.size(); }
  [[nodiscard]] bool inside(std::string_view type) const {
    for (const auto& f : anc_) {
      if (f.node.type() == type) return true;
    }
    return false;
  }
  /// Index k of the nearest ancestor whose type is in `types`, or depth().
  [[nodiscard]] std::size_t nearest(std::initializer_list<std::string_view> types) const {
    for (std::size_t k = 0; k < anc_.size(); ++k) {
      std::string_view t = up_type(k);
      for (auto want : types) {
        if (t == want) return k;
      }
    }
    return anc_.size();
  }

 private:
  Node node_;
  std::string_view field_;
  const std::vector<WalkFrame>& anc_;
};

inline bool one_of(std::string_view s, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

struct ScanState {
  std::string_view source;
  std::set<std::string, std::less<>>* function_names;
  bool reflective = false;
};

// ---------------------------------------------------------------- Python

inline Classified classify_python(const Site& s, ScanState& st) {
  std::string_view t0 = s.up_type(0);
  std::string_view f = s.field_at(0);
  std::string_view text = s.node().text(st.source);

  if (s.inside("import_statement") || s.inside("import_from_statement") ||
      s.inside("future_import_statement")) {
    return block(ExclusionReason::Imported);
  }
  if (t0 == "attribute" && f == "attribute") return {Role::Separate};
  if (t0 == "keyword_argument" && f == "name") return block(ExclusionReason::Field);
  if (t0 == "function_definition" && f == "name") {
    st.function_names->emplace(text);
    return block(ExclusionReason::FunctionName);
  }
  if (t0 == "class_definition" && f == "name") return block(ExclusionReason::TypeName);
  if (s.inside("case_pattern")) return block(ExclusionReason::Reserved);
  // f"{x=}" prints the expression text itself.
  std::size_t interp = s.nearest({"interpolation"});
  if (interp < s.depth()) {
    Node n = s.up(interp);
    for (std::uint32_t i = 0; i < n.child_count(); ++i) {
      if (!n.child(i).named() && n.child(i).type() == "=") return block(ExclusionReason::Reserved);
    }
  }

  std::size_t k = 0;
  while (one_of(s.up_type(k), {"pattern_list", "tuple_pattern", "list_pattern", "list_splat_pattern",
                               "dictionary_splat_pattern"})) {
    ++k;
  }
  std::string_view p = s.up_type(k);
  std::string_view pf = s.field_at(k);
  bool decl = (one_of(p, {"assignment", "augmented_assignment"}) && pf == "left") ||
              (one_of(p, {"for_statement", "for_in_clause"}) && pf == "left") ||
              (p == "named_expression" && pf == "name") || p == "as_pattern_target" ||
              one_of(p, {"parameters", "lambda_parameters"}) ||
              (one_of(p, {"default_parameter", "typed_default_parameter"}) && pf == "name") ||
              (p == "typed_parameter" && pf.empty());
  if (decl) {
    std::size_t scope = s.nearest({"function_definition", "lambda", "class_definition",
                                   "list_comprehension", "set_comprehension",
                                   "dictionary_comprehension", "generator_expression"});
    // Parameters belong to their function even though the walk reaches them
    // through function_definition; class-body bindings are attributes.
    if (scope < s.depth() && s.up_type(scope) == "class_definition") return block(ExclusionReason::Field);
    return {Role::Declaration};
  }
  if (one_of(text, {"eval", "exec", "globals", "locals", "vars", "__import__"})) st.reflective = true;
  return {Role::Reference};
}

// ---------------------------------------------------------------- C++

inline bool cpp_declarator_wrapper(const Site& s, std::size_t k) {
  std::string_view t = s.up_type(k);
  std::string_view f = s.field_at(k);
  if (one_of(t, {"reference_declarator", "structured_binding_declarator", "parenthesized_declarator"})) return true;
  if (one_of(t, {"pointer_declarator", "array_declarator", "init_declarator", "attributed_declarator"})) {
    return f == "declarator";
  }
  return false;
}

inline Classified classify_cpp(const Site& s, ScanState& st) {
  std::string_view type = s.node().type();
  std::string_view t0 = s.up_type(0);
  std::string_view f = s.field_at(0);
  std::string_view text = s.node().text(st.source);

  if (t0.starts_with("preproc_")) return block(ExclusionReason::Reserved);
  for (std::size_t k = 0; k + 1 < s.depth(); ++k) {
    if (s.field_at(k + 1) == "condition" && s.up_type(k + 1).starts_with("preproc_")) {
      return block(ExclusionReason::Reserved);
    }
  }
  if (type == "statement_identifier") return {Role::Separate};
  if (type == "namespace_identifier") return block(ExclusionReason::Imported);
  if (t0 == "attribute") return block(ExclusionReason::Reserved);

  // Function declarators: name leaves may be identifier, field_identifier or
  // the name of a qualified_identifier.
  auto declarator_owner = [&](std::size_t k) {
    // Climb wrappers above a function_declarator at up(k); return the index of
    // the first non-wrapper ancestor.
    std::size_t j = k + 1;
    while (cpp_declarator_wrapper(s, j)) ++j;
    return j;
  };

  if (type == "field_identifier") {
    if (t0 == "function_declarator" && f == "declarator") {
      st.function_names->emplace(text);
      return block(ExclusionReason::FunctionName, ExclusionReason::Field);
    }
    return block(ExclusionReason::Field);
  }
  if (type == "type_identifier") {
    std::size_t k = 0;
    if (t0 == "type_definition" || one_of(t0, {"pointer_declarator", "array_declarator"})) {
      while (one_of(s.up_type(k), {"pointer_declarator", "array_declarator", "parenthesized_declarator"})) ++k;
    }
    std::string_view p = s.up_type(k);
    std::string_view pf = s.field_at(k);
    bool declares = (one_of(p, {"struct_specifier", "class_specifier", "union_specifier", "enum_specifier",
                                "alias_declaration", "concept_definition"}) &&
                     pf == "name") ||
                    (p == "type_definition" && pf == "declarator") ||
                    one_of(p, {"type_parameter_declaration", "optional_type_parameter_declaration",
                               "variadic_type_parameter_declaration", "template_template_parameter_declaration"});
    return {declares ? Role::TypeDecl : Role::TypeUse};
  }
  if (type != "identifier") return block(ExclusionReason::Reserved);

  if (t0 == "qualified_identifier") {
    if (f == "name" && s.up_type(1) == "function_declarator" && s.field_at(1) == "declarator") {
      st.function_names->emplace(text);
      return block(ExclusionReason::FunctionName, ExclusionReason::Imported);
    }
    return block(ExclusionReason::Imported);
  }
  if (t0 == "using_declaration") return block(ExclusionReason::Imported);
  if (t0 == "enumerator" && f == "name") return block(ExclusionReason::TypeName);
  if (one_of(t0, {"destructor_name", "operator_name", "concept_definition"})) return block(ExclusionReason::TypeName);

  std::size_t k = 0;
  while (cpp_declarator_wrapper(s, k)) ++k;
  std::string_view p = s.up_type(k);
  std::string_view pf = s.field_at(k);
  if (one_of(p, {"declaration", "parameter_declaration", "optional_parameter_declaration",
                 "variadic_parameter_declaration", "for_range_loop"}) &&
      pf == "declarator") {
    return {Role::Declaration};
  }
  if (p == "function_declarator" && pf == "declarator") {
    std::size_t owner = declarator_owner(k);
    // `vector<int> v(n);` inside a body parses as a function declaration but
    // declares a variable.
    if (s.up_type(owner) == "declaration" && s.nearest({"compound_statement"}) < s.depth()) {
      return {Role::Declaration};
    }
    st.function_names->emplace(text);
    return block(ExclusionReason::FunctionName);
  }
  return {Role::Reference};
}

// ---------------------------------------------------------------- Java

inline Classified classify_java(const Site& s, ScanState& st) {
  std::string_view type = s.node().type();
  std::string_view t0 = s.up_type(0);
  std::string_view f = s.field_at(0);
  std::string_view text = s.node().text(st.source);

  if (s.inside("import_declaration") || s.inside("package_declaration")) return block(ExclusionReason::Imported);
  if (type == "type_identifier") return block(ExclusionReason::TypeName);
  if (type != "identifier") return block(ExclusionReason::Reserved);

  if (one_of(t0, {"class_declaration", "interface_declaration", "enum_declaration", "record_declaration",
                  "annotation_type_declaration", "constructor_declaration"}) &&
      f == "name") {
    return block(ExclusionReason::TypeName);
  }
  if (t0 == "enum_constant" && f == "name") return block(ExclusionReason::TypeName);
  if (t0 == "method_declaration" && f == "name") {
    st.function_names->emplace(text);
    return block(ExclusionReason::FunctionName);
  }
  if (t0 == "method_invocation" && f == "name") {
    if (s.up(0).field("object").valid()) return block(ExclusionReason::Field);
    return block(ExclusionReason::FunctionName, ExclusionReason::Builtin);
  }
  if (t0 == "field_access" && f == "field") return block(ExclusionReason::Field);
  if (t0 == "method_reference") {
    Node first = s.up(0).named_child(0);
    if (first.start() != s.node().start()) return block(ExclusionReason::Field);
    return {Role::Reference};
  }
  if (t0 == "scoped_identifier") return block(ExclusionReason::Imported);
  if (one_of(t0, {"labeled_statement", "break_statement", "continue_statement"})) {
    return block(ExclusionReason::Reserved);
  }
  if (one_of(t0, {"marker_annotation", "annotation"})) return block(ExclusionReason::TypeName);
  if (t0 == "element_value_pair") return block(ExclusionReason::Field);

  bool decl = (t0 == "variable_declarator" && f == "name") ||
              (one_of(t0, {"formal_parameter", "catch_formal_parameter", "enhanced_for_statement", "resource"}) &&
               f == "name") ||
              (t0 == "lambda_expression" && f == "parameters") || t0 == "inferred_parameters";
  return {decl ? Role::Declaration : Role::Reference};
}

// ---------------------------------------------------------------- JavaScript

inline Classified classify_javascript(const Site& s, ScanState& st) {
  std::string_view type = s.node().type();
  std::string_view t0 = s.up_type(0);
  std::string_view f = s.field_at(0);
  std::string_view text = s.node().text(st.source);

  if (one_of(type, {"property_identifier", "private_property_identifier"})) {
    if (t0 == "method_definition" && f == "name") st.function_names->emplace(text);
    return {Role::Separate};
  }
  if (type == "statement_identifier") return {Role::Separate};
  if (one_of(type, {"shorthand_property_identifier", "shorthand_property_identifier_pattern"})) {
    return block(ExclusionReason::Field);
  }
  if (type != "identifier") return block(ExclusionReason::Reserved);

  if (s.inside("import_statement") || s.inside("export_clause")) return block(ExclusionReason::Imported);
  if (one_of(t0, {"function_declaration", "generator_function_declaration", "function_expression",
                  "generator_function"}) &&
      f == "name") {
    st.function_names->emplace(text);
    return block(ExclusionReason::FunctionName);
  }
  if (one_of(t0, {"class_declaration", "class"}) && f == "name") return block(ExclusionReason::TypeName);

  std::size_t k = 0;
  for (;;) {
    std::string_view t = s.up_type(k);
    std::string_view tf = s.field_at(k);
    if (one_of(t, {"array_pattern", "object_pattern", "rest_pattern"}) ||
        (t == "pair_pattern" && tf == "value") ||
        (one_of(t, {"assignment_pattern", "object_assignment_pattern"}) && tf == "left")) {
      ++k;
      continue;
    }
    break;
  }
  std::string_view p = s.up_type(k);
  std::string_view pf = s.field_at(k);
  bool decl = (p == "variable_declarator" && pf == "name") || p == "formal_parameters" ||
              (p == "arrow_function" && pf == "parameter") || (p == "catch_clause" && pf == "parameter") ||
              (p == "for_in_statement" && pf == "left" && s.up(k).field("kind").valid());
  if (decl) return {Role::Declaration};
  if (one_of(text, {"eval", "Function"})) st.reflective = true;
  if (s.inside("with_statement")) st.reflective = true;
  return {Role::Reference};
}

// ---------------------------------------------------------------- Go

inline Classified classify_go(const Site& s, ScanState& st) {
  std::string_view type = s.node().type();
  std::string_view t0 = s.up_type(0);
  std::string_view f = s.field_at(0);
  std::string_view text = s.node().text(st.source);

  if (type == "label_name") return {Role::Separate};
  if (type == "package_identifier") return block(ExclusionReason::Imported);
  if (type == "field_identifier") {
    if (t0 == "method_declaration" && f == "name") {
      st.function_names->emplace(text);
      return block(ExclusionReason::FunctionName, ExclusionReason::Field);
    }
    if (t0 == "literal_element") return block(ExclusionReason::Field);
    return block(ExclusionReason::Field);
  }
  if (type == "type_identifier") return block(ExclusionReason::TypeName);
  if (type != "identifier") return block(ExclusionReason::Reserved);

  if (t0 == "function_declaration" && f == "name") {
    st.function_names->emplace(text);
    return block(ExclusionReason::FunctionName);
  }
  if (t0 == "type_parameter_declaration") return block(ExclusionReason::TypeName);
  // Struct literal keys name fields; map literal keys are expressions. Either
  // way the key cannot be renamed independently of the type.
  if (t0 == "literal_element" && s.up_type(1) == "keyed_element" && s.field_at(1) == "key") {
    return block(ExclusionReason::Field);
  }
  if (t0 == "keyed_element" && f == "key") return block(ExclusionReason::Field);

  bool decl = (one_of(t0, {"var_spec", "const_spec", "parameter_declaration", "variadic_parameter_declaration"}) &&
               f == "name") ||
              (t0 == "expression_list" &&
               one_of(s.up_type(1), {"short_var_declaration", "range_clause", "receive_statement"}) &&
               s.field_at(1) == "left") ||
              (t0 == "expression_list" && s.up_type(1) == "type_switch_statement" && s.field_at(1) == "alias") ||
              (one_of(t0, {"range_clause", "type_switch_statement"}) && one_of(f, {"left", "alias"}));
  return {decl ? Role::Declaration : Role::Reference};
}

inline bool is_name_token(Language lang, Node n) {
  if (!n.named() || n.child_count() != 0) return false;
  std::string_view t = n.type();
  if (lang == Language::Go && t == "label_name") return true;
  if (t == "identifier") return true;
  return t.ends_with("_identifier") && t != "system_lib_string";
}

struct Facts {
  bool declared = false;
  bool type_declared = false;
  bool separate = false;
  unsigned reasons = 0;
  std::vector<ByteRange> occurrences;
  std::vector<ByteRange> type_uses;
};

inline void add_macro_words(std::string_view text, std::map<std::string, Facts, std::less<>>& facts,
                            std::set<std::string, std::less<>>& all) {
  auto word_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (!word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word_char(text[j])) ++j;
    std::string w(text.substr(i, j - i));
    if (!(w[0] >= '0' && w[0] <= '9')) {
      facts[w].reasons |= bit(ExclusionReason::Reserved);
      all.insert(w);
    }
    i = j;
  }
}

}  // namespace detail

/// One pass over a parsed tree. See collect_renameable_identifiers for the
/// contract; callers that already hold a tree use this directly.
inline IdentifierAnalysis analyze_identifiers(const SyntaxTree& tree) {
  using detail::Role;
  IdentifierAnalysis out;
  const Language lang = tree.language();
  const std::string& src = tree.source();
  std::map<std::string, detail::Facts, std::less<>> facts;
  detail::ScanState st{src, &out.function_names};

  walk(tree.root(), [&](Node node, std::string_view field, const std::vector<WalkFrame>& anc) {
    if (lang == Language::Cpp && node.type() == "preproc_arg") {
      detail::add_macro_words(node.text(src), facts, out.all_names);
      return;
    }
    if (!detail::is_name_token(lang, node)) return;
    detail::Site site(node, field, anc);
    detail::Classified c;
    switch (lang) {
      case Language::Python: c = detail::classify_python(site, st); break;
      case Language::Cpp: c = detail::classify_cpp(site, st); break;
      case Language::Java: c = detail::classify_java(site, st); break;
      case Language::JavaScript: c = detail::classify_javascript(site, st); break;
      case Language::Go: c = detail::classify_go(site, st); break;
    }
    std::string name(node.text(src));
    out.all_names.insert(name);
    detail::Facts& fx = facts[name];
    ByteRange r{node.start(), node.end()};
    switch (c.role) {
      case Role::Declaration:
        fx.declared = true;
        fx.occurrences.push_back(r);
        break;
      case Role::Reference: fx.occurrences.push_back(r); break;
      case Role::Separate: fx.separate = true; break;
      case Role::Block: fx.reasons |= c.reasons; break;
      case Role::TypeDecl:
        fx.type_declared = true;
        fx.reasons |= detail::bit(ExclusionReason::TypeName);
        break;
      case Role::TypeUse: fx.type_uses.push_back(r); break;
    }
  });

  const LanguageProfile& prof = profile(lang);
  for (auto& [name, fx] : facts) {
    unsigned reasons = fx.reasons;
    if (prof.is_reserved(name)) reasons |= detail::bit(ExclusionReason::Reserved);
    if (prof.is_builtin(name)) reasons |= detail::bit(ExclusionReason::Builtin);
    if (st.reflective) reasons |= detail::bit(ExclusionReason::Builtin);
    if (!fx.type_uses.empty()) {
      // A C++ name seen in type position is a variable only when the file
      // declares it as one and never as a type (vexing-parse arguments and
      // template value arguments).
      if (fx.declared && !fx.type_declared) {
        fx.occurrences.insert(fx.occurrences.end(), fx.type_uses.begin(), fx.type_uses.end());
      } else {
        reasons |= detail::bit(ExclusionReason::TypeName);
      }
    }
    if (!fx.declared) {
      if (!fx.occurrences.empty() || !fx.type_uses.empty()) reasons |= detail::bit(ExclusionReason::Builtin);
      else if (fx.separate) reasons |= detail::bit(ExclusionReason::Field);
    }
    if (reasons == 0) {
      std::sort(fx.occurrences.begin(), fx.occurrences.end());
      fx.occurrences.erase(std::unique(fx.occurrences.begin(), fx.occurrences.end()), fx.occurrences.end());
      out.identifiers.renameable.push_back({name, std::move(fx.occurrences)});
      continue;
    }
    if (!out.function_names.count(name)) reasons &= ~detail::bit(ExclusionReason::FunctionName);
    static constexpr ExclusionReason kPriority[] = {ExclusionReason::Reserved, ExclusionReason::FunctionName,
                                                    ExclusionReason::TypeName, ExclusionReason::Imported,
                                                    ExclusionReason::Field, ExclusionReason::Builtin};
    ExclusionReason chosen = ExclusionReason::Builtin;
    for (ExclusionReason r : kPriority) {
      if (reasons & detail::bit(r)) {
        chosen = r;
        break;
      }
    }
    out.identifiers.excluded.push_back({name, chosen});
  }
  return out;
}

/// Renameable = declared in this file (variables at any scope, loop
/// variables, parameters) and never seen in a position the analysis cannot
/// rename consistently. Everything else is excluded with the strongest
/// applicable reason. Throws ParseError.
inline IdentifierSet collect_renameable_identifiers(std::string_view source, Language lang) {
  return analyze_identifiers(parse(source, lang)).identifiers;
}

inline std::set<std::string, std::less<>> function_names(std::string_view source, Language lang) {
  return analyze_identifiers(parse(source, lang)).function_names;
}

}  // namespace biasforge::syntax

#endif  // BIASFORGE_SYNTAX_IDENTIFIERS_HPP
