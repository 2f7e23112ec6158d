#ifndef BIASFORGE_TRANSFORMS_TYPES_HPP
#define BIASFORGE_TRANSFORMS_TYPES_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biasforge/corpus.hpp"
#include "biasforge/error.hpp"
#include "biasforge/io.hpp"
#include "biasforge/language.hpp"

namespace biasforge::transforms {

enum class BiasTag { Authority, SelfDeclared, VariableRename, ReverseAuthority, MisleadingTask, IllusoryComplexity };

/// Report column order.
inline constexpr BiasTag kAllBiasTags[] = {BiasTag::Authority,        BiasTag::SelfDeclared,
                                           BiasTag::VariableRename,   BiasTag::ReverseAuthority,
                                           BiasTag::MisleadingTask,   BiasTag::IllusoryComplexity};

inline constexpr std::size_t kDefaultRenameLength = 24;
inline constexpr std::size_t kDefaultDummyCount = 1;

/// One bias with its parameter: the rename length or the dummy count.
struct BiasKind {
  BiasTag tag = BiasTag::SelfDeclared;
  std::size_t param = 0;

  static BiasKind authority() { return {BiasTag::Authority, 0}; }
  static BiasKind reverse_authority() { return {BiasTag::ReverseAuthority, 0}; }
  static BiasKind self_declared() { return {BiasTag::SelfDeclared, 0}; }
  static BiasKind misleading_task() { return {BiasTag::MisleadingTask, 0}; }
  static BiasKind variable_rename(std::size_t length = kDefaultRenameLength) {
    if (length < 1) throw Error(ErrorCode::ConfigError, "rename length must be >= 1");
    return {BiasTag::VariableRename, length};
  }
  static BiasKind illusory_complexity(std::size_t count = kDefaultDummyCount) {
    return {BiasTag::IllusoryComplexity, count};
  }

  [[nodiscard]] bool has_param() const {
    return tag == BiasTag::VariableRename || tag == BiasTag::IllusoryComplexity;
  }
  [[nodiscard]] bool code_based() const { return tag != BiasTag::MisleadingTask; }
  [[nodiscard]] bool comment_based() const {
    return tag == BiasTag::Authority || tag == BiasTag::ReverseAuthority || tag == BiasTag::SelfDeclared ||
           tag == BiasTag::MisleadingTask;
  }

  friend bool operator==(const BiasKind&, const BiasKind&) = default;
  friend auto operator<=>(const BiasKind& a, const BiasKind& b) {
    auto rank = [](BiasTag t) {
      for (std::size_t i = 0; i < std::size(kAllBiasTags); ++i) {
        if (kAllBiasTags[i] == t) return i;
      }
      return std::size(kAllBiasTags);
    };
    if (auto c = rank(a.tag) <=> rank(b.tag); c != 0) return c;
    return a.param <=> b.param;
  }
};

inline std::string_view tag_name(BiasTag t) {
  switch (t) {
    case BiasTag::Authority: return "authority";
    case BiasTag::ReverseAuthority: return "reverse_authority";
    case BiasTag::SelfDeclared: return "self_declared";
    case BiasTag::MisleadingTask: return "misleading_task";
    case BiasTag::VariableRename: return "variable_rename";
    case BiasTag::IllusoryComplexity: return "illusory_complexity";
  }
  return "?";
}

inline std::string_view display_name(BiasTag t) {
  switch (t) {
    case BiasTag::Authority: return "Authority";
    case BiasTag::ReverseAuthority: return "Reverse Authority";
    case BiasTag::SelfDeclared: return "Self-declared";
    case BiasTag::MisleadingTask: return "Misleading Task";
    case BiasTag::VariableRename: return "Variable Rename";
    case BiasTag::IllusoryComplexity: return "Illusory Complexity";
  }
  return "?";
}

/// Wire form: `self_declared`, `variable_rename:24`, `illusory_complexity:1`.
inline std::string to_string(const BiasKind& b) {
  std::string out(tag_name(b.tag));
  if (b.has_param()) out += ":" + std::to_string(b.param);
  return out;
}

inline BiasKind parse_bias(std::string_view text) {
  std::string_view head = text;
  std::optional<std::size_t> param;
  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    head = text.substr(0, colon);
    std::string digits(text.substr(colon + 1));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::ConfigError, "bad bias parameter in '" + std::string(text) + "'");
    }
    param = std::stoull(digits);
  }
  for (BiasTag t : kAllBiasTags) {
    if (tag_name(t) != head) continue;
    BiasKind b{t, 0};
    if (t == BiasTag::VariableRename) return BiasKind::variable_rename(param.value_or(kDefaultRenameLength));
    if (t == BiasTag::IllusoryComplexity) return BiasKind::illusory_complexity(param.value_or(kDefaultDummyCount));
    if (param) throw Error(ErrorCode::ConfigError, "bias '" + std::string(head) + "' takes no parameter");
    return b;
  }
  throw Error(ErrorCode::ConfigError, "unknown bias '" + std::string(text) + "'");
}

/// Column label; parameters appear only when they differ from the defaults.
inline std::string display_name(const BiasKind& b) {
  std::string out(display_name(b.tag));
  if ((b.tag == BiasTag::VariableRename && b.param != kDefaultRenameLength) ||
      (b.tag == BiasTag::IllusoryComplexity && b.param != kDefaultDummyCount)) {
    out += " (" + std::to_string(b.param) + ")";
  }
  return out;
}

struct RenameMap {
  std::vector<std::pair<std::string, std::string>> entries;  // original -> generated, by original
  std::size_t length = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const RenameMap&, const RenameMap&) = default;
};

struct DummyFunction {
  std::string id;
  Language language = Language::Cpp;
  std::string name;
  std::string source;
  std::string description;
};

enum class TemplateKind { Authority, ReverseAuthority };

struct CommentTemplate {
  std::string id;
  TemplateKind kind = TemplateKind::Authority;
  std::string text;
  std::string origin;  // e.g. "default-original"; copied into provenance
};

enum class ValidationState { Unvalidated, Validated, Flagged };

inline std::string_view to_string(ValidationState s) {
  switch (s) {
    case ValidationState::Unvalidated: return "unvalidated";
    case ValidationState::Validated: return "validated";
    case ValidationState::Flagged: return "flagged";
  }
  return "?";
}

inline ValidationState parse_validation_state(std::string_view s) {
  if (s == "validated") return ValidationState::Validated;
  if (s == "flagged") return ValidationState::Flagged;
  if (s == "unvalidated") return ValidationState::Unvalidated;
  throw Error(ErrorCode::MalformedRecord, "unknown validation state '" + std::string(s) + "'");
}

/// Where a dummy block went, so it can be removed exactly.
struct InsertedBlock {
  std::uint32_t offset = 0;
  std::uint32_t length = 0;
  friend bool operator==(const InsertedBlock&, const InsertedBlock&) = default;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::optional<std::size_t> template_index;
  std::optional<std::string> template_id;
  std::optional<std::string> template_origin;
  std::optional<RenameMap> rename_map;
  std::optional<std::vector<std::string>> dummy_function_ids;
  std::optional<std::vector<std::string>> dummy_names;  // after freshening
  std::optional<InsertedBlock> inserted_block;
  std::optional<std::vector<std::size_t>> inserted_lines;  // 0-based lines of the variant
  std::optional<std::string> generator_model;
  std::optional<std::size_t> attempts;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct BiasVariant {
  std::string variant_id;
  std::string base_sample_id;
  std::string problem_id;
  Language language = Language::Cpp;
  Label label = Label::Correct;
  BiasKind bias;
  std::string source;
  Provenance provenance;
  ValidationState validation_state = ValidationState::Unvalidated;
  std::string flag_reason;  // set when Flagged
  friend bool operator==(const BiasVariant&, const BiasVariant&) = default;
};

inline std::string variant_id_for(const std::string& sample_id, const BiasKind& bias) {
  return sample_id + "~" + to_string(bias);
}

// ------------------------------------------------------------------ JSON

inline nlohmann::json to_json(const RenameMap& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [from, to] : m.entries) entries.push_back({from, to});
  return {{"entries", entries}, {"length", m.length}, {"seed", m.seed}};
}

inline RenameMap rename_map_from_json(const nlohmann::json& j) {
  RenameMap m;
  for (const auto& e : j.at("entries")) m.entries.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  m.length = j.at("length").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

inline nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j = {{"seed", p.seed}};
  if (p.template_index) j["template_index"] = *p.template_index;
  if (p.template_id) j["template_id"] = *p.template_id;
  if (p.template_origin) j["template_origin"] = *p.template_origin;
  if (p.rename_map) j["rename_map"] = to_json(*p.rename_map);
  if (p.dummy_function_ids) j["dummy_function_ids"] = *p.dummy_function_ids;
  if (p.dummy_names) j["dummy_names"] = *p.dummy_names;
  if (p.inserted_block) j["inserted_block"] = {{"offset", p.inserted_block->offset}, {"length", p.inserted_block->length}};
  if (p.inserted_lines) j["inserted_lines"] = *p.inserted_lines;
  if (p.generator_model) j["generator_model"] = *p.generator_model;
  if (p.attempts) j["attempts"] = *p.attempts;
  return j;
}

inline Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  p.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("template_index")) p.template_index = j["template_index"].get<std::size_t>();
  if (j.contains("template_id")) p.template_id = j["template_id"].get<std::string>();
  if (j.contains("template_origin")) p.template_origin = j["template_origin"].get<std::string>();
  if (j.contains("rename_map")) p.rename_map = rename_map_from_json(j["rename_map"]);
  if (j.contains("dummy_function_ids")) p.dummy_function_ids = j["dummy_function_ids"].get<std::vector<std::string>>();
  if (j.contains("dummy_names")) p.dummy_names = j["dummy_names"].get<std::vector<std::string>>();
  if (j.contains("inserted_block")) {
    p.inserted_block = InsertedBlock{j["inserted_block"].at("offset").get<std::uint32_t>(),
                                     j["inserted_block"].at("length").get<std::uint32_t>()};
  }
  if (j.contains("inserted_lines")) p.inserted_lines = j["inserted_lines"].get<std::vector<std::size_t>>();
  if (j.contains("generator_model")) p.generator_model = j["generator_model"].get<std::string>();
  if (j.contains("attempts")) p.attempts = j["attempts"].get<std::size_t>();
  return p;
}

inline nlohmann::json to_json(const BiasVariant& v) {
  nlohmann::json j = {{"variant_id", v.variant_id},
                      {"base_sample_id", v.base_sample_id},
                      {"problem_id", v.problem_id},
                      {"language", to_string(v.language)},
                      {"label", to_string(v.label)},
                      {"bias", to_string(v.bias)},
                      {"source", v.source},
                      {"provenance", to_json(v.provenance)},
                      {"validation_state", to_string(v.validation_state)}};
  if (!v.flag_reason.empty()) j["flag_reason"] = v.flag_reason;
  return j;
}

inline BiasVariant variant_from_json(const nlohmann::json& j) {
  BiasVariant v;
  v.variant_id = j.at("variant_id").get<std::string>();
  v.base_sample_id = j.at("base_sample_id").get<std::string>();
  v.problem_id = j.at("problem_id").get<std::string>();
  v.language = parse_language(j.at("language").get<std::string>());
  auto label = try_parse_label(j.at("label").get<std::string>());
  if (!label) throw Error(ErrorCode::MalformedRecord, "bad label in variant " + v.variant_id);
  v.label = *label;
  v.bias = parse_bias(j.at("bias").get<std::string>());
  v.source = j.at("source").get<std::string>();
  v.provenance = provenance_from_json(j.at("provenance"));
  v.validation_state = parse_validation_state(j.at("validation_state").get<std::string>());
  if (j.contains("flag_reason")) v.flag_reason = j["flag_reason"].get<std::string>();
  return v;
}

inline std::string serialize_variants(const std::vector<BiasVariant>& variants) {
  std::string out;
  for (const auto& v : variants) out += to_json(v).dump() + "\n";
  return out;
}

inline std::vector<BiasVariant> parse_variants(std::string_view text) {
  std::vector<BiasVariant> out;
  io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) return;
    try {
      out.push_back(variant_from_json(nlohmann::json::parse(raw)));
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(ErrorCode::MalformedRecord, line, e.what());
    }
  });
  return out;
}

// ------------------------------------------------------------------ data files

inline std::vector<CommentTemplate> parse_templates(std::string_view text) {
  std::vector<CommentTemplate> out;
  io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) return;
    try {
      auto j = nlohmann::json::parse(raw);
      CommentTemplate t;
      t.id = j.at("id").get<std::string>();
      std::string kind = j.at("kind").get<std::string>();
      if (kind == "authority") t.kind = TemplateKind::Authority;
      else if (kind == "reverse_authority") t.kind = TemplateKind::ReverseAuthority;
      else throw RecordError(ErrorCode::MalformedRecord, line, "unknown template kind '" + kind + "'");
      t.text = j.at("text").get<std::string>();
      t.origin = j.value("origin", std::string("user"));
      if (t.text.find_first_of("\r\n") != std::string::npos) {
        throw RecordError(ErrorCode::MalformedRecord, line, "template text must be a single line");
      }
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(ErrorCode::MalformedRecord, line, e.what());
    }
  });
  return out;
}

inline std::vector<DummyFunction> parse_dummy_pool(std::string_view text) {
  std::vector<DummyFunction> out;
  io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) return;
    try {
      auto j = nlohmann::json::parse(raw);
      DummyFunction d;
      d.id = j.at("id").get<std::string>();
      auto lang = try_parse_language(j.at("language").get<std::string>());
      if (!lang) throw RecordError(ErrorCode::UnsupportedLanguage, line, "unsupported language");
      d.language = *lang;
      d.name = j.at("name").get<std::string>();
      d.source = j.at("source").get<std::string>();
      d.description = j.value("description", std::string());
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(ErrorCode::MalformedRecord, line, e.what());
    }
  });
  return out;
}

}  // namespace biasforge::transforms

#endif  // BIASFORGE_TRANSFORMS_TYPES_HPP
