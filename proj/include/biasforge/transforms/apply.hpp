#ifndef BIASFORGE_TRANSFORMS_APPLY_HPP
#define BIASFORGE_TRANSFORMS_APPLY_HPP

#include <memory>
#include <string>
#include <vector>

#include "biasforge/corpus.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/transforms/comment_biases.hpp"
#include "biasforge/transforms/complexity.hpp"
#include "biasforge/transforms/misleading.hpp"
#include "biasforge/transforms/rename.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::transforms {

/// Everything the individual injections may need.
struct TransformConfig {
  std::vector<CommentTemplate> templates;  // both kinds; filtered per bias
  std::vector<DummyFunction> dummy_pool;
  std::shared_ptr<TextGenerator> generator;
  std::size_t max_attempts = kDefaultMaxAttempts;
  std::string misleading_prompt = std::string(kDefaultMisleadingPrompt);
};

inline std::vector<CommentTemplate> templates_of_kind(const std::vector<CommentTemplate>& all, TemplateKind kind) {
  std::vector<CommentTemplate> out;
  for (const auto& t : all) {
    if (t.kind == kind) out.push_back(t);
  }
  return out;
}

/// Dispatches to the injection for `bias`, seeding it with `seed` as given.
inline BiasVariant apply(const corpus::CodeSample& sample, const BiasKind& bias, const TransformConfig& config,
                         std::uint64_t seed) {
  switch (bias.tag) {
    case BiasTag::SelfDeclared: return inject_self_declared(sample);
    case BiasTag::Authority:
      return inject_authority(sample, templates_of_kind(config.templates, TemplateKind::Authority), seed);
    case BiasTag::ReverseAuthority:
      return inject_reverse_authority(sample, templates_of_kind(config.templates, TemplateKind::ReverseAuthority),
                                      seed);
    case BiasTag::VariableRename: return rename_variables(sample, bias.param, seed);
    case BiasTag::IllusoryComplexity: return inject_illusory_complexity(sample, config.dummy_pool, bias.param, seed);
    case BiasTag::MisleadingTask:
      return inject_misleading_task(sample, config.generator.get(), config.max_attempts, seed,
                                    config.misleading_prompt);
  }
  throw Error(ErrorCode::ConfigError, "unhandled bias " + to_string(bias));
}

/// The seed a run uses for one (sample, bias) item, so results do not depend
/// on processing order.
inline std::uint64_t item_seed(std::uint64_t run_seed, const std::string& sample_id, const BiasKind& bias) {
  return derive_seed(run_seed, {"inject", sample_id, to_string(bias)});
}

/// Reconstructs the original source from a variant using its provenance.
/// Returns nullopt for flagged variants, whose source is not a valid variant.
inline std::optional<std::string> invert_variant(const BiasVariant& v) {
  if (v.validation_state == ValidationState::Flagged) return std::nullopt;
  const Provenance& p = v.provenance;
  switch (v.bias.tag) {
    case BiasTag::SelfDeclared:
    case BiasTag::Authority:
    case BiasTag::ReverseAuthority:
    case BiasTag::MisleadingTask:
      if (!p.inserted_lines) return std::nullopt;
      return remove_lines(v.source, *p.inserted_lines);
    case BiasTag::VariableRename:
      if (!p.rename_map) return std::nullopt;
      return invert_rename(v.source, *p.rename_map);
    case BiasTag::IllusoryComplexity:
      if (!p.inserted_block) return std::nullopt;
      return remove_inserted_block(v.source, *p.inserted_block);
  }
  return std::nullopt;
}

}  // namespace biasforge::transforms

#endif  // BIASFORGE_TRANSFORMS_APPLY_HPP
