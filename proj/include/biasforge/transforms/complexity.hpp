#ifndef BIASFORGE_TRANSFORMS_COMPLEXITY_HPP
#define BIASFORGE_TRANSFORMS_COMPLEXITY_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/corpus.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/syntax/identifiers.hpp"
#include "biasforge/syntax/insertion.hpp"
#include "biasforge/transforms/comment_biases.hpp"
#include "biasforge/transforms/rename.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::transforms {

namespace detail {

inline std::string_view trim_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && s.front() == '\n') s.remove_prefix(1);
  return s;
}

inline std::string indent_lines(std::string_view text, std::string_view indent) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty()) out.append(indent).append(line);
    if (nl == std::string_view::npos) break;
    out.push_back('\n');
    pos = nl + 1;
  }
  return out;
}

/// The text inserted at the insertion point for the given dummy sources.
inline std::string dummy_block(Language lang, std::uint32_t offset, const std::vector<std::string>& dummies) {
  std::string block;
  switch (lang) {
    case Language::Java:
      for (const auto& d : dummies) block += "\n" + indent_lines(trim_newlines(d), "    ");
      block += "\n";
      break;
    case Language::Go:
      for (const auto& d : dummies) block += "\n" + std::string(trim_newlines(d)) + "\n";
      break;
    default:
      if (offset > 0) block += "\n";
      for (const auto& d : dummies) block += std::string(trim_newlines(d)) + "\n\n";
      break;
  }
  return block;
}

/// Occurrences of `word` as a whole word in `text`.
inline std::vector<std::size_t> word_positions(std::string_view text, std::string_view word) {
  std::vector<std::size_t> out;
  for (std::size_t at = text.find(word); at != std::string_view::npos; at = text.find(word, at + 1)) {
    bool left = at == 0 || !is_word_byte(text[at - 1]);
    bool right = at + word.size() >= text.size() || !is_word_byte(text[at + word.size()]);
    if (left && right) out.push_back(at);
  }
  return out;
}

}  // namespace detail

/// Why the inserted block at [offset, offset+length) is not isolated from the
/// original code, if it is not: an inserted name used outside the block, or a
/// renameable original identifier whose occurrences moved or changed
/// classification.
inline std::optional<std::string> check_reference_isolation(std::string_view original, std::string_view variant,
                                                            Language lang, InsertedBlock block,
                                                            const std::vector<std::string>& inserted_names) {
  const std::size_t b = block.offset, e = block.offset + block.length;
  for (const auto& name : inserted_names) {
    for (std::size_t at : detail::word_positions(variant, name)) {
      if (at < b || at >= e) return "inserted function '" + name + "' is referenced outside its definition";
    }
  }
  auto before = syntax::collect_renameable_identifiers(original, lang);
  auto after = syntax::collect_renameable_identifiers(variant, lang);
  for (const auto& r : before.renameable) {
    const auto* moved = after.find_renameable(r.name);
    if (!moved) return "identifier '" + r.name + "' is no longer renameable after insertion";
    std::vector<syntax::ByteRange> outside;
    for (const auto& occ : moved->occurrences) {
      if (occ.begin >= b && occ.begin < e) continue;
      syntax::ByteRange shifted = occ;
      if (occ.begin >= e) {
        shifted.begin -= block.length;
        shifted.end -= block.length;
      }
      outside.push_back(shifted);
    }
    if (outside != r.occurrences) return "occurrences of '" + r.name + "' changed after insertion";
  }
  return std::nullopt;
}

/// Inserts `count` distinct dummy functions from the pool, chosen under
/// `seed`, at the language's function insertion point. A dummy whose name is
/// already a word of the source (or of an earlier dummy) gets the first free
/// name among name2, name3, ... renamed throughout its own body.
/// Throws PoolTooSmall, ParseError, IntegrityError (isolation check failed).
inline BiasVariant inject_illusory_complexity(const corpus::CodeSample& sample, const std::vector<DummyFunction>& pool,
                                              std::size_t count, std::uint64_t seed) {
  const BiasKind bias = BiasKind::illusory_complexity(count);
  syntax::SyntaxTree tree = syntax::parse(sample.source, sample.language);
  if (count == 0) {
    BiasVariant v = variant_of(sample, bias, sample.source, seed);
    v.provenance.dummy_function_ids = std::vector<std::string>{};
    v.provenance.dummy_names = std::vector<std::string>{};
    v.provenance.inserted_block = InsertedBlock{0, 0};
    return v;
  }

  std::vector<const DummyFunction*> candidates;
  for (const auto& d : pool) {
    if (d.language == sample.language) candidates.push_back(&d);
  }
  if (candidates.size() < count) {
    throw Error(ErrorCode::PoolTooSmall, std::to_string(count) + " dummy functions requested, pool has " +
                                             std::to_string(candidates.size()) + " for " +
                                             std::string(to_string(sample.language)));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const DummyFunction* a, const DummyFunction* b) { return a->id < b->id; });
  SeededRng rng(seed);
  rng.shuffle(candidates);
  candidates.resize(count);

  syntax::IdentifierAnalysis analysis = syntax::analyze_identifiers(tree);
  std::set<std::string, std::less<>> taken = words_of(sample.source);
  taken.insert(analysis.all_names.begin(), analysis.all_names.end());
  taken.insert(analysis.function_names.begin(), analysis.function_names.end());
  const auto& prof = syntax::profile(sample.language);
  taken.insert(prof.reserved_words.begin(), prof.reserved_words.end());
  taken.insert(prof.builtins.begin(), prof.builtins.end());

  std::vector<std::string> ids, names, sources;
  for (const DummyFunction* d : candidates) {
    std::string name = d->name;
    for (int suffix = 2; taken.count(name); ++suffix) name = d->name + std::to_string(suffix);
    taken.insert(name);
    ids.push_back(d->id);
    names.push_back(name);
    sources.push_back(name == d->name ? d->source : replace_words(d->source, {{d->name, name}}));
  }

  const std::uint32_t offset = syntax::insertion_point(tree, syntax::InsertionKind::Function);
  std::string block = detail::dummy_block(sample.language, offset, sources);
  std::string out = sample.source.substr(0, offset) + block + sample.source.substr(offset);
  InsertedBlock where{offset, static_cast<std::uint32_t>(block.size())};

  syntax::parse(out, sample.language);
  if (auto problem = check_reference_isolation(sample.source, out, sample.language, where, names)) {
    throw Error(ErrorCode::IntegrityError, "dummy insertion into " + sample.sample_id + ": " + *problem);
  }

  BiasVariant v = variant_of(sample, bias, std::move(out), seed);
  v.provenance.dummy_function_ids = std::move(ids);
  v.provenance.dummy_names = std::move(names);
  v.provenance.inserted_block = where;
  return v;
}

/// Removes the inserted dummy block recorded in provenance.
inline std::string remove_inserted_block(std::string_view variant_source, InsertedBlock block) {
  std::string out(variant_source.substr(0, block.offset));
  out.append(variant_source.substr(block.offset + block.length));
  return out;
}

}  // namespace biasforge::transforms

#endif  // BIASFORGE_TRANSFORMS_COMPLEXITY_HPP
