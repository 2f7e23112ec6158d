#ifndef BIASFORGE_TRANSFORMS_RENAME_HPP
#define BIASFORGE_TRANSFORMS_RENAME_HPP

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/corpus.hpp"
#include "biasforge/rng.hpp"
#include "biasforge/syntax/identifiers.hpp"
#include "biasforge/transforms/comment_biases.hpp"
#include "biasforge/transforms/types.hpp"

namespace biasforge::transforms {

inline constexpr std::string_view kNameAlphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// The lengths swept when studying name length.
inline const std::vector<std::size_t>& rename_sweep_lengths() {
  static const std::vector<std::size_t> lengths = {1, 2, 8, 12, 16, 24, 48};
  return lengths;
}

inline bool is_word_byte(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

/// Every maximal run of word bytes in `text`, identifiers or not.
inline std::set<std::string, std::less<>> words_of(std::string_view text) {
  std::set<std::string, std::less<>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(text[j])) ++j;
    out.emplace(text.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Replaces whole-word occurrences according to `mapping` (word -> word).
inline std::string replace_words(std::string_view text,
                                 const std::vector<std::pair<std::string, std::string>>& mapping) {
  std::map<std::string_view, std::string_view> lookup;
  for (const auto& [from, to] : mapping) lookup.emplace(from, to);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    auto it = lookup.find(word);
    out.append(it == lookup.end() ? word : it->second);
    i = j;
  }
  return out;
}

/// `count` distinct alphabetic names of `length` characters, none in
/// `forbidden`. Short lengths enumerate the whole space so exhaustion is
/// detected exactly; longer ones use rejection sampling.
inline std::vector<std::string> generate_names(std::size_t count, std::size_t length,
                                               const std::set<std::string, std::less<>>& forbidden,
                                               SeededRng& rng) {
  if (length < 1) throw Error(ErrorCode::ConfigError, "rename length must be >= 1");
  std::vector<std::string> out;
  if (count == 0) return out;
  if (length <= 2) {
    std::vector<std::string> space;
    for (char a : kNameAlphabet) {
      if (length == 1) {
        space.emplace_back(1, a);
        continue;
      }
      for (char b : kNameAlphabet) space.push_back(std::string{a, b});
    }
    std::erase_if(space, [&](const std::string& s) { return forbidden.count(s) > 0; });
    if (space.size() < count) {
      throw Error(ErrorCode::NameSpaceExhausted,
                  std::to_string(count) + " identifiers need renaming but only " + std::to_string(space.size()) +
                      " free names of length " + std::to_string(length) + " exist; raise the length");
    }
    rng.shuffle(space);
    space.resize(count);
    return space;
  }
  std::set<std::string, std::less<>> used;
  while (out.size() < count) {
    std::string name(length, 'a');
    for (char& c : name) c = kNameAlphabet[rng.below(kNameAlphabet.size())];
    if (forbidden.count(name) || used.count(name)) continue;
    used.insert(name);
    out.push_back(std::move(name));
  }
  return out;
}

/// Renames every renameable identifier (see syntax::collect_renameable_identifiers)
/// to a fresh alphabetic name of exactly `length` characters. Generated names
/// avoid every word already in the source, the language's reserved words and
/// builtins, and each other. Either all identifiers are renamed or the call
/// throws (NameSpaceExhausted, ParseError, ConfigError).
inline BiasVariant rename_variables(const corpus::CodeSample& sample, std::size_t length, std::uint64_t seed) {
  const BiasKind bias = BiasKind::variable_rename(length);
  syntax::SyntaxTree tree = syntax::parse(sample.source, sample.language);
  syntax::IdentifierAnalysis analysis = syntax::analyze_identifiers(tree);
  const auto& prof = syntax::profile(sample.language);

  std::set<std::string, std::less<>> forbidden = words_of(sample.source);
  forbidden.insert(analysis.all_names.begin(), analysis.all_names.end());
  forbidden.insert(prof.reserved_words.begin(), prof.reserved_words.end());
  forbidden.insert(prof.builtins.begin(), prof.builtins.end());

  const auto& names = analysis.identifiers.renameable;
  SeededRng rng(seed);
  std::vector<std::string> fresh = generate_names(names.size(), length, forbidden, rng);

  RenameMap map;
  map.length = length;
  map.seed = seed;
  struct Edit {
    syntax::ByteRange at;
    const std::string* text;
  };
  std::vector<Edit> edits;
  for (std::size_t i = 0; i < names.size(); ++i) {
    map.entries.emplace_back(names[i].name, fresh[i]);
    for (const auto& r : names[i].occurrences) edits.push_back({r, &fresh[i]});
  }
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.at.begin < b.at.begin; });

  std::string out;
  out.reserve(sample.source.size() + edits.size() * length);
  std::uint32_t pos = 0;
  for (const auto& e : edits) {
    out.append(sample.source, pos, e.at.begin - pos);
    out.append(*e.text);
    pos = e.at.end;
  }
  out.append(sample.source, pos, std::string::npos);

  BiasVariant v = variant_of(sample, bias, std::move(out), seed);
  v.provenance.rename_map = std::move(map);
  return v;
}

/// Undoes a rename by whole-word replacement of each generated name. Exact
/// because generated names never occur in the original text.
inline std::string invert_rename(std::string_view variant_source, const RenameMap& map) {
  std::vector<std::pair<std::string, std::string>> inverse;
  inverse.reserve(map.entries.size());
  for (const auto& [from, to] : map.entries) inverse.emplace_back(to, from);
  return replace_words(variant_source, inverse);
}

}  // namespace biasforge::transforms

#endif  // BIASFORGE_TRANSFORMS_RENAME_HPP
