#ifndef BIASFORGE_RNG_HPP
#define BIASFORGE_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace biasforge {

/// Identifier written into manifests. The engine is std::mt19937_64, whose
/// output sequence is fixed by the C++ standard; bounded draws use the
/// rejection scheme below instead of std::uniform_int_distribution, whose
/// algorithm is implementation-defined. Together that makes a seed portable.
inline constexpr std::string_view kPrngName = "mt19937_64/reject-mod/v1";

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
    std::uint64_t draw = engine_();
    while (draw > limit) draw = engine_();
    return draw % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    // Fisher-Yates with our own bounded draw.
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable per-item seed: mixes the run seed with a list of string keys
/// (sample id, bias name, ...). Key boundaries are encoded so ("ab","c")
/// and ("a","bc") differ.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> keys) {
  std::uint64_t h = fnv1a64({}, splitmix64(seed));
  for (std::string_view key : keys) {
    h = fnv1a64(key, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return splitmix64(h);
}

}  // namespace biasforge

#endif  // BIASFORGE_RNG_HPP
