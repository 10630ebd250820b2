#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace treenet {

/// SplitMix64 output finalizer.
constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kSeedTagOffset = 0x9E3779B97F4A7C15ULL;

/// Derives an independent stream seed from a master seed and a path of
/// integer tags (layer, forest, fold, tree...). The state starts as
/// finalize(master) and each tag is folded in as
/// state = finalize(state ^ (tag + kSeedTagOffset)). Frozen: changing it
/// changes every trained model.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::span<const std::uint64_t> tags) noexcept {
  std::uint64_t state = splitmix64_finalize(master);
  for (std::uint64_t tag : tags) state = splitmix64_finalize(state ^ (tag + kSeedTagOffset));
  return state;
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  return derive_seed(master, std::span<const std::uint64_t>(tags.begin(), tags.size()));
}

/// Deterministic random stream. The engine is the standard-specified
/// mt19937_64; the distributions are implemented here because the standard
/// library's distributions are not reproducible across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) {
    // Rejection sampling over the largest multiple of bound.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform real in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// k distinct values from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace treenet
