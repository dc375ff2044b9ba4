#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace owl {

/// SplitMix64 generator. Small, portable and splittable: every stream is fully
/// determined by its 64-bit state, so derived streams can be keyed by a label
/// hash instead of by iteration order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound); bound must be > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal deviate (Box-Muller, one value per call).
  double normal();

  /// Independent child stream keyed by `key`.
  Rng split(std::uint64_t key) const { return Rng(mix(state_ ^ mix(key))); }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t state_;
};

/// FNV-1a over the bytes of `text`; used to derive per-label / per-id streams.
std::uint64_t hash_string(std::string_view text);

/// Seed for the stream belonging to `key` under experiment seed `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  return Rng::mix(seed ^ Rng::mix(hash_string(key)));
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  // Fisher-Yates, high index down.
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace owl
