#pragma once

#include <cstdint>
#include <random>

namespace songemb {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix_seed(mix_seed(root) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Stream ids so that every consumer of the root seed draws from its own sequence.
namespace streams {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kSubsample = 2;
inline constexpr std::uint64_t kTrainInit = 3;
inline constexpr std::uint64_t kTrainWorker = 4;
inline constexpr std::uint64_t kCoherence = 5;
inline constexpr std::uint64_t kSuggest = 6;
inline constexpr std::uint64_t kBuckets = 7;
inline constexpr std::uint64_t kSynth = 8;
inline constexpr std::uint64_t kObservations = 9;
}  // namespace streams

inline Rng make_rng(std::uint64_t root, std::uint64_t stream) { return Rng(derive_seed(root, stream)); }

// Uniform integer in [0, n) without depending on the library's distribution implementation.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Reject the incomplete top block so x % n is unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) from 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace songemb

namespace songemb {

// Fisher-Yates with uniform_index so permutations are identical across standard libraries.
template <class RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace songemb
