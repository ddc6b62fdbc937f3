#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pril {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over the bytes of a string; stable across platforms and runs.
constexpr std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ mix64(value));
}

/// Independent sub-stream of a seed, e.g. evaluation vs training.
inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(combine_seed(seed, stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Index drawn from a discrete distribution given by `probs` (need not
/// be exactly normalized). Falls back to the last positive entry.
template <typename Probs>
int sample_categorical(const Probs& probs, Rng& rng) {
  const int n = static_cast<int>(probs.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += probs[i];
  double u = uniform01(rng) * total;
  int last = 0;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  return last;
}

}  // namespace pril
