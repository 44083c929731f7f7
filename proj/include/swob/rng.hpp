#pragma once

// Deterministic randomness for simulations.
//
// Two kinds of generators live here:
//   * counter-based streams (stream_u64 / stream_gauss): pure functions of
//     (seed, stream, counter), so a value attached to a fixed coordinate,
//     e.g. the noise at round t for arm k, can be regenerated independently
//     of evaluation order;
//   * a sequential generator (Rng) for gameplay decisions, where order is
//     fixed by the protocol anyway.
//
// Everything derives from a caller-supplied 64-bit seed. No wall clock, no
// global state.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "swob/error.hpp"

namespace swob {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer: bijective on 64-bit words with strong avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Derives an independent child seed. Used for per-repetition seeds
// (split_seed(base_seed, r)) and for sub-streams within one repetition.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix64((seed + kGolden) ^ mix64(salt + kGolden));
}

// Counter-based word: a pure function of (seed, stream, counter).
inline std::uint64_t stream_u64(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t counter) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ (stream + kGolden));
  h = mix64(h ^ (counter + kGolden));
  return h;
}

// Maps a word to [0, 1) with 53 random bits.
inline double u64_to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Maps a word to (0, 1], safe as a log argument.
inline double u64_to_unit_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal attached to (seed, stream, index) via Box-Muller. Each
// index consumes two counter slots, so indices never collide.
inline double stream_gauss(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index) {
  const double u1 = u64_to_unit_open(stream_u64(seed, stream, 2 * index));
  const double u2 = u64_to_unit(stream_u64(seed, stream, 2 * index + 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential splitmix64 generator for in-order decisions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform double in [0, 1).
  double uniform() { return u64_to_unit(next_u64()); }

  // Uniform integer in [0, n). Multiply-shift; bias is at most n / 2^64.
  std::size_t uniform_below(std::size_t n) {
    if (n == 0) throw DomainError("uniform_below: n must be positive");
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  // Samples an index from a normalized probability vector by CDF inversion.
  std::size_t sample_index(const std::vector<double>& probs) {
    if (probs.empty()) throw DomainError("sample_index: empty distribution");
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    // Guard against accumulated rounding: return the last positive entry.
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) return i;
    }
    throw DomainError("sample_index: distribution has no positive mass");
  }

 private:
  std::uint64_t state_;
};

}  // namespace swob
