// Copyright 2026 The PVC Authors
// Seeded random number generation with platform-independent output.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pvc {

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// std::mt19937_64 output is pinned by the standard, but the <random>
// distributions are not; all draws below are derived from raw engine
// words so results are identical on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed)
      : engine_(detail::splitmix64(seed)), seed_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one pair of draws per call).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform integer in [0, n). n must be positive.
  uint64_t integer(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(integer(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent child stream; deterministic in (own seed, stream id).
  Rng fork(uint64_t stream) const {
    return Rng(detail::splitmix64(seed_) ^ detail::splitmix64(~stream));
  }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_ = 0;
};

}  // namespace pvc
