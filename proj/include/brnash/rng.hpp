// Copyright 2026 The brnash Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>

namespace brnash {

// SplitMix64 pseudo-random generator (Steele, Lea & Flood, 2014).
//
// Chosen over std::mt19937 because its output is fully specified here, so
// seeded artifacts (datasets, Monte Carlo draws, network initializations)
// are bit-identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Integer uniform in [0, n) by rejection-free multiply-shift; n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller. Draws two uniforms per call; no cached
  // spare, so the stream position is an explicit function of the call count.
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    // Guard against log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t state_;
};

// Deterministic child-seed derivation: the k-th child of a master seed is the
// k-th SplitMix64 output of the master stream offset by k. Documented so that
// per-trial and per-sample seeds can be reproduced independently of execution
// order or worker count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  Rng r(master + 0x9E3779B97F4A7C15ULL * (k + 1));
  return r.next_u64();
}

}  // namespace brnash
