/*
 * Copyright 2026 The kgcp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef KGCP_RANDOM_H_
#define KGCP_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace kgcp {

// Portable helpers on top of std::mt19937_64. The standard distributions
// are implementation-defined, so everything that must be reproducible
// bit-for-bit across toolchains goes through these.
using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent seeds from (seed, index)
// without advancing a shared stream.
inline uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t MixSeed(uint64_t seed, uint64_t stream, uint64_t index) {
  return MixSeed(MixSeed(MixSeed(seed) ^ stream) ^ index);
}

// Uniform in [0, 1).
inline double UniformDouble(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in [0, 1] from a single 64-bit word.
inline double UniformFromBits(uint64_t bits) {
  return static_cast<double>(bits >> 11) / static_cast<double>((1ULL << 53) - 1);
}

inline double UniformDouble(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformDouble(rng);
}

// Uniform integer in [0, n). n must be positive.
inline uint64_t UniformIndex(Rng& rng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Standard normal via Box-Muller.
inline double StandardNormal(Rng& rng) {
  double u1;
  do {
    u1 = UniformDouble(rng);
  } while (u1 <= 0.0);
  const double u2 = UniformDouble(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename T>
void Shuffle(std::span<T> values, Rng& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    const size_t j = UniformIndex(rng, i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace kgcp

#endif  // KGCP_RANDOM_H_
