// Copyright 2026 The Veria Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace veria {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Deterministic random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the real-valued conversion is done here
/// rather than through std::uniform_real_distribution, whose algorithm is
/// implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}
  RandomStream(std::uint64_t run_seed, std::uint64_t index)
      : engine_(mix64(run_seed ^ mix64(index))) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01() { return unit_double(engine_()); }

  /// Uniform on [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return lo + (hi - lo) * uniform01();
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the result unbiased.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Child stream; does not advance this one.
  RandomStream fork(std::uint64_t salt) const {
    RandomStream copy = *this;
    return RandomStream(copy.engine_() ^ mix64(salt));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace veria
