// Copyright 2026 The bboxaug Authors.
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

#ifndef BBOXAUG_RANDOM_HPP_
#define BBOXAUG_RANDOM_HPP_

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace bboxaug {

/// SplitMix64 finalizer. Used for seed derivation only.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable 64-bit seed for (master, a, b). Independent of platform and of the
/// order in which callers ask for seeds.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

/// Random source passed explicitly to every stochastic operation.
///
/// The engine (mt19937_64) is fully specified by the standard. The
/// distributions below are implemented here instead of using the
/// <random> distribution classes, whose outputs differ between standard
/// library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling, so unbiased for any n.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform_index(span));
  }

  /// True with probability p. p <= 0 never fires, p >= 1 always does.
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream. Consumes exactly one draw from this stream.
  Rng fork() { return Rng(mix64(next())); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bboxaug

#endif  // BBOXAUG_RANDOM_HPP_
