// Copyright 2026 The qmeter Authors
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

#ifndef QMETER_RNG_HPP
#define QMETER_RNG_HPP

#include <cstdint>
#include <limits>

namespace qmeter {

/// Counter-based generator: draw n of stream `key` is
/// mix(mix(key) + (n + 1) * golden), with mix the SplitMix64 finalizer.
/// Any draw can be recomputed from (key, n) alone, so substreams never share
/// state and parallel evaluation order cannot change results.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(mix(key)), counter_(counter) {}

  /// Substream for one trajectory: key = mix(seed) + index * golden. The
  /// seed is hashed first; a plain seed XOR index would let neighbouring seeds
  /// share the same set of run keys.
  static CounterRng substream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(mix(seed) + index * kGolden);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Index drawn from a discrete distribution by inverse CDF; the last index
/// absorbs rounding slack.
template <class Probabilities>
std::size_t sample_index(const Probabilities& probs, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < std::size(probs); ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last;
}

}  // namespace qmeter

#endif  // QMETER_RNG_HPP
