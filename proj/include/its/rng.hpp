// Copyright 2026 The ITS Authors
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

#include "its/common.hpp"

namespace its {

// splitmix64 finalizer. Counter-based randomness everywhere: a draw is a pure
// function of (key, counter), so results do not depend on call order, thread
// scheduling, or any hidden engine state.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t key_combine(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }

class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(key) {}
  CounterRng(uint64_t seed, const std::string& stream)
      : key_(key_combine(seed, fnv1a(stream))) {}
  CounterRng(uint64_t seed, const std::string& stream, uint64_t index)
      : key_(key_combine(key_combine(seed, fnv1a(stream)), index)) {}

  uint64_t bits(uint64_t counter) const { return mix64(key_ ^ (counter * 0xd1342543de82ef95ull + 1)); }

  // [0, 1)
  double uniform(uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  // Box-Muller; one gaussian per counter value.
  double normal(uint64_t counter) const {
    double u1 = uniform(counter * 2);
    double u2 = uniform(counter * 2 + 1);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(uint64_t counter, double p) const { return uniform(counter) < p; }

  // integer in [0, n)
  uint64_t below(uint64_t counter, uint64_t n) const { return bits(counter) % n; }

  uint64_t key() const { return key_; }

 private:
  uint64_t key_;
};

// Deterministic in-place Fisher-Yates driven by a counter rng.
template <typename T>
void shuffle(std::vector<T>& v, const CounterRng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace its
