/*
 * Copyright 2026 The quadscreen Authors.
 *
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

// Counter-based random numbers. Every draw is a pure function of a 64-bit
// key and a counter, so results do not depend on iteration order or on how
// work is split across threads.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace quadscreen {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t key) { return key; }

// Folds any number of integers into one well-mixed key.
template <typename... Rest>
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t next,
                                   Rest... rest) {
  const std::uint64_t mixed =
      splitmix64(key ^ splitmix64(next + kGoldenGamma));
  return derive_key(mixed, static_cast<std::uint64_t>(rest)...);
}

// The `counter`-th output of the SplitMix64 stream rooted at `key`.
constexpr std::uint64_t counter_bits(std::uint64_t key, std::uint64_t counter) {
  return splitmix64(key + (counter + 1) * kGoldenGamma);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform integer in [lo, hi] (Lemire's multiply-shift; bias < 2^-32 for the
// small ranges used here).
inline std::int64_t integer_in(std::uint64_t bits, std::int64_t lo,
                               std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  __extension__ using u128 = unsigned __int128;
  const auto scaled =
      static_cast<std::uint64_t>((static_cast<u128>(bits) * span) >> 64);
  return lo + static_cast<std::int64_t>(scaled);
}

// Sequential view over a counter stream. Satisfies
// UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_key(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return counter_bits(key_, counter_++); }

  double uniform() { return unit_interval((*this)()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return integer_in((*this)(), lo, hi);
  }
  std::size_t index(std::size_t count) {
    return static_cast<std::size_t>(
        integer_in((*this)(), 0, static_cast<std::int64_t>(count) - 1));
  }
  bool coin() { return ((*this)() >> 63) != 0; }

  // Independent child stream; the parent is not advanced.
  CounterRng fork(std::uint64_t id) const {
    return CounterRng(derive_key(key_, id));
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform point on the probability simplex with `k` vertices (flat
// Dirichlet) via normalized exponential spacings.
inline std::vector<double> sample_simplex(CounterRng& rng, std::size_t k) {
  std::vector<double> out(k);
  double total = 0.0;
  for (auto& v : out) {
    v = -std::log1p(-rng.uniform());
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

// `count` distinct indices from [0, universe), in draw order.
inline std::vector<std::size_t> sample_without_replacement(
    CounterRng& rng, std::size_t universe, std::size_t count) {
  std::vector<std::size_t> pool(universe);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(universe - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

// Uniform on [lo, hi] ∪ [1 - hi, 1 - lo], the bias region used throughout
// the binary experiments (lo = 0.1, hi = 0.4 gives [0.1,0.4]∪[0.6,0.9]).
inline double sample_separated_bias(CounterRng& rng, double lo, double hi) {
  const double u = rng.uniform(lo, hi);
  return rng.coin() ? u : 1.0 - u;
}

}  // namespace quadscreen
