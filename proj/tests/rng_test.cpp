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

#include "quadscreen/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace quadscreen {
namespace {

TEST(Rng, SplitMixReferenceOutput) {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(counter_bits(0, 0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(counter_bits(0, 1), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(counter_bits(0, 2), 0x06C45D188009454FULL);
}

TEST(Rng, SameKeySameStream) {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  for (int t = 0; t < 100; ++t) EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctStreamsDiffer) {
  CounterRng a(42, 7);
  CounterRng b(42, 8);
  int equal = 0;
  for (int t = 0; t < 100; ++t) equal += a() == b();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  CounterRng a(1, 2);
  CounterRng b(1, 2);
  auto child = a.fork(3);
  (void)child();
  EXPECT_EQ(a(), b());
  EXPECT_EQ(a.fork(3)(), b.fork(3)());
}

TEST(Rng, DeriveKeyIsOrderSensitive) {
  EXPECT_NE(derive_key(1, 2, 3), derive_key(1, 3, 2));
  EXPECT_EQ(derive_key(1, 2, 3), derive_key(derive_key(1, 2), 3));
}

TEST(Rng, UnitIntervalRange) {
  EXPECT_EQ(unit_interval(0), 0.0);
  EXPECT_LT(unit_interval(~0ULL), 1.0);
  CounterRng rng(5, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, IntegerInCoversClosedRange) {
  CounterRng rng(9, 1);
  std::vector<int> hits(7, 0);
  for (int t = 0; t < 7000; ++t) {
    const auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ++hits[static_cast<std::size_t>(v + 3)];
  }
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(Rng, UsableWithStandardAlgorithms) {
  CounterRng rng(3, 3);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  std::shuffle(w.begin(), w.end(), rng);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Rng, SimplexPointsAreDistributions) {
  CounterRng rng(11, 0);
  std::vector<double> mean(4, 0.0);
  const int draws = 20000;
  for (int t = 0; t < draws; ++t) {
    const auto pmf = sample_simplex(rng, 4);
    ASSERT_EQ(pmf.size(), 4u);
    double total = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      ASSERT_GE(pmf[a], 0.0);
      total += pmf[a];
      mean[a] += pmf[a] / draws;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
  // Flat Dirichlet: each coordinate has mean 1/4, variance 3/80.
  for (double m : mean) EXPECT_NEAR(m, 0.25, 5.0 * std::sqrt(3.0 / 80.0 / draws));
}

TEST(Rng, WithoutReplacementIsDistinctAndInRange) {
  CounterRng rng(4, 4);
  for (int t = 0; t < 100; ++t) {
    const auto s = sample_without_replacement(rng, 30, 12);
    ASSERT_EQ(s.size(), 12u);
    std::set<std::size_t> distinct(s.begin(), s.end());
    EXPECT_EQ(distinct.size(), 12u);
    EXPECT_LT(*distinct.rbegin(), 30u);
  }
  EXPECT_EQ(sample_without_replacement(rng, 5, 5).size(), 5u);
  EXPECT_TRUE(sample_without_replacement(rng, 5, 0).empty());
}

TEST(Rng, SeparatedBiasAvoidsTheMiddle) {
  CounterRng rng(8, 8);
  int low = 0;
  for (int t = 0; t < 10000; ++t) {
    const double b = sample_separated_bias(rng, 0.1, 0.4);
    const bool in_low = b >= 0.1 && b <= 0.4;
    const bool in_high = b >= 0.6 && b <= 0.9;
    ASSERT_TRUE(in_low || in_high) << b;
    low += in_low;
  }
  EXPECT_NEAR(low, 5000, 300);
}

}  // namespace
}  // namespace quadscreen
