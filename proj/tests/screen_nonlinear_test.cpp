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

#include "quadscreen/screen_nonlinear.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "quadscreen/experiments.hpp"
#include "quadscreen/io.hpp"
#include "quadscreen/screen_linear.hpp"

namespace quadscreen {
namespace {

// Four-point model where x0 and x1 interact and x2.. are noise.
GenerativeModel four_point_model(std::size_t p) {
  GenerativeModel m;
  m.p = p;
  m.poly.quad_terms = {{0, 1, 1.5}};
  m.poly.lin_terms = {{2, 0.3}};
  m.gamma = 1.0;
  m.alphabets.assign(p, four_point_alphabet());
  CounterRng rng(77, 0);
  for (std::size_t i = 0; i < p; ++i) {
    auto pmf = sample_simplex(rng, 4);
    for (double& v : pmf) v = 0.5 * v + 0.125;
    m.marginals.push_back(pmf);
  }
  m.marginals[0] = {0.1, 0.2, 0.3, 0.4};
  m.marginals[1] = {0.4, 0.1, 0.1, 0.4};
  return m;
}

Dataset relabel(const Dataset& d, const std::vector<Alphabet>& alphabets) {
  std::vector<std::uint8_t> codes;
  for (std::size_t i = 0; i < d.cols(); ++i) {
    codes.insert(codes.end(), d.column(i).begin(), d.column(i).end());
  }
  const auto y = d.labels();
  return Dataset(d.rows(), d.cols(), alphabets, std::move(codes),
                 std::vector<std::uint8_t>(y.begin(), y.end()));
}

TEST(HashFamily, TablesInRangeAndDeterministic) {
  const HashFamily a(4, 10, 1000, 5);
  const HashFamily b(4, 10, 1000, 5);
  const HashFamily c(4, 10, 1000, 6);
  bool differs = false;
  for (std::size_t l = 0; l < 10; ++l) {
    ASSERT_EQ(a.table(l).size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_GE(a.table(l)[k], -1000);
      EXPECT_LE(a.table(l)[k], 1000);
      EXPECT_EQ(a.table(l)[k], b.table(l)[k]);
      differs |= a.table(l)[k] != c.table(l)[k];
    }
    const auto shared = a.table_for(l, 3, 0);
    EXPECT_TRUE(std::equal(shared.begin(), shared.end(), a.table(l).begin()));
  }
  EXPECT_TRUE(differs);
}

TEST(HashFamily, UnitRangeUsesThreeIntegers) {
  const HashFamily h(6, 200, 1, 1);
  std::vector<int> seen(3, 0);
  for (std::size_t l = 0; l < 200; ++l) {
    for (auto v : h.table(l)) {
      ASSERT_GE(v, -1);
      ASSERT_LE(v, 1);
      ++seen[static_cast<std::size_t>(v + 1)];
    }
  }
  for (int s : seen) EXPECT_GT(s, 0);
}

TEST(HashFamily, RejectsBadParameters) {
  EXPECT_THROW(HashFamily(4, 0, 10, 1), Error);
  EXPECT_THROW(HashFamily(4, 3, 0, 1), Error);
  EXPECT_THROW(HashFamily(1, 3, 10, 1), Error);
}

TEST(NonlinearScores, ZeroLabelsGiveZero) {
  const auto d = sample_dataset(four_point_model(5), 400, 3);
  std::vector<std::uint8_t> codes;
  for (std::size_t i = 0; i < 5; ++i) {
    codes.insert(codes.end(), d.column(i).begin(), d.column(i).end());
  }
  const Dataset quiet(400, 5, std::vector<Alphabet>(5, four_point_alphabet()),
                      codes, std::vector<std::uint8_t>(400, 0));
  const auto s = nonlinear_scores(quiet, HashFamily(4, 10, 1000, 2));
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(s.c[i], 0.0);
    EXPECT_EQ(s.c_abs[i], 0.0);
  }
}

TEST(NonlinearScores, BinaryColumnsReduceToLinearTest) {
  const auto f = random_quad_poly(8, 3, 3, 6, {0.1, 1.0}, 4);
  std::vector<double> b(8, 0.3);
  b[1] = 0.8;
  const auto d = sample_dataset(make_binary_model(f, b, 2.0), 3000, 5);
  const auto lin = correlation_scores(d, true);
  const auto nl = nonlinear_scores(d, HashFamily(2, 12, 1000, 9));
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t l = 0; l < 12; ++l) {
      EXPECT_NEAR(std::abs(nl.at(i, l)), std::abs(lin.scores[i]), 1e-10);
    }
  }
}

TEST(NonlinearScores, AffineRelabelingIsTransparent) {
  const auto d = sample_dataset(four_point_model(6), 2000, 8);
  const auto moved = relabel(
      d, std::vector<Alphabet>(6, Alphabet({-7.0, -4.0, 2.0, 5.0})));
  const HashFamily h(4, 10, 1000, 3);
  const auto a = nonlinear_scores(d, h);
  const auto b = nonlinear_scores(moved, h);
  for (std::size_t k = 0; k < a.per_hash.size(); ++k) {
    EXPECT_NEAR(std::abs(a.per_hash[k]), std::abs(b.per_hash[k]), 1e-10);
  }
}

TEST(NonlinearScores, HashAverageVarianceShrinks) {
  const auto d = sample_dataset(four_point_model(3), 2000, 13);
  const std::size_t families = 400;
  std::vector<double> variance;
  for (std::size_t m : {1u, 4u, 16u}) {
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t t = 0; t < families; ++t) {
      const auto s = nonlinear_scores(d, HashFamily(4, m, 1000, 1000 * m + t));
      sum += s.c[0];
      sq += s.c[0] * s.c[0];
    }
    const double mean = sum / families;
    variance.push_back((sq - families * mean * mean) / (families - 1));
  }
  EXPECT_GT(variance[0], 0.0);
  EXPECT_GT(variance[0] / variance[1], 2.5);
  EXPECT_LT(variance[0] / variance[1], 6.5);
  EXPECT_GT(variance[1] / variance[2], 2.5);
  EXPECT_LT(variance[1] / variance[2], 6.5);
}

TEST(NonlinearScores, IrrelevantColumnsStaySmall) {
  const std::size_t p = 203;
  const std::size_t n = 10000;
  const auto d = sample_dataset(four_point_model(p), n, 17);
  const auto s = nonlinear_scores(d, HashFamily(4, 10, 1000, 4));
  std::size_t within = 0;
  for (std::size_t i = 3; i < p; ++i) {
    EXPECT_TRUE(std::isfinite(s.c[i]));
    within += std::abs(s.c[i]) <= 5.0 / std::sqrt(double(n));
  }
  EXPECT_GE(double(within) / double(p - 3), 0.99);
  EXPECT_FALSE(s.warning());
}

TEST(NonlinearScores, SingleObservedCodeIsDegenerate) {
  const std::size_t n = 20;
  std::vector<std::uint8_t> codes(2 * n, 2);
  for (std::size_t r = 0; r < n; ++r) codes[n + r] = r % 4;
  std::vector<std::uint8_t> y(n);
  for (std::size_t r = 0; r < n; ++r) y[r] = r % 3 == 0;
  const Dataset d(n, 2, std::vector<Alphabet>(2, four_point_alphabet()), codes, y);
  const auto s = nonlinear_scores(d, HashFamily(4, 5, 1000, 1));
  EXPECT_EQ(s.degenerate[0], 5u);
  EXPECT_EQ(s.degenerate[1], 0u);
  EXPECT_EQ(s.c[0], 0.0);
  EXPECT_TRUE(s.warning());
}

TEST(NonlinearScores, ConstantTableIsRedrawn) {
  // With U = 1 and two observed codes, shared tables are often constant on
  // them; the redraws must rescue every hash.
  const std::size_t n = 40;
  std::vector<std::uint8_t> codes(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    codes[r] = r % 2;
    y[r] = r % 2;
  }
  const Dataset d(n, 1, {four_point_alphabet()}, codes, y);
  const HashFamily h(4, 50, 1, 3);
  std::size_t constant_shared = 0;
  for (std::size_t l = 0; l < 50; ++l) {
    constant_shared += h.table(l)[0] == h.table(l)[1];
  }
  EXPECT_GT(constant_shared, 0u);
  const auto s = nonlinear_scores(d, h);
  EXPECT_EQ(s.degenerate[0], 0u);
}

TEST(NonlinearScores, AlphabetMismatchAndShortData) {
  const auto d = sample_dataset(four_point_model(3), 10, 1);
  EXPECT_THROW(nonlinear_scores(d, HashFamily(3, 2, 10, 1)), Error);
  EXPECT_THROW(nonlinear_scores(d.select_rows(std::vector<std::size_t>{0}),
                                HashFamily(4, 2, 10, 1)),
               Error);
}

TEST(SelectWeakSupportNl, ThresholdAndTopK) {
  NonlinearScores s;
  s.hashes = 1;
  s.c = {0.2, -0.5, 0.05};
  s.c_abs = {0.2, 0.5, 0.05};
  s.per_hash = s.c;
  s.degenerate = {0, 0, 0};
  EXPECT_EQ(select_weak_support_nl(s, ScreenConfig::with_threshold(0.1)),
            (std::vector<std::size_t>{0}));
  EXPECT_TRUE(select_weak_support_nl(s, ScreenConfig::with_threshold(0.3)).empty());
  EXPECT_EQ(select_weak_support_nl(s, ScreenConfig::top_k(1)),
            (std::vector<std::size_t>{1}));
  EXPECT_EQ(select_weak_support_nl(s, ScreenConfig::top_k(3)),
            (std::vector<std::size_t>{0, 1, 2}));
}

TEST(NonlinearScores, HashedExampleTargetLeadsAtLargerN) {
  const auto base =
      read_model_json(std::string(QUADSCREEN_DATA_DIR) + "/nonlinear_example_model.json");
  HashedExampleConfig cfg;
  cfg.n = 5000;
  cfg.trials = 10;
  const auto r = run_hashed_example(base, cfg);
  EXPECT_EQ(r.first_hashed, 10u);
  // The linear test cannot see x0: its population correlation is near zero.
  EXPECT_LT(r.first_linear, 5u);
}

}  // namespace
}  // namespace quadscreen
