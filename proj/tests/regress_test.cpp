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

#include "quadscreen/regress.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "quadscreen/parallel.hpp"

namespace quadscreen {
namespace {

ExpandedDesign dense_design(std::size_t rows, std::size_t cols,
                            const std::vector<double>& values) {
  ExpandedDesign d;
  d.rows = rows;
  for (std::size_t c = 0; c < cols; ++c) {
    d.columns.push_back(Term::linear(c));
    d.base_vars.push_back(c);
  }
  d.matrix = values;
  return d;
}

Dataset four_point_data(std::size_t n, std::size_t p, std::uint64_t seed) {
  GenerativeModel m;
  m.p = p;
  m.poly.lin_terms = {{0, 0.5}};
  m.alphabets.assign(p, Alphabet({-2.0, -1.0, 1.0, 2.0}));
  m.marginals.assign(p, {0.25, 0.25, 0.25, 0.25});
  return sample_dataset(m, n, seed);
}

TEST(ExpandFeatures, ColumnCounts) {
  const auto general = four_point_data(10, 12, 1);
  const auto f = random_quad_poly(12, 2, 2, 4, {0.1, 1.0}, 1);
  const auto binary = sample_dataset(
      make_binary_model(f, std::vector<double>(12, 0.3), 1.0), 10, 1);
  const std::vector<std::size_t> two = {3, 7};
  EXPECT_EQ(expand_features(general, two).cols(), 2u + 3u);
  EXPECT_EQ(expand_features(binary, two).cols(), 2u + 1u);
  std::vector<std::size_t> ten(10);
  std::iota(ten.begin(), ten.end(), 1);
  EXPECT_EQ(expand_features(general, ten).cols(), 10u + 55u);
  EXPECT_EQ(expand_features(binary, ten).cols(), 10u + 45u);
  EXPECT_EQ(expand_features(general, std::vector<std::size_t>{}).cols(), 0u);
}

TEST(ExpandFeatures, OrderAndValues) {
  const auto d = four_point_data(20, 5, 2);
  const std::vector<std::size_t> weak = {4, 1};
  const auto x = expand_features(d, weak);
  const std::vector<Term> expected = {Term::linear(1), Term::linear(4), Term::quad(1, 1),
                                      Term::quad(1, 4), Term::quad(4, 4)};
  EXPECT_EQ(x.columns, expected);
  EXPECT_EQ(x.base_vars, (std::vector<std::size_t>{1, 4}));
  for (std::size_t r = 0; r < 20; ++r) {
    EXPECT_EQ(x.at(r, 0), d.value(r, 1));
    EXPECT_EQ(x.at(r, 3), d.value(r, 1) * d.value(r, 4));
    EXPECT_EQ(x.at(r, 4), d.value(r, 4) * d.value(r, 4));
  }
  EXPECT_THROW(expand_features(d, std::vector<std::size_t>{9}), Error);
}

TEST(ExpandFeatures, DeterministicAcrossThreads) {
  const auto d = four_point_data(300, 8, 3);
  const std::vector<std::size_t> weak = {0, 2, 5};
  set_num_threads(1);
  const auto a = expand_features(d, weak);
  set_num_threads(4);
  const auto b = expand_features(d, weak);
  set_num_threads(0);
  EXPECT_EQ(a.columns, b.columns);
  EXPECT_EQ(a.matrix, b.matrix);
}

TEST(FitLogistic, LargeLambdaKillsWeights) {
  const auto d = four_point_data(400, 4, 4);
  const std::vector<std::size_t> weak = {0, 1};
  const auto x = expand_features(d, weak);
  const auto y = d.labels();
  FitOptions opts;
  opts.lambda = lambda_max(x, y) * 1.0001;
  const auto fit = fit_logistic(x, y, opts);
  for (double w : fit.weights) EXPECT_EQ(w, 0.0);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  EXPECT_NEAR(fit.intercept, std::log(ybar / (1.0 - ybar)), 1e-7);
  EXPECT_TRUE(fit.converged);
}

TEST(FitLogistic, EmptyDesignFitsBaseRate) {
  const auto d = four_point_data(100, 2, 5);
  const auto x = expand_features(d, std::vector<std::size_t>{});
  const auto y = d.labels();
  const auto fit = fit_logistic(x, y);
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  EXPECT_NEAR(fit.intercept, std::log(ybar / (1.0 - ybar)), 1e-7);
  EXPECT_TRUE(fit.weights.empty());
}

TEST(FitLogistic, SeparableDataStaysFinite) {
  const auto x = dense_design(6, 1, {-3, -2, -1, 1, 2, 3});
  const std::vector<std::uint8_t> y = {0, 0, 0, 1, 1, 1};
  FitOptions opts;
  opts.lambda = 0.1;
  const auto fit = fit_logistic(x, y, opts);
  EXPECT_TRUE(std::isfinite(fit.weights[0]));
  EXPECT_GT(fit.weights[0], 0.0);
  EXPECT_LT(fit.weights[0], 100.0);
  EXPECT_TRUE(fit.converged);
  EXPECT_GE(fit.final_nll, 0.0);
}

TEST(FitLogistic, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed, 0x6764);
    const std::size_t n = 5 + rng.index(30);
    const std::size_t c = 1 + rng.index(6);
    std::vector<double> values(n * c);
    for (double& v : values) v = rng.uniform(-2.0, 2.0);
    const auto x = dense_design(n, c, values);
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = rng.uniform() < 0.5;
    std::vector<double> w(c);
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);
    std::vector<double> grad;
    nll_and_gradient(x, y, w, b, grad);
    std::vector<double> scratch;
    const double h = 1e-5;
    for (std::size_t k = 0; k <= c; ++k) {
      auto wp = w;
      auto wm = w;
      double bp = b;
      double bm = b;
      if (k < c) {
        wp[k] += h;
        wm[k] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd =
          (nll_and_gradient(x, y, wp, bp, scratch) - nll_and_gradient(x, y, wm, bm, scratch)) /
          (2.0 * h);
      EXPECT_NEAR(grad[k], fd, 1e-6 * std::max(1.0, std::abs(fd)))
          << "seed " << seed << " coordinate " << k;
    }
  }
}

TEST(FitLogistic, ObjectiveNeverIncreases) {
  const auto d = four_point_data(2000, 6, 6);
  const std::vector<std::size_t> weak = {0, 1, 2, 3};
  const auto x = expand_features(d, weak);
  for (double lambda : {0.0, 1e-3, 1e-2}) {
    FitOptions opts;
    opts.lambda = lambda;
    opts.record_objective = true;
    const auto fit = fit_logistic(x, d.labels(), opts);
    ASSERT_GE(fit.objective_trace.size(), 2u);
    for (std::size_t t = 1; t < fit.objective_trace.size(); ++t) {
      ASSERT_LE(fit.objective_trace[t], fit.objective_trace[t - 1])
          << "lambda " << lambda << " iteration " << t;
    }
    EXPECT_TRUE(fit.converged);
    if (lambda == 0.0) {
      EXPECT_LE(fit.residual, opts.tol);
    }
  }
}

TEST(FitLogistic, RecoversTrueDirection) {
  QuadPoly f;
  f.quad_terms = {{0, 1, 0.8}, {1, 2, -0.5}};
  f.lin_terms = {{0, 0.6}, {2, -0.4}, {3, 0.3}};
  const double gamma = 1.5;
  const auto m =
      make_binary_model(f, std::vector<double>{0.3, 0.7, 0.25, 0.6, 0.4}, gamma);
  const auto d = sample_dataset(m, 100000, 7);
  const std::vector<std::size_t> weak = {0, 1, 2, 3};
  const auto x = expand_features(d, weak);
  const auto fit = fit_logistic(x, d.labels());
  EXPECT_TRUE(fit.converged);
  std::vector<double> truth(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const Term& t = x.columns[c];
    for (const auto& l : m.poly.lin_terms) {
      if (t.kind == Term::Kind::kLinear && t.i == l.j) truth[c] = gamma * l.alpha;
    }
    for (const auto& q : m.poly.quad_terms) {
      if (t.kind == Term::Kind::kQuad && t.i == q.i && t.j == q.j) truth[c] = gamma * q.beta;
    }
  }
  const double dot = std::inner_product(truth.begin(), truth.end(), fit.weights.begin(), 0.0);
  const double nt = std::sqrt(std::inner_product(truth.begin(), truth.end(), truth.begin(), 0.0));
  const double nw = std::sqrt(
      std::inner_product(fit.weights.begin(), fit.weights.end(), fit.weights.begin(), 0.0));
  EXPECT_GT(dot / (nt * nw), 0.95);
}

TEST(FitLogistic, RejectsBadInput) {
  auto x = dense_design(2, 1, {1.0, std::numeric_limits<double>::quiet_NaN()});
  const std::vector<std::uint8_t> y = {0, 1};
  try {
    fit_logistic(x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  x.matrix = {1.0, 2.0};
  FitOptions opts;
  opts.lambda = -1.0;
  EXPECT_THROW(fit_logistic(x, y, opts), Error);
  EXPECT_THROW(fit_logistic(x, std::vector<std::uint8_t>{1}), Error);
}

TEST(FitLogistic, DeterministicAcrossThreads) {
  const auto d = four_point_data(1500, 5, 8);
  const auto x = expand_features(d, std::vector<std::size_t>{0, 2, 4});
  FitOptions opts;
  opts.lambda = 1e-3;
  set_num_threads(1);
  const auto a = fit_logistic(x, d.labels(), opts);
  set_num_threads(4);
  const auto b = fit_logistic(x, d.labels(), opts);
  set_num_threads(0);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.intercept, b.intercept);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(PredictProba, HandComputed) {
  const auto x = dense_design(2, 2, {1.0, -1.0, 0.5, 2.0});
  FitResult fit;
  fit.columns = x.columns;
  fit.weights = {0.0, 0.0};
  for (double p : predict_proba(fit, x)) EXPECT_EQ(p, 0.5);
  fit.weights = {1.0, -0.5};
  fit.intercept = 0.25;
  const auto p = predict_proba(fit, x);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.75)), 1e-15);
  EXPECT_NEAR(p[1], 1.0 / (1.0 + std::exp(0.25)), 1e-15);
  fit.weights = {1.0};
  EXPECT_THROW(predict_proba(fit, x), Error);
}

TEST(PredictProba, MonotoneInPositiveFeature) {
  const auto x = dense_design(5, 1, {-2, -1, 0, 1, 2});
  FitResult fit;
  fit.weights = {0.7};
  fit.intercept = -0.1;
  const auto p = predict_proba(fit, x);
  for (std::size_t r = 1; r < p.size(); ++r) EXPECT_GT(p[r], p[r - 1]);
}

TEST(Auc, ReferenceCases) {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auc(s, y), 0.75);
  const std::vector<double> perfect = {0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(auc(perfect, y), 1.0);
  const std::vector<double> reversed = {0.4, 0.3, 0.2, 0.1};
  EXPECT_EQ(auc(reversed, y), 0.0);
  const std::vector<double> tied = {0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(auc(tied, y), 0.5);
  try {
    auc(perfect, std::vector<std::uint8_t>{1, 1, 1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Auc, RandomScoresNearHalf) {
  CounterRng rng(3, 0);
  std::vector<double> s(10000);
  std::vector<std::uint8_t> y(10000);
  for (std::size_t r = 0; r < s.size(); ++r) {
    s[r] = rng.uniform();
    y[r] = r % 2;
  }
  EXPECT_NEAR(auc(s, y), 0.5, 0.02);
}

TEST(LogLoss, KnownValuesAndClipping) {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<std::uint8_t> y = {0, 1};
  EXPECT_NEAR(log_loss(p, y), std::log(2.0), 1e-15);
  const std::vector<double> wrong = {1.0, 0.0};
  // Both rows are clipped to 1e-15 away from the wrong end.
  const double expected = -0.5 * (std::log1p(-(1.0 - 1e-15)) + std::log(1e-15));
  EXPECT_DOUBLE_EQ(log_loss(wrong, y), expected);
  EXPECT_NEAR(log_loss(wrong, y), -std::log(1e-15), 1e-3);
}

TEST(CrossValidate, GridAndSelection) {
  const auto grid = lambda_grid();
  ASSERT_EQ(grid.size(), 15u);
  EXPECT_NEAR(grid.front(), 1e-4, 1e-18);
  EXPECT_NEAR(grid.back(), 1e4, 1e-8);
  for (std::size_t t = 1; t < grid.size(); ++t) {
    EXPECT_NEAR(std::log10(grid[t]) - std::log10(grid[t - 1]), 8.0 / 14.0, 1e-12);
  }
  QuadPoly f;
  f.lin_terms = {{0, 1.0}, {1, -0.8}};
  const auto m = make_binary_model(f, std::vector<double>{0.3, 0.6, 0.5}, 2.0);
  const auto d = sample_dataset(m, 800, 9);
  const auto x = expand_features(d, std::vector<std::size_t>{0, 1, 2});
  const auto cv = cross_validate(x, d.labels(), grid, 4, 11);
  ASSERT_EQ(cv.mean_loss.size(), 15u);
  for (double v : cv.mean_loss) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(cv.best_lambda, grid[cv.best_index]);
  for (double v : cv.mean_loss) EXPECT_GE(v, cv.mean_loss[cv.best_index]);
  // Heavy penalties throw the signal away.
  EXPECT_LT(cv.best_lambda, 1.0);
  const auto again = cross_validate(x, d.labels(), grid, 4, 11);
  EXPECT_EQ(cv.mean_loss, again.mean_loss);
  EXPECT_THROW(cross_validate(x, d.labels(), grid, 1, 11), Error);
  EXPECT_THROW(cross_validate(x, d.labels(), {}, 4, 11), Error);
}

}  // namespace
}  // namespace quadscreen
