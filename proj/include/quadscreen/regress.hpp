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

// L1-regularized logistic regression on the linear and quadratic terms of a
// recovered weak support, plus AUC and log-loss.
//
// Objective (y in {0, 1}, z = <w, x> + b):
//
//   F(w, b) = (1/n) sum_k [log(1 + e^{z_k}) - y_k z_k] + lambda ||w||_1
//
// minimized by proximal gradient. Each step starts from a Barzilai-Borwein
// step length and halves it until the quadratic upper bound holds and F
// does not increase.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/parallel.hpp"
#include "quadscreen/rng.hpp"

namespace quadscreen {

struct Term {
  enum class Kind { kLinear, kQuad };
  Kind kind = Kind::kLinear;
  std::size_t i = 0;
  std::size_t j = 0;  // == i for linear terms

  static Term linear(std::size_t i) { return {Kind::kLinear, i, i}; }
  static Term quad(std::size_t i, std::size_t j) { return {Kind::kQuad, i, j}; }

  bool operator==(const Term&) const = default;
};

inline std::string to_string(const Term& t) {
  return t.kind == Term::Kind::kLinear
             ? "x" + std::to_string(t.i)
             : "x" + std::to_string(t.i) + "*x" + std::to_string(t.j);
}

struct ExpandedDesign {
  std::vector<std::size_t> base_vars;
  std::vector<Term> columns;
  std::size_t rows = 0;
  std::vector<double> matrix;  // row-major rows x columns.size()

  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const {
    return matrix[r * columns.size() + c];
  }
  std::span<const double> row(std::size_t r) const {
    return {matrix.data() + r * columns.size(), columns.size()};
  }
};

// Linear terms ascending, then products (i, j), i <= j, in lexicographic
// order. Squares of two-point variables are affine in the variable and are
// dropped.
inline std::vector<Term> expansion_terms(const Dataset& data,
                                         std::span<const std::size_t> weak) {
  std::vector<std::size_t> vars(weak.begin(), weak.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  for (std::size_t v : vars) {
    if (v >= data.cols()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "weak variable " + std::to_string(v) + " outside dataset");
    }
  }
  std::vector<Term> terms;
  for (std::size_t v : vars) terms.push_back(Term::linear(v));
  for (std::size_t a = 0; a < vars.size(); ++a) {
    for (std::size_t b = a; b < vars.size(); ++b) {
      if (a == b && data.alphabet(vars[a]).size() == 2) continue;
      terms.push_back(Term::quad(vars[a], vars[b]));
    }
  }
  return terms;
}

inline ExpandedDesign expand_features(const Dataset& data,
                                      std::vector<Term> terms) {
  ExpandedDesign d;
  std::vector<std::size_t> base;
  for (const auto& t : terms) {
    if (t.i >= data.cols() || t.j >= data.cols()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "term " + to_string(t) + " outside dataset");
    }
    base.push_back(t.i);
    base.push_back(t.j);
  }
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());
  d.base_vars = std::move(base);
  d.columns = std::move(terms);
  d.rows = data.rows();
  const std::size_t w = d.columns.size();
  d.matrix.assign(d.rows * w, 0.0);
  for (std::size_t c = 0; c < w; ++c) {
    const Term& t = d.columns[c];
    const auto ci = data.column(t.i);
    const auto cj = data.column(t.j);
    const Alphabet& ai = data.alphabet(t.i);
    const Alphabet& aj = data.alphabet(t.j);
    for (std::size_t r = 0; r < d.rows; ++r) {
      d.matrix[r * w + c] = t.kind == Term::Kind::kLinear
                                ? ai[ci[r]]
                                : ai[ci[r]] * aj[cj[r]];
    }
  }
  return d;
}

inline ExpandedDesign expand_features(const Dataset& data,
                                      std::span<const std::size_t> weak) {
  return expand_features(data, expansion_terms(data, weak));
}

inline ExpandedDesign select_design_rows(const ExpandedDesign& d,
                                         std::span<const std::size_t> rows) {
  ExpandedDesign out;
  out.base_vars = d.base_vars;
  out.columns = d.columns;
  out.rows = rows.size();
  const std::size_t w = d.cols();
  out.matrix.resize(rows.size() * w);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(d.matrix.begin() + static_cast<std::ptrdiff_t>(rows[r] * w), w,
                out.matrix.begin() + static_cast<std::ptrdiff_t>(r * w));
  }
  return out;
}

struct FitOptions {
  double lambda = 0.0;
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  bool record_objective = false;
};

struct FitResult {
  std::vector<Term> columns;
  std::vector<double> weights;
  double intercept = 0.0;
  double lambda = 0.0;
  std::size_t iterations = 0;
  double final_nll = 0.0;
  bool converged = false;
  // Max violation of the subgradient optimality conditions.
  double residual = 0.0;
  // Penalized objective after each accepted step (index 0 is the start).
  std::vector<double> objective_trace;
};

namespace detail {

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline void linear_predictor(const ExpandedDesign& d, std::span<const double> w,
                             double b, std::vector<double>& z) {
  z.resize(d.rows);
  const std::size_t cols = d.cols();
  parallel_for(0, d.rows, [&](std::size_t r) {
    const double* x = d.matrix.data() + r * cols;
    double acc = b;
    for (std::size_t c = 0; c < cols; ++c) acc += x[c] * w[c];
    z[r] = acc;
  });
}

inline double mean_nll(std::span<const double> z, std::span<const std::uint8_t> y) {
  double acc = 0.0;
  for (std::size_t r = 0; r < z.size(); ++r) acc += softplus(z[r]) - y[r] * z[r];
  return z.empty() ? 0.0 : acc / static_cast<double>(z.size());
}

// Gradient of the mean NLL: grad[0..cols) for weights, grad[cols] intercept.
inline void nll_gradient(const ExpandedDesign& d, std::span<const double> z,
                         std::span<const std::uint8_t> y, std::vector<double>& grad) {
  const std::size_t cols = d.cols();
  grad.assign(cols + 1, 0.0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double resid = sigmoid(z[r]) - y[r];
    const double* x = d.matrix.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) grad[c] += resid * x[c];
    grad[cols] += resid;
  }
  const double inv_n = 1.0 / static_cast<double>(d.rows);
  for (double& g : grad) g *= inv_n;
}

// mean(nll(z_new)) - mean(nll(z)) summed row by row, so that changes far
// below the rounding level of the objective itself stay resolvable.
inline double mean_nll_change(std::span<const double> z_new, std::span<const double> z,
                              std::span<const std::uint8_t> y) {
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t r = 0; r < z.size(); ++r) {
    const double term =
        (softplus(z_new[r]) - softplus(z[r])) - y[r] * (z_new[r] - z[r]);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return z.empty() ? 0.0 : (sum + comp) / static_cast<double>(z.size());
}

inline double l1(std::span<const double> w) {
  double acc = 0.0;
  for (double v : w) acc += std::abs(v);
  return acc;
}

inline double soft_threshold(double v, double t) {
  return v > t ? v - t : (v < -t ? v + t : 0.0);
}

inline double optimality_residual(std::span<const double> w,
                                  std::span<const double> grad, double lambda) {
  const std::size_t cols = w.size();
  double res = std::abs(grad[cols]);
  for (std::size_t c = 0; c < cols; ++c) {
    const double r = w[c] != 0.0
                         ? std::abs(grad[c] + lambda * (w[c] > 0.0 ? 1.0 : -1.0))
                         : std::max(0.0, std::abs(grad[c]) - lambda);
    res = std::max(res, r);
  }
  return res;
}

inline void check_inputs(const ExpandedDesign& d, std::span<const std::uint8_t> y) {
  if (d.rows == 0) throw Error(ErrorCode::kInvalidArgument, "design has no rows");
  if (y.size() != d.rows) {
    throw Error(ErrorCode::kInvalidArgument, "label count does not match design rows");
  }
  for (std::size_t t = 0; t < d.matrix.size(); ++t) {
    if (!std::isfinite(d.matrix[t])) {
      throw Error(ErrorCode::kNumeric, "non-finite design entry",
                  "row " + std::to_string(t / std::max<std::size_t>(d.cols(), 1)) +
                      ", column " +
                      std::to_string(t % std::max<std::size_t>(d.cols(), 1)));
    }
  }
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (y[r] > 1) {
      throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1",
                  "row " + std::to_string(r));
    }
  }
}

inline double base_rate_logit(std::span<const std::uint8_t> y) {
  double ones = 0.0;
  for (auto v : y) ones += v;
  const double eps = 1e-12;
  const double ybar = std::clamp(ones / static_cast<double>(y.size()), eps, 1.0 - eps);
  return std::log(ybar / (1.0 - ybar));
}

}  // namespace detail

// Mean negative log-likelihood and its gradient (weights then intercept),
// without the penalty.
inline double nll_and_gradient(const ExpandedDesign& d, std::span<const std::uint8_t> y,
                               std::span<const double> w, double b,
                               std::vector<double>& grad) {
  std::vector<double> z;
  detail::linear_predictor(d, w, b, z);
  detail::nll_gradient(d, z, y, grad);
  return detail::mean_nll(z, y);
}

// Smallest lambda for which the all-zero weight vector is optimal.
inline double lambda_max(const ExpandedDesign& d, std::span<const std::uint8_t> y) {
  detail::check_inputs(d, y);
  std::vector<double> w(d.cols(), 0.0);
  std::vector<double> grad;
  nll_and_gradient(d, y, w, detail::base_rate_logit(y), grad);
  double out = 0.0;
  for (std::size_t c = 0; c < d.cols(); ++c) out = std::max(out, std::abs(grad[c]));
  return out;
}

inline FitResult fit_logistic(const ExpandedDesign& d, std::span<const std::uint8_t> y,
                              const FitOptions& opts = {}) {
  detail::check_inputs(d, y);
  if (!(opts.lambda >= 0.0) || !std::isfinite(opts.lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be finite and >= 0");
  }
  const std::size_t cols = d.cols();
  const double lambda = opts.lambda;
  FitResult fit;
  fit.columns = d.columns;
  fit.lambda = lambda;

  // Solve on centered, unit-variance columns. The intercept absorbs the
  // centering and the penalty on column c becomes lambda / scale[c], so the
  // objective is the same function of the original coefficients.
  std::vector<double> center(cols, 0.0);
  std::vector<double> scale(cols, 1.0);
  const double inv_rows = 1.0 / static_cast<double>(d.rows);
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) center[c] += d.matrix[r * cols + c];
  }
  for (double& m : center) m *= inv_rows;
  std::vector<double> ss_col(cols, 0.0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = d.matrix[r * cols + c] - center[c];
      ss_col[c] += v * v;
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    const double sd = std::sqrt(ss_col[c] * inv_rows);
    if (sd > 1e-12) scale[c] = sd;
  }
  ExpandedDesign sd = d;
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double& v = sd.matrix[r * cols + c];
      v = (v - center[c]) / scale[c];
    }
  }
  std::vector<double> penalty(cols);
  for (std::size_t c = 0; c < cols; ++c) penalty[c] = lambda / scale[c];
  auto weighted_l1 = [&](const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += penalty[c] * std::abs(w[c]);
    return acc;
  };
  // Subgradient residual in the original coordinates.
  std::vector<double> grad_orig(cols + 1);
  auto residual_of = [&](const std::vector<double>& w, const std::vector<double>& g) {
    for (std::size_t c = 0; c < cols; ++c) {
      grad_orig[c] = scale[c] * g[c] + center[c] * g[cols];
    }
    grad_orig[cols] = g[cols];
    return detail::optimality_residual(w, grad_orig, lambda);
  };

  std::vector<double> w(cols, 0.0);
  double b = detail::base_rate_logit(y);
  std::vector<double> z, grad;
  detail::linear_predictor(sd, w, b, z);
  double nll = detail::mean_nll(z, y);
  detail::nll_gradient(sd, z, y, grad);
  double objective = nll + weighted_l1(w);
  if (opts.record_objective) fit.objective_trace.push_back(objective);

  // Initial step from a crude curvature bound: sigma' <= 1/4.
  double max_sq = 1.0;
  for (std::size_t r = 0; r < sd.rows; ++r) {
    double sq = 1.0;
    for (double v : sd.row(r)) sq += v * v;
    max_sq = std::max(max_sq, sq);
  }
  double step = 4.0 / max_sq;

  std::vector<double> w_new(cols), z_new, grad_new;
  double residual = residual_of(w, grad);
  std::size_t iter = 0;
  while (residual > opts.tol && iter < opts.max_iter) {
    bool accepted = false;
    double b_new = b;
    double nll_new = nll;
    double obj_change = 0.0;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t c = 0; c < cols; ++c) {
        w_new[c] = detail::soft_threshold(w[c] - step * grad[c], step * penalty[c]);
      }
      b_new = b - step * grad[cols];
      detail::linear_predictor(sd, w_new, b_new, z_new);
      double lin = 0.0;
      double sq = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double delta = w_new[c] - w[c];
        lin += grad[c] * delta;
        sq += delta * delta;
      }
      const double db = b_new - b;
      lin += grad[cols] * db;
      sq += db * db;
      const double change = detail::mean_nll_change(z_new, z, y);
      nll_new = nll + change;
      double pen_change = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        pen_change += penalty[c] * (std::abs(w_new[c]) - std::abs(w[c]));
      }
      obj_change = change + pen_change;
      if (change <= lin + sq / (2.0 * step) && obj_change <= 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress at double precision
    ++iter;
    detail::nll_gradient(sd, z_new, y, grad_new);
    // Barzilai-Borwein step for the next iteration.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t c = 0; c <= cols; ++c) {
      const double s = c < cols ? w_new[c] - w[c] : b_new - b;
      const double yv = grad_new[c] - grad[c];
      ss += s * s;
      sy += s * yv;
    }
    w.swap(w_new);
    b = b_new;
    z.swap(z_new);
    grad.swap(grad_new);
    nll = nll_new;
    objective += obj_change;
    if (opts.record_objective) fit.objective_trace.push_back(objective);
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : step * 2.0;
    residual = residual_of(w, grad);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    w[c] /= scale[c];
    b -= w[c] * center[c];
  }
  fit.weights = std::move(w);
  fit.intercept = b;
  fit.iterations = iter;
  fit.final_nll = detail::mean_nll(z, y);
  fit.residual = residual;
  fit.converged = residual <= opts.tol;
  return fit;
}

inline std::vector<double> predict_proba(const FitResult& fit,
                                         const ExpandedDesign& d) {
  if (fit.weights.size() != d.cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                "fit has " + std::to_string(fit.weights.size()) +
                    " weights but design has " + std::to_string(d.cols()) +
                    " columns");
  }
  std::vector<double> z;
  detail::linear_predictor(d, fit.weights, fit.intercept, z);
  for (double& v : z) v = sigmoid(v);
  return z;
}

// Mann-Whitney AUC; tied scores count one half.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0;
  double rank_sum = 0.0;
  std::size_t t = 0;
  while (t < order.size()) {
    std::size_t u = t;
    while (u < order.size() && scores[order[u]] == scores[order[t]]) ++u;
    // Average 1-based rank over the tie block.
    const double avg = (static_cast<double>(t + 1) + static_cast<double>(u)) / 2.0;
    for (std::size_t k = t; k < u; ++k) {
      if (labels[order[k]]) {
        pos += 1.0;
        rank_sum += avg;
      }
    }
    t = u;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "AUC needs both classes present");
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

inline double log_loss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "log-loss needs matching non-empty inputs");
  }
  constexpr double kClip = 1e-15;
  double acc = 0.0;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const double q = std::clamp(probs[r], kClip, 1.0 - kClip);
    acc -= labels[r] ? std::log(q) : std::log1p(-q);
  }
  return acc / static_cast<double>(probs.size());
}

// 15 log-uniform values over [1e-4, 1e4].
inline std::vector<double> lambda_grid(std::size_t count = 15, double lo_exp = -4.0,
                                       double hi_exp = 4.0) {
  if (count < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs >= 2 values");
  std::vector<double> out(count);
  for (std::size_t t = 0; t < count; ++t) {
    out[t] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(t) /
                                         static_cast<double>(count - 1));
  }
  return out;
}

struct CvResult {
  std::vector<double> lambdas;
  std::vector<double> mean_loss;  // held-out log-loss averaged over folds
  std::size_t best_index = 0;
  double best_lambda = 0.0;
};

inline CvResult cross_validate(const ExpandedDesign& d, std::span<const std::uint8_t> y,
                               const std::vector<double>& lambdas,
                               std::size_t folds = 4, std::uint64_t seed = 0,
                               const FitOptions& base = {}) {
  detail::check_inputs(d, y);
  if (folds < 2 || folds > d.rows) {
    throw Error(ErrorCode::kInvalidArgument, "need 2 <= folds <= n");
  }
  if (lambdas.empty()) throw Error(ErrorCode::kInvalidArgument, "empty lambda grid");
  std::vector<std::size_t> perm(d.rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(seed, 0x6376);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold_of(d.rows);
  for (std::size_t t = 0; t < perm.size(); ++t) fold_of[perm[t]] = t % folds;

  CvResult out;
  out.lambdas = lambdas;
  out.mean_loss.assign(lambdas.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < d.rows; ++r) (fold_of[r] == f ? test : train).push_back(r);
    const auto dtrain = select_design_rows(d, train);
    const auto dtest = select_design_rows(d, test);
    std::vector<std::uint8_t> ytrain, ytest;
    for (auto r : train) ytrain.push_back(y[r]);
    for (auto r : test) ytest.push_back(y[r]);
    for (std::size_t t = 0; t < lambdas.size(); ++t) {
      FitOptions opts = base;
      opts.lambda = lambdas[t];
      opts.record_objective = false;
      const auto fit = fit_logistic(dtrain, ytrain, opts);
      out.mean_loss[t] += log_loss(predict_proba(fit, dtest), ytest) /
                          static_cast<double>(folds);
    }
  }
  out.best_index = static_cast<std::size_t>(
      std::min_element(out.mean_loss.begin(), out.mean_loss.end()) -
      out.mean_loss.begin());
  out.best_lambda = lambdas[out.best_index];
  return out;
}

}  // namespace quadscreen
