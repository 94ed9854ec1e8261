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

// Generative model for sparse quadratic logistic regression over finite
// alphabets:
//
//   Pr(Y = 1 | X = x) = sigma(gamma * f(x)),
//   f(x) = sum_{(i,j) in Q} beta_ij x_i x_j + sum_{j in L} alpha_j x_j + c,
//
// with independent covariates, each drawn from its own pmf over a small
// finite alphabet.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/parallel.hpp"
#include "quadscreen/rng.hpp"

namespace quadscreen {

inline constexpr std::size_t kMaxAlphabetSize = 64;

// Ordered set of distinct reals a covariate can take. Codes used throughout
// the library are positions in this list.
class Alphabet {
 public:
  Alphabet() : Alphabet(std::vector<double>{-1.0, 1.0}) {}

  explicit Alphabet(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2 || values_.size() > kMaxAlphabetSize) {
      throw Error(ErrorCode::kInvalidArgument,
                  "alphabet size must be in [2, 64], got " +
                      std::to_string(values_.size()));
    }
    for (std::size_t a = 0; a < values_.size(); ++a) {
      if (!std::isfinite(values_[a])) {
        throw Error(ErrorCode::kInvalidArgument, "alphabet value not finite");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (values_[a] == values_[b]) {
          throw Error(ErrorCode::kInvalidArgument,
                      "alphabet values must be distinct");
        }
      }
    }
  }

  static Alphabet plus_minus_one() { return Alphabet({-1.0, 1.0}); }
  static Alphabet zero_one() { return Alphabet({0.0, 1.0}); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t code) const { return values_[code]; }
  std::span<const double> values() const { return values_; }

  std::optional<std::size_t> code_of(double value) const {
    for (std::size_t a = 0; a < values_.size(); ++a) {
      if (values_[a] == value) return a;
    }
    return std::nullopt;
  }

  bool is_plus_minus_one() const {
    return values_.size() == 2 && code_of(-1.0) && code_of(1.0);
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<double> values_;
};

struct QuadTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  double beta = 0.0;
  friend bool operator==(const QuadTerm&, const QuadTerm&) = default;
};

struct LinTerm {
  std::size_t j = 0;
  double alpha = 0.0;
  friend bool operator==(const LinTerm&, const LinTerm&) = default;
};

struct QuadPoly {
  std::vector<QuadTerm> quad_terms;
  std::vector<LinTerm> lin_terms;
  double constant = 0.0;

  std::size_t sparsity() const { return quad_terms.size() + lin_terms.size(); }

  // Largest |coefficient| including the constant.
  double max_abs_coefficient() const {
    double b = std::abs(constant);
    for (const auto& t : quad_terms) b = std::max(b, std::abs(t.beta));
    for (const auto& t : lin_terms) b = std::max(b, std::abs(t.alpha));
    return b;
  }

  friend bool operator==(const QuadPoly&, const QuadPoly&) = default;
};

// Sorted set of variables the polynomial depends on.
inline std::vector<std::size_t> weak_support(const QuadPoly& poly) {
  std::set<std::size_t> vars;
  for (const auto& t : poly.quad_terms) {
    vars.insert(t.i);
    vars.insert(t.j);
  }
  for (const auto& t : poly.lin_terms) vars.insert(t.j);
  return {vars.begin(), vars.end()};
}

// Puts every quadratic term in i <= j form and sorts terms. Does not merge
// duplicates; validate_poly rejects them.
inline QuadPoly canonicalized(QuadPoly poly) {
  for (auto& t : poly.quad_terms) {
    if (t.i > t.j) std::swap(t.i, t.j);
  }
  std::sort(poly.quad_terms.begin(), poly.quad_terms.end(),
            [](const QuadTerm& a, const QuadTerm& b) {
              return std::pair(a.i, a.j) < std::pair(b.i, b.j);
            });
  std::sort(poly.lin_terms.begin(), poly.lin_terms.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.j < b.j; });
  return poly;
}

inline void validate_poly(const QuadPoly& poly, std::size_t p) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t t = 0; t < poly.quad_terms.size(); ++t) {
    const auto& q = poly.quad_terms[t];
    if (q.i >= p || q.j >= p) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "quadratic term index out of range for p=" +
                      std::to_string(p),
                  "quad_terms[" + std::to_string(t) + "]");
    }
    if (!pairs.insert(std::minmax(q.i, q.j)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate quadratic term",
                  "quad_terms[" + std::to_string(t) + "]");
    }
    if (!std::isfinite(q.beta)) {
      throw Error(ErrorCode::kInvalidArgument, "coefficient not finite",
                  "quad_terms[" + std::to_string(t) + "]");
    }
  }
  std::set<std::size_t> lins;
  for (std::size_t t = 0; t < poly.lin_terms.size(); ++t) {
    const auto& l = poly.lin_terms[t];
    if (l.j >= p) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "linear term index out of range for p=" + std::to_string(p),
                  "lin_terms[" + std::to_string(t) + "]");
    }
    if (!lins.insert(l.j).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate linear term",
                  "lin_terms[" + std::to_string(t) + "]");
    }
    if (!std::isfinite(l.alpha)) {
      throw Error(ErrorCode::kInvalidArgument, "coefficient not finite",
                  "lin_terms[" + std::to_string(t) + "]");
    }
  }
}

// Evaluates f at a full assignment. No bounds checks.
inline double eval_poly_unchecked(const QuadPoly& poly,
                                  std::span<const double> x) {
  double acc = poly.constant;
  for (const auto& t : poly.lin_terms) acc += t.alpha * x[t.j];
  for (const auto& t : poly.quad_terms) acc += t.beta * x[t.i] * x[t.j];
  return acc;
}

inline double eval_poly(const QuadPoly& poly, std::span<const double> x) {
  for (const auto& t : poly.quad_terms) {
    if (t.i >= x.size() || t.j >= x.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "quadratic term (" + std::to_string(t.i) + "," +
                      std::to_string(t.j) + ") outside assignment of length " +
                      std::to_string(x.size()));
    }
  }
  for (const auto& t : poly.lin_terms) {
    if (t.j >= x.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "linear term " + std::to_string(t.j) +
                      " outside assignment of length " +
                      std::to_string(x.size()));
    }
  }
  return eval_poly_unchecked(poly, x);
}

enum class SigmaKind { kSigmoid, kPiecewiseLinear };

inline std::string to_string(SigmaKind kind) {
  return kind == SigmaKind::kSigmoid ? "sigmoid" : "piecewise_linear";
}

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// L(t): identity on [-1, 1], clipped outside.
inline double clipped_linear(double t) { return std::clamp(t, -1.0, 1.0); }

inline double apply_sigma(SigmaKind kind, double t) {
  switch (kind) {
    case SigmaKind::kSigmoid:
      return sigmoid(t);
    case SigmaKind::kPiecewiseLinear:
      return 0.5 + 0.5 * clipped_linear(t);
  }
  return 0.5;
}

struct GenerativeModel {
  std::size_t p = 0;
  QuadPoly poly;
  double gamma = 1.0;
  SigmaKind sigma = SigmaKind::kSigmoid;
  std::vector<Alphabet> alphabets;        // one per variable
  std::vector<std::vector<double>> marginals;  // pmf per variable, by code
  std::uint64_t seed = 0;

  // Pr[X_i = +1] for a ±1 variable.
  double bias(std::size_t i) const {
    const auto plus = alphabets.at(i).code_of(1.0);
    if (!alphabets[i].is_plus_minus_one() || !plus) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bias is defined only for ±1 variables",
                  "variable " + std::to_string(i));
    }
    return marginals[i][*plus];
  }

  double mean(std::size_t i) const {
    double mu = 0.0;
    for (std::size_t a = 0; a < alphabets[i].size(); ++a) {
      mu += marginals[i][a] * alphabets[i][a];
    }
    return mu;
  }

  bool is_binary() const {
    return std::all_of(alphabets.begin(), alphabets.end(),
                       [](const Alphabet& a) { return a.is_plus_minus_one(); });
  }
};

inline void validate_pmf(std::span<const double> pmf, std::size_t expected,
                         const std::string& where) {
  if (pmf.size() != expected) {
    throw Error(ErrorCode::kInvalidDistribution,
                "pmf has " + std::to_string(pmf.size()) +
                    " entries, alphabet has " + std::to_string(expected),
                where);
  }
  double total = 0.0;
  for (double v : pmf) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidDistribution,
                  "pmf entries must be finite and non-negative", where);
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidDistribution,
                "pmf sums to " + std::to_string(total) + ", not 1", where);
  }
}

inline void validate_model(const GenerativeModel& model) {
  if (model.p == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model must have p >= 1");
  }
  if (!(model.gamma > 0.0) || !std::isfinite(model.gamma)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  }
  if (model.alphabets.size() != model.p || model.marginals.size() != model.p) {
    throw Error(ErrorCode::kInvalidArgument,
                "need one alphabet and one pmf per variable");
  }
  validate_poly(model.poly, model.p);
  for (std::size_t i = 0; i < model.p; ++i) {
    validate_pmf(model.marginals[i], model.alphabets[i].size(),
                 "marginals[" + std::to_string(i) + "]");
  }
}

// ±1 model with Pr[X_i = +1] = biases[i]. Squared terms x_i^2 = 1 are folded
// into the constant.
inline GenerativeModel make_binary_model(QuadPoly poly,
                                         std::span<const double> biases,
                                         double gamma,
                                         SigmaKind sigma = SigmaKind::kSigmoid) {
  GenerativeModel m;
  m.p = biases.size();
  std::vector<QuadTerm> kept;
  for (const auto& t : poly.quad_terms) {
    if (t.i == t.j) {
      poly.constant += t.beta;
    } else {
      kept.push_back(t);
    }
  }
  poly.quad_terms = std::move(kept);
  m.poly = canonicalized(std::move(poly));
  m.gamma = gamma;
  m.sigma = sigma;
  m.alphabets.assign(m.p, Alphabet::plus_minus_one());
  m.marginals.reserve(m.p);
  for (double b : biases) m.marginals.push_back({1.0 - b, b});
  validate_model(m);
  return m;
}

// n × p covariates stored as alphabet codes (column-major) plus {0,1} labels.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t n, std::size_t p, std::vector<Alphabet> alphabets,
          std::vector<std::uint8_t> codes, std::vector<std::uint8_t> labels,
          std::uint64_t seed = 0)
      : n_(n),
        p_(p),
        alphabets_(std::move(alphabets)),
        codes_(std::move(codes)),
        labels_(std::move(labels)),
        seed_(seed) {
    if (alphabets_.size() != p_) {
      throw Error(ErrorCode::kInvalidArgument, "need one alphabet per column");
    }
    if (codes_.size() != n_ * p_) {
      throw Error(ErrorCode::kInvalidArgument, "code matrix has wrong size");
    }
    if (labels_.size() != n_) {
      throw Error(ErrorCode::kInvalidArgument, "label vector has wrong size");
    }
    for (std::size_t k = 0; k < n_; ++k) {
      if (labels_[k] > 1) {
        throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1",
                    "row " + std::to_string(k));
      }
    }
    for (std::size_t i = 0; i < p_; ++i) {
      const auto col = column(i);
      const auto size = alphabets_[i].size();
      for (std::size_t k = 0; k < n_; ++k) {
        if (col[k] >= size) {
          throw Error(ErrorCode::kInvalidArgument,
                      "code outside column alphabet",
                      "row " + std::to_string(k) + ", column " +
                          std::to_string(i));
        }
      }
    }
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const std::uint8_t> column(std::size_t i) const {
    return {codes_.data() + i * n_, n_};
  }
  std::span<const std::uint8_t> labels() const { return labels_; }
  const Alphabet& alphabet(std::size_t i) const { return alphabets_[i]; }
  const std::vector<Alphabet>& alphabets() const { return alphabets_; }

  double value(std::size_t row, std::size_t col) const {
    return alphabets_[col][codes_[col * n_ + row]];
  }

  std::vector<double> row_values(std::size_t row) const {
    std::vector<double> out(p_);
    for (std::size_t i = 0; i < p_; ++i) out[i] = value(row, i);
    return out;
  }

  bool column_is_plus_minus_one(std::size_t i) const {
    return alphabets_[i].is_plus_minus_one();
  }

  // Rows in `subset`, same columns and alphabets.
  Dataset select_rows(std::span<const std::size_t> subset) const {
    std::vector<std::uint8_t> codes(subset.size() * p_);
    std::vector<std::uint8_t> labels(subset.size());
    for (std::size_t i = 0; i < p_; ++i) {
      const auto col = column(i);
      for (std::size_t r = 0; r < subset.size(); ++r) {
        codes[i * subset.size() + r] = col[subset[r]];
      }
    }
    for (std::size_t r = 0; r < subset.size(); ++r) {
      labels[r] = labels_[subset[r]];
    }
    return Dataset(subset.size(), p_, alphabets_, std::move(codes),
                   std::move(labels), seed_);
  }

  // Same rows, columns reordered so new column c is old column order[c].
  Dataset select_columns(std::span<const std::size_t> order) const {
    std::vector<std::uint8_t> codes(n_ * order.size());
    std::vector<Alphabet> alphabets;
    alphabets.reserve(order.size());
    for (std::size_t c = 0; c < order.size(); ++c) {
      const auto col = column(order[c]);
      std::copy(col.begin(), col.end(), codes.begin() + c * n_);
      alphabets.push_back(alphabets_[order[c]]);
    }
    return Dataset(n_, order.size(), std::move(alphabets), std::move(codes),
                   labels_, seed_);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<Alphabet> alphabets_;
  std::vector<std::uint8_t> codes_;
  std::vector<std::uint8_t> labels_;
  std::uint64_t seed_ = 0;
};

namespace detail {

// Stream tag for labels; columns use their own index.
inline constexpr std::uint64_t kLabelStream = 0xFFFFFFFFFFFFFFFFULL;

inline std::uint8_t draw_code(std::span<const double> cdf, double u) {
  const std::size_t last = cdf.size() - 1;
  for (std::size_t a = 0; a < last; ++a) {
    if (u < cdf[a]) return static_cast<std::uint8_t>(a);
  }
  return static_cast<std::uint8_t>(last);
}

}  // namespace detail

// Draws n i.i.d. rows from the model. Entry (row k, column i) depends only
// on (seed, i, k) and label k only on (seed, k), so output is identical for
// any thread count.
inline Dataset sample_dataset(const GenerativeModel& model, std::size_t n,
                              std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  validate_model(model);
  const std::size_t p = model.p;
  std::vector<std::uint8_t> codes(n * p);

  parallel_for(0, p, [&](std::size_t i) {
    const auto& pmf = model.marginals[i];
    // Zero-mass trailing codes must never be drawn, so the final bucket is
    // the last code with positive probability.
    std::size_t last_positive = 0;
    for (std::size_t a = 0; a < pmf.size(); ++a) {
      if (pmf[a] > 0.0) last_positive = a;
    }
    std::vector<double> cdf(last_positive + 1);
    double acc = 0.0;
    for (std::size_t a = 0; a <= last_positive; ++a) {
      acc += pmf[a];
      cdf[a] = acc;
    }
    const std::uint64_t key = derive_key(seed, i);
    std::uint8_t* out = codes.data() + i * n;
    if (cdf.size() == 2) {
      const double threshold = cdf[0];
      for (std::size_t k = 0; k < n; ++k) {
        out[k] = unit_interval(counter_bits(key, k)) < threshold ? 0 : 1;
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        out[k] = detail::draw_code(cdf, unit_interval(counter_bits(key, k)));
      }
    }
  });

  std::vector<double> f(n, model.poly.constant);
  auto values_of = [&](std::size_t col, std::size_t k) {
    return model.alphabets[col][codes[col * n + k]];
  };
  for (const auto& t : model.poly.lin_terms) {
    for (std::size_t k = 0; k < n; ++k) f[k] += t.alpha * values_of(t.j, k);
  }
  for (const auto& t : model.poly.quad_terms) {
    for (std::size_t k = 0; k < n; ++k) {
      f[k] += t.beta * values_of(t.i, k) * values_of(t.j, k);
    }
  }
  std::vector<std::uint8_t> labels(n);
  const std::uint64_t label_key = derive_key(seed, detail::kLabelStream);
  for (std::size_t k = 0; k < n; ++k) {
    const double prob = apply_sigma(model.sigma, model.gamma * f[k]);
    labels[k] = unit_interval(counter_bits(label_key, k)) < prob ? 1 : 0;
  }
  return Dataset(n, p, model.alphabets, std::move(codes), std::move(labels),
                 seed);
}

struct CoeffRange {
  double lo = 0.1;
  double hi = 1.0;
};

struct RandomPolyOptions {
  // Multiply each coefficient by an independent random sign.
  bool random_sign = false;
  // Permit x_i * x_i among the quadratic terms.
  bool allow_squares = false;
};

// Sparse random polynomial whose weak support lies inside a uniformly chosen
// r-subset of [p]: linear terms pick distinct variables from that subset,
// quadratic terms pick distinct pairs formed by it.
inline QuadPoly random_quad_poly(std::size_t p, std::size_t num_lin,
                                 std::size_t num_quad, std::size_t r,
                                 CoeffRange range, std::uint64_t seed,
                                 RandomPolyOptions options = {}) {
  if (r > p) {
    throw Error(ErrorCode::kInfeasible, "r must not exceed p");
  }
  if (range.lo > range.hi) {
    throw Error(ErrorCode::kInvalidArgument, "empty coefficient range");
  }
  if (num_lin > r) {
    throw Error(ErrorCode::kInfeasible,
                "cannot place " + std::to_string(num_lin) +
                    " linear terms on " + std::to_string(r) + " variables");
  }
  const std::size_t pairs =
      options.allow_squares ? r * (r + 1) / 2 : r * (r > 0 ? r - 1 : 0) / 2;
  if (num_quad > pairs) {
    throw Error(ErrorCode::kInfeasible,
                "cannot place " + std::to_string(num_quad) +
                    " quadratic terms on " + std::to_string(r) +
                    " variables (at most " + std::to_string(pairs) + ")");
  }
  CounterRng rng(seed, 0x706F6C79ULL);
  const auto relevant = sample_without_replacement(rng, p, r);
  auto coefficient = [&] {
    double v = rng.uniform(range.lo, range.hi);
    if (options.random_sign && rng.coin()) v = -v;
    return v;
  };
  QuadPoly poly;
  for (std::size_t idx : sample_without_replacement(rng, r, num_lin)) {
    poly.lin_terms.push_back({relevant[idx], 0.0});
  }
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t b = options.allow_squares ? a : a + 1; b < r; ++b) {
      candidates.emplace_back(relevant[a], relevant[b]);
    }
  }
  for (std::size_t idx :
       sample_without_replacement(rng, candidates.size(), num_quad)) {
    poly.quad_terms.push_back({candidates[idx].first, candidates[idx].second,
                               0.0});
  }
  for (auto& t : poly.lin_terms) t.alpha = coefficient();
  for (auto& t : poly.quad_terms) t.beta = coefficient();
  return canonicalized(std::move(poly));
}

// Every quadratic term over a uniformly chosen s-subset of [p] (pairs i < j,
// plus i = j when include_squares), coefficients uniform in `range`.
inline QuadPoly dense_quadratic_poly(std::size_t p, std::size_t s,
                                     CoeffRange range, std::uint64_t seed,
                                     bool include_squares) {
  if (s > p) throw Error(ErrorCode::kInfeasible, "s must not exceed p");
  CounterRng rng(seed, 0x64656E73ULL);
  auto support = sample_without_replacement(rng, p, s);
  std::sort(support.begin(), support.end());
  QuadPoly poly;
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = include_squares ? a : a + 1; b < s; ++b) {
      poly.quad_terms.push_back(
          {support[a], support[b], rng.uniform(range.lo, range.hi)});
    }
  }
  return canonicalized(std::move(poly));
}

}  // namespace quadscreen
