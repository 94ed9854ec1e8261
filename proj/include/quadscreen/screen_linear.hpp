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

// Linear correlation screen for the weak support:
//
//   rho_i = (1/n) sum_k y_k (x_ki - mean_i),
//
// one O(n) pass per column, optionally divided by the column's empirical
// standard deviation.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/parallel.hpp"

namespace quadscreen {

struct ScreenConfig {
  enum class Mode { kThreshold, kTopK };

  Mode mode = Mode::kThreshold;
  double threshold = 0.0;
  std::size_t k = 0;
  bool normalize = false;

  static ScreenConfig with_threshold(double threshold, bool normalize = false) {
    if (!(threshold > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "threshold must be positive");
    }
    return {Mode::kThreshold, threshold, 0, normalize};
  }

  static ScreenConfig top_k(std::size_t k, bool normalize = false) {
    if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
    return {Mode::kTopK, 0.0, k, normalize};
  }
};

struct ScoreVector {
  std::vector<double> scores;
  std::vector<double> mu_hat;
  // Empirical standard deviation (n - 1 denominator); 0 for constant columns.
  std::vector<double> stddev;

  std::size_t size() const { return scores.size(); }
};

namespace detail {

// Per-code counts and label sums for one column: the sufficient statistics
// of every correlation computed in this library.
struct ColumnTally {
  std::array<double, kMaxAlphabetSize> count{};
  std::array<double, kMaxAlphabetSize> label_sum{};
  std::size_t distinct = 0;
};

inline ColumnTally tally_column(std::span<const std::uint8_t> codes,
                                std::span<const std::uint8_t> labels,
                                std::size_t alphabet_size) {
  std::array<std::size_t, kMaxAlphabetSize> count{};
  std::array<std::size_t, kMaxAlphabetSize> label_sum{};
  const std::size_t n = codes.size();
  for (std::size_t k = 0; k < n; ++k) {
    ++count[codes[k]];
    label_sum[codes[k]] += labels[k];
  }
  ColumnTally out;
  for (std::size_t a = 0; a < alphabet_size; ++a) {
    out.count[a] = static_cast<double>(count[a]);
    out.label_sum[a] = static_cast<double>(label_sum[a]);
    if (count[a] > 0) ++out.distinct;
  }
  return out;
}

}  // namespace detail

inline ScoreVector correlation_scores(const Dataset& data, bool normalize) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "dataset has no rows");
  if (normalize && n < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "normalized scores need n >= 2 (stddev undefined)");
  }
  ScoreVector out;
  out.scores.assign(p, 0.0);
  out.mu_hat.assign(p, 0.0);
  out.stddev.assign(p, 0.0);
  const auto labels = data.labels();
  const double inv_n = 1.0 / static_cast<double>(n);

  parallel_for(0, p, [&](std::size_t i) {
    const Alphabet& alphabet = data.alphabet(i);
    const auto tally =
        detail::tally_column(data.column(i), labels, alphabet.size());
    double mu = 0.0;
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
      mu += tally.count[a] * alphabet[a];
    }
    mu *= inv_n;
    out.mu_hat[i] = mu;
    if (tally.distinct <= 1) {
      // A constant column has X_i - mu_i = 0 on every row.
      for (std::size_t a = 0; a < alphabet.size(); ++a) {
        if (tally.count[a] > 0) out.mu_hat[i] = alphabet[a];
      }
      return;
    }
    double rho = 0.0;
    double ss = 0.0;
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
      const double centered = alphabet[a] - mu;
      rho += tally.label_sum[a] * centered;
      ss += tally.count[a] * centered * centered;
    }
    rho *= inv_n;
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    out.stddev[i] = sd;
    out.scores[i] = normalize ? (sd > 0.0 ? rho / sd : 0.0) : rho;
  });
  return out;
}

// Indices ranked by descending key, ties broken by lower index.
inline std::vector<std::size_t> rank_descending(
    const std::vector<double>& key, const std::vector<std::size_t>& candidates) {
  std::vector<std::size_t> order = candidates;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

// Threshold mode keeps |score_i| > threshold; top-k keeps the k largest
// |score_i|. Zero-variance columns are never selected. Output is sorted.
inline std::vector<std::size_t> select_weak_support(const ScoreVector& scores,
                                                    const ScreenConfig& cfg) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores.stddev.empty() || scores.stddev[i] > 0.0) eligible.push_back(i);
  }
  std::vector<std::size_t> chosen;
  if (cfg.mode == ScreenConfig::Mode::kThreshold) {
    for (std::size_t i : eligible) {
      if (std::abs(scores.scores[i]) > cfg.threshold) chosen.push_back(i);
    }
    return chosen;
  }
  std::vector<double> magnitude(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    magnitude[i] = std::abs(scores.scores[i]);
  }
  auto order = rank_descending(magnitude, eligible);
  order.resize(std::min(order.size(), cfg.k));
  std::sort(order.begin(), order.end());
  return order;
}

// Samples sufficient for the threshold test to succeed with polynomially
// small failure probability: ceil(8 c ln(p) / eps^2).
inline std::size_t min_samples(std::size_t p, double eps, double c) {
  if (p < 2) throw Error(ErrorCode::kInvalidArgument, "p must be >= 2");
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (!(c > 1.0)) throw Error(ErrorCode::kInvalidArgument, "c must be > 1");
  const double bound =
      8.0 * c * std::log(static_cast<double>(p)) / (eps * eps);
  return static_cast<std::size_t>(std::ceil(bound));
}

// Union bound 2p exp(-n eps^2 / 8) on any |rho_hat_i - rho_i| >= eps for ±1
// features (Y (X_i - mu_i) has range 4).
inline double hoeffding_failure_bound(std::size_t p, std::size_t n, double eps) {
  return 2.0 * static_cast<double>(p) *
         std::exp(-static_cast<double>(n) * eps * eps / 8.0);
}

}  // namespace quadscreen
