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

// Hash-based nonlinear correlation screen for finite non-binary alphabets.
// Each covariate is pushed through m random maps g_l : alphabet -> [-U, U]
// and the label is correlated with the standardized hashed value:
//
//   corr_il = sum_k y_k (g_l(x_ki) - mean_il) / (n * sd_il),
//   C_i     = (1/m) sum_l corr_il,
//
// with sd_il using the n - 1 denominator.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/parallel.hpp"
#include "quadscreen/rng.hpp"
#include "quadscreen/screen_linear.hpp"

namespace quadscreen {

inline constexpr std::size_t kMaxHashRedraws = 8;
inline constexpr std::int64_t kDefaultHashRange = 1000;
inline constexpr std::size_t kDefaultHashCount = 10;

// m lookup tables indexed by alphabet position. Entries are a pure function
// of (seed, l, position); a table that is constant on the codes observed in
// some column is replaced for that column by a redraw keyed additionally on
// (column, attempt).
class HashFamily {
 public:
  HashFamily(std::size_t alphabet_size, std::size_t m, std::int64_t range,
             std::uint64_t seed)
      : alphabet_size_(alphabet_size), m_(m), range_(range), seed_(seed) {
    if (m == 0) throw Error(ErrorCode::kInvalidArgument, "need m >= 1 hashes");
    if (range < 1) throw Error(ErrorCode::kInvalidArgument, "need U >= 1");
    if (alphabet_size < 2 || alphabet_size > kMaxAlphabetSize) {
      throw Error(ErrorCode::kInvalidArgument, "bad alphabet size");
    }
    tables_.resize(m * alphabet_size);
    for (std::size_t l = 0; l < m; ++l) {
      for (std::size_t a = 0; a < alphabet_size; ++a) {
        tables_[l * alphabet_size + a] =
            integer_in(counter_bits(derive_key(seed, l), a), -range, range);
      }
    }
  }

  std::size_t size() const { return m_; }
  std::size_t alphabet_size() const { return alphabet_size_; }
  std::int64_t range() const { return range_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const std::int64_t> table(std::size_t l) const {
    return {tables_.data() + l * alphabet_size_, alphabet_size_};
  }

  // Table l as used on `column` after `attempt` redraws (attempt 0 is the
  // shared table).
  std::vector<std::int64_t> table_for(std::size_t l, std::size_t column,
                                      std::size_t attempt) const {
    if (attempt == 0) {
      const auto base = table(l);
      return {base.begin(), base.end()};
    }
    std::vector<std::int64_t> out(alphabet_size_);
    const std::uint64_t key = derive_key(seed_, l, column, attempt);
    for (std::size_t a = 0; a < alphabet_size_; ++a) {
      out[a] = integer_in(counter_bits(key, a), -range_, range_);
    }
    return out;
  }

 private:
  std::size_t alphabet_size_;
  std::size_t m_;
  std::int64_t range_;
  std::uint64_t seed_;
  std::vector<std::int64_t> tables_;
};

inline HashFamily make_hash_family(const Alphabet& alphabet, std::size_t m,
                                   std::int64_t range, std::uint64_t seed) {
  return HashFamily(alphabet.size(), m, range, seed);
}

struct NonlinearScores {
  std::size_t hashes = 0;
  // C_i: mean of the signed per-hash standardized correlations.
  std::vector<double> c;
  // Mean of |per-hash standardized correlation|; the ranking key for top-k.
  std::vector<double> c_abs;
  // per_hash[i * hashes + l].
  std::vector<double> per_hash;
  // Number of hashes per column that stayed constant after all redraws and
  // contributed 0.
  std::vector<std::size_t> degenerate;

  std::size_t size() const { return c.size(); }
  double at(std::size_t i, std::size_t l) const {
    return per_hash[i * hashes + l];
  }
  bool warning() const {
    for (auto d : degenerate) {
      if (d > 0) return true;
    }
    return false;
  }
};

inline NonlinearScores nonlinear_scores(const Dataset& data,
                                        const HashFamily& family) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  const std::size_t m = family.size();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "nonlinear scores need n >= 2");
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (data.alphabet(i).size() != family.alphabet_size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "column alphabet size does not match the hash family",
                  "column " + std::to_string(i));
    }
  }
  NonlinearScores out;
  out.hashes = m;
  out.c.assign(p, 0.0);
  out.c_abs.assign(p, 0.0);
  out.per_hash.assign(p * m, 0.0);
  out.degenerate.assign(p, 0);
  const auto labels = data.labels();
  const double dn = static_cast<double>(n);
  const std::size_t size = family.alphabet_size();

  parallel_for(0, p, [&](std::size_t i) {
    const auto tally = detail::tally_column(data.column(i), labels, size);
    double sum = 0.0;
    double sum_abs = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      double corr = 0.0;
      bool ok = false;
      for (std::size_t attempt = 0; attempt <= kMaxHashRedraws && !ok;
           ++attempt) {
        const auto table = family.table_for(l, i, attempt);
        double mean = 0.0;
        for (std::size_t a = 0; a < size; ++a) {
          mean += tally.count[a] * static_cast<double>(table[a]);
        }
        mean /= dn;
        double ss = 0.0;
        double cross = 0.0;
        for (std::size_t a = 0; a < size; ++a) {
          const double centered = static_cast<double>(table[a]) - mean;
          ss += tally.count[a] * centered * centered;
          cross += tally.label_sum[a] * centered;
        }
        if (ss > 0.0) {
          const double sd = std::sqrt(ss / (dn - 1.0));
          corr = cross / (dn * sd);
          ok = true;
        }
        // A single observed code can never be rescued by a redraw.
        if (tally.distinct <= 1) break;
      }
      if (!ok) ++out.degenerate[i];
      out.per_hash[i * m + l] = corr;
      sum += corr;
      sum_abs += std::abs(corr);
    }
    out.c[i] = sum / static_cast<double>(m);
    out.c_abs[i] = sum_abs / static_cast<double>(m);
  });
  return out;
}

// Threshold mode keeps C_i > theta on the signed score. Top-k ranks by the
// mean absolute per-hash correlation: the hash family is symmetric under
// g -> -g, so signed per-hash correlations of a relevant variable average
// toward zero across hashes while their magnitudes do not. Output is sorted.
inline std::vector<std::size_t> select_weak_support_nl(
    const NonlinearScores& scores, const ScreenConfig& cfg) {
  std::vector<std::size_t> chosen;
  if (cfg.mode == ScreenConfig::Mode::kThreshold) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores.c[i] > cfg.threshold) chosen.push_back(i);
    }
    return chosen;
  }
  std::vector<std::size_t> all(scores.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto order = rank_descending(scores.c_abs, all);
  order.resize(std::min(order.size(), cfg.k));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace quadscreen
