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

// Strong support from pairwise conditional means. For a pair (i, j) of ±1
// weak-support variables, U_ab = E[Y | X_i = a, X_j = b]. When x_i and x_j
// enter f only through x_i x_j, U only depends on ab, so U_{+,+} = U_{-,-}
// and U_{+,-} = U_{-,+}; a linear term in either variable breaks one of the
// equalities.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/parallel.hpp"

namespace quadscreen {

struct PairCheck {
  std::size_t i = 0;
  std::size_t j = 0;
  double u_pp = 0.0;
  double u_mm = 0.0;
  double u_pm = 0.0;  // x_i = +1, x_j = -1
  double u_mp = 0.0;
  // Cell sizes in the order pp, mm, pm, mp.
  std::array<std::size_t, 4> counts{};
  // Some cell is empty; its mean is reported as 0.
  bool undecidable = false;

  double diagonal_gap() const { return std::abs(u_pp - u_mm); }
  double off_diagonal_gap() const { return std::abs(u_pm - u_mp); }
};

struct StrongSupport {
  std::vector<std::pair<std::size_t, std::size_t>> quad_pairs;
  std::vector<std::size_t> linear_vars;
  std::vector<std::pair<std::size_t, std::size_t>> undecidable;
  // Some variable sits in more than one accepted pair, so the model is
  // outside the one-appearance-per-variable regime where the test is exact.
  bool heuristic = false;
};

inline std::vector<PairCheck> pair_checks(const Dataset& data,
                                          std::span<const std::size_t> weak) {
  std::vector<std::size_t> vars(weak.begin(), weak.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  if (vars.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "strong-support checks need at least two weak variables");
  }
  for (std::size_t v : vars) {
    if (v >= data.cols()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "weak variable " + std::to_string(v) + " outside dataset");
    }
    if (!data.column_is_plus_minus_one(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "strong-support checks need ±1 columns",
                  "column " + std::to_string(v));
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < vars.size(); ++a) {
    for (std::size_t b = a + 1; b < vars.size(); ++b) {
      pairs.emplace_back(vars[a], vars[b]);
    }
  }
  std::vector<PairCheck> out(pairs.size());
  const auto labels = data.labels();
  const std::size_t n = data.rows();
  parallel_for(0, pairs.size(), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    const std::uint8_t plus_i = *data.alphabet(i).code_of(1.0);
    const std::uint8_t plus_j = *data.alphabet(j).code_of(1.0);
    const auto ci = data.column(i);
    const auto cj = data.column(j);
    std::array<std::size_t, 4> count{};
    std::array<std::size_t, 4> ones{};
    for (std::size_t k = 0; k < n; ++k) {
      const bool pi = ci[k] == plus_i;
      const bool pj = cj[k] == plus_j;
      const std::size_t cell = pi == pj ? (pi ? 0 : 1) : (pi ? 2 : 3);
      ++count[cell];
      ones[cell] += labels[k];
    }
    PairCheck& check = out[t];
    check.i = i;
    check.j = j;
    check.counts = count;
    std::array<double, 4> mean{};
    for (std::size_t c = 0; c < 4; ++c) {
      if (count[c] == 0) {
        check.undecidable = true;
      } else {
        mean[c] = static_cast<double>(ones[c]) / static_cast<double>(count[c]);
      }
    }
    check.u_pp = mean[0];
    check.u_mm = mean[1];
    check.u_pm = mean[2];
    check.u_mp = mean[3];
  });
  return out;
}

// A decidable pair is quadratic iff both gaps are below theta.
inline StrongSupport classify_strong(const std::vector<PairCheck>& checks,
                                     double theta,
                                     std::span<const std::size_t> weak) {
  if (!(theta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "theta must be > 0");
  StrongSupport out;
  std::map<std::size_t, std::size_t> appearances;
  for (const auto& c : checks) {
    if (c.undecidable) {
      out.undecidable.emplace_back(c.i, c.j);
      continue;
    }
    if (c.diagonal_gap() < theta && c.off_diagonal_gap() < theta) {
      out.quad_pairs.emplace_back(std::min(c.i, c.j), std::max(c.i, c.j));
      ++appearances[c.i];
      ++appearances[c.j];
    }
  }
  std::sort(out.quad_pairs.begin(), out.quad_pairs.end());
  for (const auto& [v, count] : appearances) {
    if (count > 1) out.heuristic = true;
  }
  std::set<std::size_t> vars(weak.begin(), weak.end());
  for (std::size_t v : vars) {
    if (!appearances.contains(v)) out.linear_vars.push_back(v);
  }
  return out;
}

// 4 sqrt(ln(8 w^2) / (2 t_min)), t_min the smallest conditioning cell.
inline double default_theta(std::size_t w, std::size_t t_min) {
  if (w < 2) throw Error(ErrorCode::kInvalidArgument, "need |weak| >= 2");
  if (t_min == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty conditioning cell");
  }
  const double wd = static_cast<double>(w);
  return 4.0 * std::sqrt(std::log(wd * wd * 8.0) /
                         (2.0 * static_cast<double>(t_min)));
}

inline std::size_t min_cell_count(const std::vector<PairCheck>& checks) {
  std::size_t t = std::numeric_limits<std::size_t>::max();
  for (const auto& c : checks) {
    if (c.undecidable) continue;
    for (std::size_t k : c.counts) t = std::min(t, k);
  }
  return t == std::numeric_limits<std::size_t>::max() ? 0 : t;
}

// Every relevant variable appears in exactly one term, and no term is a
// square.
inline bool is_single_appearance(const QuadPoly& poly) {
  std::map<std::size_t, std::size_t> seen;
  for (const auto& q : poly.quad_terms) {
    if (q.i == q.j) return false;
    ++seen[q.i];
    ++seen[q.j];
  }
  for (const auto& l : poly.lin_terms) ++seen[l.j];
  for (const auto& [v, count] : seen) {
    if (count != 1) return false;
  }
  return true;
}

// True strong support of a polynomial, in the StrongSupport layout.
inline StrongSupport strong_support_of(const QuadPoly& poly) {
  StrongSupport out;
  std::set<std::size_t> quad_vars;
  for (const auto& q : poly.quad_terms) {
    if (q.i == q.j) continue;
    out.quad_pairs.emplace_back(std::min(q.i, q.j), std::max(q.i, q.j));
    quad_vars.insert(q.i);
    quad_vars.insert(q.j);
  }
  std::sort(out.quad_pairs.begin(), out.quad_pairs.end());
  std::set<std::size_t> lin;
  for (const auto& l : poly.lin_terms) {
    if (!quad_vars.contains(l.j)) lin.insert(l.j);
  }
  out.linear_vars.assign(lin.begin(), lin.end());
  out.heuristic = !is_single_appearance(poly);
  return out;
}

}  // namespace quadscreen
