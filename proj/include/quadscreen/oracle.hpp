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

// Exact population quantities by enumerating every assignment of the
// relevant variables. Irrelevant variables never enter f, so they are
// marginalized out for free.
//
// For a ±1 variable k with bias p_k the correlation decomposes over the
// distinct values v of f:
//
//   E[Y (X_k - mu_k)] = 2 p_k (1 - p_k) [ sigma(0) g(0) 1{f takes 0}
//                                         + sum_v sigma(gamma v) g(v) ],
//   g(v) = Pr(f = v | x_k = +1) - Pr(f = v | x_k = -1).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/strong_support.hpp"

namespace quadscreen {

inline constexpr std::size_t kMaxEnumeration = std::size_t{1} << 24;
// Enumerated f-values closer than this are the same value.
inline constexpr double kValueTolerance = 1e-9;

namespace detail {

inline void check_budget(const GenerativeModel& model,
                         std::span<const std::size_t> vars) {
  std::size_t total = 1;
  for (std::size_t v : vars) {
    total *= model.alphabets[v].size();
    if (total > kMaxEnumeration) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "enumeration over " + std::to_string(vars.size()) +
                      " variables exceeds 2^24 assignments");
    }
  }
}

// Calls fn(x, weight) for every assignment of `vars`, where x is a full
// length-p vector (entries outside `vars` hold `fixed`) and weight is the
// product of the marginals of `vars`.
template <typename Fn>
void for_each_assignment(const GenerativeModel& model,
                         std::span<const std::size_t> vars,
                         std::vector<double> x, Fn&& fn) {
  check_budget(model, vars);
  std::vector<std::size_t> code(vars.size(), 0);
  while (true) {
    double w = 1.0;
    for (std::size_t t = 0; t < vars.size(); ++t) {
      x[vars[t]] = model.alphabets[vars[t]][code[t]];
      w *= model.marginals[vars[t]][code[t]];
    }
    fn(static_cast<const std::vector<double>&>(x), w);
    std::size_t t = 0;
    while (t < vars.size()) {
      if (++code[t] < model.alphabets[vars[t]].size()) break;
      code[t] = 0;
      ++t;
    }
    if (t == vars.size()) break;
  }
}

inline std::vector<std::size_t> without(std::vector<std::size_t> vars,
                                        std::size_t drop) {
  vars.erase(std::remove(vars.begin(), vars.end(), drop), vars.end());
  return vars;
}

inline void check_variable(const GenerativeModel& model, std::size_t k) {
  if (k >= model.p) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "variable " + std::to_string(k) + " outside model with p=" +
                    std::to_string(model.p));
  }
}

inline double plus_minus_bias(const GenerativeModel& model, std::size_t k) {
  const double b = model.bias(k);
  if (!(b > 0.0 && b < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "conditional profile needs bias strictly inside (0, 1)",
                "variable " + std::to_string(k));
  }
  return b;
}

}  // namespace detail

struct ValueProfile {
  std::size_t var = 0;
  double bias = 0.5;
  // Distinct nonzero values of f, ascending by |v| (negative first on ties).
  std::vector<double> values;
  std::vector<double> prob_plus;   // Pr(f = v | x_k = +1)
  std::vector<double> prob_minus;  // Pr(f = v | x_k = -1)
  std::vector<double> influence;   // g(v)
  bool has_zero = false;
  double zero_prob_plus = 0.0;
  double zero_prob_minus = 0.0;
  double zero_influence = 0.0;

  std::size_t size() const { return values.size(); }
};

inline ValueProfile enumerate_values(const GenerativeModel& model,
                                     std::size_t k) {
  detail::check_variable(model, k);
  const double bias = detail::plus_minus_bias(model, k);
  const auto others = detail::without(weak_support(model.poly), k);
  auto all = others;
  all.push_back(k);
  detail::check_budget(model, all);

  struct Entry {
    double f;
    double w;
    bool plus;
  };
  std::vector<Entry> entries;
  for (double sign : {1.0, -1.0}) {
    std::vector<double> x(model.p, 0.0);
    x[k] = sign;
    detail::for_each_assignment(
        model, others, std::move(x), [&](const std::vector<double>& xs, double w) {
          entries.push_back({eval_poly_unchecked(model.poly, xs), w, sign > 0});
        });
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.f < b.f; });

  struct Group {
    double value;
    double plus = 0.0;
    double minus = 0.0;
  };
  std::vector<Group> groups;
  for (const auto& e : entries) {
    if (groups.empty() || e.f - groups.back().value >= kValueTolerance) {
      groups.push_back({e.f});
    }
    (e.plus ? groups.back().plus : groups.back().minus) += e.w;
  }

  ValueProfile out;
  out.var = k;
  out.bias = bias;
  std::vector<Group> nonzero;
  for (const auto& g : groups) {
    if (std::abs(g.value) < kValueTolerance) {
      out.has_zero = true;
      out.zero_prob_plus += g.plus;
      out.zero_prob_minus += g.minus;
    } else {
      nonzero.push_back(g);
    }
  }
  out.zero_influence = out.zero_prob_plus - out.zero_prob_minus;
  std::stable_sort(nonzero.begin(), nonzero.end(),
                   [](const Group& a, const Group& b) {
                     const double aa = std::abs(a.value);
                     const double bb = std::abs(b.value);
                     if (aa != bb) return aa < bb;
                     return a.value < b.value;
                   });
  for (const auto& g : nonzero) {
    out.values.push_back(g.value);
    out.prob_plus.push_back(g.plus);
    out.prob_minus.push_back(g.minus);
    out.influence.push_back(g.plus - g.minus);
  }
  return out;
}

// Correlation from a value profile at an arbitrary scale and nonlinearity.
inline double correlation_from_profile(const ValueProfile& profile,
                                       double gamma, SigmaKind sigma) {
  double acc = profile.has_zero
                   ? apply_sigma(sigma, 0.0) * profile.zero_influence
                   : 0.0;
  for (std::size_t t = 0; t < profile.size(); ++t) {
    acc += apply_sigma(sigma, gamma * profile.values[t]) * profile.influence[t];
  }
  return 2.0 * profile.bias * (1.0 - profile.bias) * acc;
}

// E[sigma(gamma f(X)) (X_k - mu_k)] by plain enumeration over the weak
// support and k. Independent of the value-profile route.
inline double population_correlation_direct(const GenerativeModel& model,
                                            std::size_t k) {
  detail::check_variable(model, k);
  auto vars = weak_support(model.poly);
  if (!std::binary_search(vars.begin(), vars.end(), k)) {
    vars.insert(std::lower_bound(vars.begin(), vars.end(), k), k);
  }
  const double mu = model.mean(k);
  double acc = 0.0;
  detail::for_each_assignment(
      model, vars, std::vector<double>(model.p, 0.0),
      [&](const std::vector<double>& x, double w) {
        acc += w * apply_sigma(model.sigma,
                               model.gamma * eval_poly_unchecked(model.poly, x)) *
               (x[k] - mu);
      });
  return acc;
}

// Value-profile route for ±1 variables with bias in (0, 1); direct
// expectation otherwise.
inline double population_correlation(const GenerativeModel& model,
                                     std::size_t k) {
  detail::check_variable(model, k);
  if (model.alphabets[k].is_plus_minus_one()) {
    const double b = model.bias(k);
    if (b > 0.0 && b < 1.0) {
      return correlation_from_profile(enumerate_values(model, k), model.gamma,
                                      model.sigma);
    }
  }
  return population_correlation_direct(model, k);
}

// ---------------------------------------------------------------------------
// Unique sign property.

struct UspEntry {
  double value = 0.0;
  // |f| = |value| pins the sign of every parity x_i x_j (Q) and x_j (L).
  bool unique_sign = false;
  // Some other value equals -value.
  bool has_negation_partner = false;
};

struct UspReport {
  std::vector<UspEntry> entries;  // nonzero values, ascending

  bool all_unique() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const UspEntry& e) { return e.unique_sign; });
  }
  bool any_unique() const {
    return std::any_of(entries.begin(), entries.end(),
                       [](const UspEntry& e) { return e.unique_sign; });
  }
};

inline UspReport check_usp(const QuadPoly& poly) {
  const auto vars = weak_support(poly);
  if (vars.size() > 24) {
    throw Error(ErrorCode::kBudgetExceeded,
                "unique-sign check limited to 24 relevant variables");
  }
  const std::size_t p = vars.empty() ? 0 : vars.back() + 1;
  struct Entry {
    double f;
    std::vector<bool> parity;
  };
  std::vector<Entry> entries;
  const std::size_t total = std::size_t{1} << vars.size();
  std::vector<double> x(p, 0.0);
  for (std::size_t mask = 0; mask < total; ++mask) {
    for (std::size_t t = 0; t < vars.size(); ++t) {
      x[vars[t]] = ((mask >> t) & 1) ? 1.0 : -1.0;
    }
    std::vector<bool> parity;
    for (const auto& q : poly.quad_terms) {
      if (q.i != q.j) parity.push_back(x[q.i] * x[q.j] > 0);
    }
    for (const auto& l : poly.lin_terms) parity.push_back(x[l.j] > 0);
    entries.push_back({eval_poly_unchecked(poly, x), std::move(parity)});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.f < b.f; });

  struct Group {
    double value;
    std::set<std::vector<bool>> parities;
  };
  std::vector<Group> groups;
  for (auto& e : entries) {
    if (groups.empty() || e.f - groups.back().value >= kValueTolerance) {
      groups.push_back({e.f, {}});
    }
    groups.back().parities.insert(std::move(e.parity));
  }
  auto find_group = [&](double v) -> const Group* {
    for (const auto& g : groups) {
      if (std::abs(g.value - v) < kValueTolerance) return &g;
    }
    return nullptr;
  };

  UspReport report;
  for (const auto& g : groups) {
    if (std::abs(g.value) < kValueTolerance) continue;
    UspEntry e;
    e.value = g.value;
    const Group* partner = find_group(-g.value);
    e.has_negation_partner = partner != nullptr;
    std::set<std::vector<bool>> seen = g.parities;
    if (partner) seen.insert(partner->parities.begin(), partner->parities.end());
    e.unique_sign = seen.size() == 1;
    report.entries.push_back(e);
  }
  return report;
}

// Variables connected to k through quadratic terms (k included).
inline std::vector<std::size_t> component_of(const QuadPoly& poly,
                                             std::size_t k) {
  std::set<std::size_t> seen{k};
  std::vector<std::size_t> frontier{k};
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    for (const auto& q : poly.quad_terms) {
      if (q.i == q.j) continue;
      std::optional<std::size_t> other;
      if (q.i == v) other = q.j;
      if (q.j == v) other = q.i;
      if (other && seen.insert(*other).second) frontier.push_back(*other);
    }
  }
  return {seen.begin(), seen.end()};
}

enum class SupportCase {
  // The component of k contains a variable with a linear term.
  kLinearInComponent,
  // It does not.
  kPurelyQuadratic,
};

inline SupportCase support_case(const QuadPoly& poly, std::size_t k) {
  const auto comp = component_of(poly, k);
  for (const auto& l : poly.lin_terms) {
    if (std::binary_search(comp.begin(), comp.end(), l.j)) {
      return SupportCase::kLinearInComponent;
    }
  }
  return SupportCase::kPurelyQuadratic;
}

// Whether the unique-sign hypothesis that guarantees a nonzero population
// correlation for almost every gamma holds for variable k: some value has
// the property when k's component has a linear term, every value otherwise.
inline bool usp_hypothesis_holds(const QuadPoly& poly, std::size_t k) {
  const auto support = weak_support(poly);
  if (!std::binary_search(support.begin(), support.end(), k)) return false;
  const auto report = check_usp(poly);
  return support_case(poly, k) == SupportCase::kLinearInComponent
             ? report.any_unique()
             : report.all_unique();
}

// ---------------------------------------------------------------------------
// General position.

struct GeneralPositionMargin {
  // min |sum_t s_t coef_t| over s in {-1,0,1}^T \ {0}, coefficients in the
  // order quad terms, linear terms, constant.
  double margin = std::numeric_limits<double>::infinity();
  std::vector<int> argmin_signs;
};

inline GeneralPositionMargin general_position_margin(const QuadPoly& poly,
                                                     bool include_constant = true) {
  std::vector<double> coef;
  for (const auto& q : poly.quad_terms) coef.push_back(q.beta);
  for (const auto& l : poly.lin_terms) coef.push_back(l.alpha);
  if (include_constant) coef.push_back(poly.constant);
  if (coef.size() > 16) {
    throw Error(ErrorCode::kBudgetExceeded,
                "general-position check limited to 16 coefficients");
  }
  GeneralPositionMargin out;
  std::vector<int> signs(coef.size(), 0);
  // Odometer over {-1, 0, 1}^T; the all-zero vector is skipped.
  std::vector<int> digit(coef.size(), 0);
  std::size_t total = 1;
  for (std::size_t t = 0; t < coef.size(); ++t) total *= 3;
  for (std::size_t idx = 1; idx < total; ++idx) {
    std::size_t t = 0;
    while (++digit[t] == 3) {
      digit[t] = 0;
      ++t;
    }
    double sum = 0.0;
    bool nonzero = false;
    for (std::size_t u = 0; u < coef.size(); ++u) {
      const int s = digit[u] - 1;
      signs[u] = s;
      if (s != 0) nonzero = true;
      sum += s * coef[u];
    }
    if (!nonzero) continue;
    if (std::abs(sum) < out.margin) {
      out.margin = std::abs(sum);
      out.argmin_signs = signs;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Measure of good scaling parameters under the piecewise-linear sigma.

struct GammaMeasureOptions {
  std::size_t grid = 100000;
  // General-position level; derived from the coefficients when absent.
  std::optional<double> eps;
  // Bias separation; derived from the relevant biases when absent.
  std::optional<double> delta;
};

struct GammaMeasureReport {
  SupportCase support_case = SupportCase::kLinearInComponent;
  double eps = 0.0;
  double delta = 0.0;
  double b = 0.0;           // max |coefficient|
  std::size_t s = 0;        // |Q| + |L|
  std::size_t r = 0;        // |weak support|
  std::size_t m = 0;        // distinct nonzero values of f
  double interval = 0.0;    // length of (0, 1 / min|v|)
  double magnitude_bound = 0.0;  // C1 eps^2 ... / (b^2 s^2)
  double required_measure = 0.0; // C2 m eps / (b^2 s^2)
  std::size_t good_points = 0;
  double measure_fraction = 0.0;  // good_points / grid
  double good_measure = 0.0;      // measure_fraction * interval
  double min_magnitude_on_good_set = 0.0;
  double max_magnitude = 0.0;

  bool satisfied() const { return good_measure >= required_measure; }
};

inline double bias_separation(double p) {
  return std::min({p, std::abs(p - 0.5), 1.0 - p});
}

// Scans gamma over a uniform midpoint grid of (0, 1/min|v|), evaluates the
// exact population correlation of k at each point, and measures where it
// exceeds the finite-sample magnitude bound.
inline GammaMeasureReport gamma_measure_check(const GenerativeModel& model,
                                              std::size_t k,
                                              const GammaMeasureOptions& opts = {}) {
  if (model.sigma != SigmaKind::kPiecewiseLinear) {
    throw Error(ErrorCode::kInvalidArgument,
                "gamma measure check needs the piecewise-linear sigma");
  }
  if (!model.is_binary()) {
    throw Error(ErrorCode::kInvalidArgument,
                "gamma measure check needs ±1 variables");
  }
  if (opts.grid == 0) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  const auto support = weak_support(model.poly);
  if (!std::binary_search(support.begin(), support.end(), k)) {
    throw Error(ErrorCode::kInvalidArgument,
                "variable " + std::to_string(k) + " is not relevant");
  }

  GammaMeasureReport rep;
  const auto gp = general_position_margin(model.poly);
  rep.eps = opts.eps.value_or(gp.margin * (1.0 - 1e-9));
  if (!(gp.margin > rep.eps) || !(rep.eps > 0.0)) {
    std::string combo;
    for (int s : gp.argmin_signs) combo += s > 0 ? '+' : (s < 0 ? '-' : '0');
    throw Error(ErrorCode::kHypothesisViolated,
                "strong general position fails: signed sum " +
                    std::to_string(gp.margin) + " <= eps",
                "signs [" + combo + "] over (quad, linear, constant)");
  }
  double delta = std::numeric_limits<double>::infinity();
  for (std::size_t v : support) delta = std::min(delta, bias_separation(model.bias(v)));
  delta *= 1.0 - 1e-9;
  if (opts.delta) {
    if (!(delta >= *opts.delta * (1.0 - 1e-9)) || !(*opts.delta > 0.0)) {
      throw Error(ErrorCode::kHypothesisViolated,
                  "a relevant bias lies within delta of 0, 1/2 or 1");
    }
    delta = *opts.delta;
  }
  rep.delta = delta;
  rep.b = model.poly.max_abs_coefficient();
  rep.s = model.poly.sparsity();
  rep.r = support.size();
  rep.support_case = support_case(model.poly, k);

  const auto profile = enumerate_values(model, k);
  rep.m = profile.size();
  double vmin = std::numeric_limits<double>::infinity();
  for (double v : profile.values) vmin = std::min(vmin, std::abs(v));
  rep.interval = 1.0 / vmin;

  const double b2s2 = rep.b * rep.b * static_cast<double>(rep.s * rep.s);
  constexpr double kC1 = 1.0 / 32.0;
  if (rep.support_case == SupportCase::kLinearInComponent) {
    rep.magnitude_bound = kC1 * rep.eps * rep.eps *
                          std::pow(delta, static_cast<double>(rep.r + 2)) / b2s2;
    rep.required_measure = (3.0 / 8.0) * rep.m * rep.eps / b2s2;
  } else {
    const double dprime = std::abs(std::log(2.0 / (1.0 - 2.0 * delta)));
    const double dsecond =
        std::pow(delta, 2.0 * rep.r) *
        std::min(std::pow(2.0, dprime / 2.0) - 1.0, 1.0 - std::pow(2.0, -dprime / 2.0));
    rep.magnitude_bound = kC1 * rep.eps * rep.eps * delta * delta * dsecond / b2s2;
    rep.required_measure = (3.0 / 32.0) * rep.m * rep.eps / b2s2;
  }

  const double h = rep.interval / static_cast<double>(opts.grid);
  rep.min_magnitude_on_good_set = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < opts.grid; ++g) {
    const double gamma = (static_cast<double>(g) + 0.5) * h;
    const double corr =
        std::abs(correlation_from_profile(profile, gamma, SigmaKind::kPiecewiseLinear));
    rep.max_magnitude = std::max(rep.max_magnitude, corr);
    if (corr > rep.magnitude_bound) {
      ++rep.good_points;
      rep.min_magnitude_on_good_set = std::min(rep.min_magnitude_on_good_set, corr);
    }
  }
  if (rep.good_points == 0) rep.min_magnitude_on_good_set = 0.0;
  rep.measure_fraction =
      static_cast<double>(rep.good_points) / static_cast<double>(opts.grid);
  rep.good_measure = rep.measure_fraction * rep.interval;
  return rep;
}

// Scale values 1/|v| where the piecewise-linear correlation changes slope,
// ascending.
inline std::vector<double> correlation_breakpoints(const ValueProfile& profile) {
  std::vector<double> out;
  for (double v : profile.values) out.push_back(1.0 / std::abs(v));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Exact conditional means for the strong-support test.

inline std::vector<PairCheck> population_pair_checks(
    const GenerativeModel& model, std::span<const std::size_t> weak) {
  std::vector<std::size_t> vars(weak.begin(), weak.end());
  std::sort(vars.begin(), vars.end());
  const auto support = weak_support(model.poly);
  std::vector<PairCheck> out;
  for (std::size_t a = 0; a < vars.size(); ++a) {
    for (std::size_t b = a + 1; b < vars.size(); ++b) {
      const std::size_t i = vars[a];
      const std::size_t j = vars[b];
      detail::check_variable(model, i);
      detail::check_variable(model, j);
      auto others = detail::without(detail::without(support, i), j);
      PairCheck check;
      check.i = i;
      check.j = j;
      const double pi = model.bias(i);
      const double pj = model.bias(j);
      auto cell_mean = [&](double xi, double xj, double& prob) {
        std::vector<double> x(model.p, 0.0);
        x[i] = xi;
        x[j] = xj;
        double acc = 0.0;
        detail::for_each_assignment(
            model, others, std::move(x), [&](const std::vector<double>& xs, double w) {
              acc += w * apply_sigma(model.sigma,
                                     model.gamma * eval_poly_unchecked(model.poly, xs));
            });
        prob = (xi > 0 ? pi : 1.0 - pi) * (xj > 0 ? pj : 1.0 - pj);
        return acc;
      };
      std::array<double, 4> prob{};
      check.u_pp = cell_mean(1.0, 1.0, prob[0]);
      check.u_mm = cell_mean(-1.0, -1.0, prob[1]);
      check.u_pm = cell_mean(1.0, -1.0, prob[2]);
      check.u_mp = cell_mean(-1.0, 1.0, prob[3]);
      check.undecidable =
          std::any_of(prob.begin(), prob.end(), [](double q) { return q <= 0.0; });
      out.push_back(check);
    }
  }
  return out;
}

}  // namespace quadscreen
