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

// Experiment runners shared by the CLI and the acceptance suite. Every trial
// draws from its own stream derived from (seed, trial indices), so results
// do not depend on the thread count.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "quadscreen/error.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/oracle.hpp"
#include "quadscreen/parallel.hpp"
#include "quadscreen/rng.hpp"
#include "quadscreen/screen_linear.hpp"
#include "quadscreen/screen_nonlinear.hpp"

namespace quadscreen {

// ---------------------------------------------------------------------------
// Population correlation surface of f = C (x1 - mu1)(x2 - mu2).

inline GenerativeModel centered_product_model(double c, double p1, double p2,
                                              double gamma,
                                              SigmaKind sigma = SigmaKind::kSigmoid) {
  const double mu1 = 2.0 * p1 - 1.0;
  const double mu2 = 2.0 * p2 - 1.0;
  QuadPoly poly;
  poly.quad_terms = {{0, 1, c}};
  poly.lin_terms = {{0, -c * mu2}, {1, -c * mu1}};
  poly.constant = c * mu1 * mu2;
  const std::vector<double> biases = {p1, p2};
  return make_binary_model(std::move(poly), biases, gamma, sigma);
}

struct SurfacePoint {
  double p1 = 0.0;
  double p2 = 0.0;
  double corr_x1 = 0.0;  // E[Y (X1 - mu1)]
  double corr_x2 = 0.0;  // E[Y (X2 - mu2)]
};

// grid x grid points on the closed square, row-major in p1.
inline std::vector<SurfacePoint> fig1_surface(std::size_t grid = 101, double c = 20.0,
                                              double gamma = 1.0,
                                              SigmaKind sigma = SigmaKind::kSigmoid) {
  if (grid < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs >= 2 points");
  std::vector<SurfacePoint> out(grid * grid);
  const double step = 1.0 / static_cast<double>(grid - 1);
  parallel_for(0, grid, [&](std::size_t a) {
    for (std::size_t b = 0; b < grid; ++b) {
      const double p1 = static_cast<double>(a) * step;
      const double p2 = static_cast<double>(b) * step;
      const auto model = centered_product_model(c, p1, p2, gamma, sigma);
      out[a * grid + b] = {p1, p2, population_correlation(model, 0),
                           population_correlation(model, 1)};
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Weak-support recovery sweep on random sparse ±1 models.

struct WeakSweepConfig {
  std::size_t p = 400;
  std::size_t r = 20;
  std::size_t num_lin = 10;
  std::size_t num_quad = 10;
  std::size_t polys = 20;
  std::size_t draws = 50;  // (gamma, bias) draws per polynomial
  std::vector<std::size_t> sample_sizes = {10, 100, 1000, 10000};
  std::size_t k = 0;  // 0 selects k = r
  bool normalize = true;
  double gamma_lo = 1.0;
  double gamma_hi = 15.0;
  double bias_lo = 0.1;
  double bias_hi = 0.4;
  CoeffRange coefficients{0.1, 1.0};
  std::uint64_t seed = 1;
};

struct WeakSweepRow {
  std::size_t n = 0;
  std::size_t poly = 0;
  std::size_t draw = 0;
  double gamma = 0.0;
  std::size_t support = 0;
  std::size_t recovered = 0;
  std::size_t k = 0;
  double fraction = 0.0;
};

struct RecoverySummary {
  std::size_t n = 0;
  std::size_t trials = 0;
  double mean_fraction = 0.0;
  // Share of trials missing at most two support variables.
  double all_but_two = 0.0;
};

struct WeakSweepResult {
  std::vector<WeakSweepRow> rows;
  std::vector<RecoverySummary> summary;
};

inline std::size_t count_recovered(const std::vector<std::size_t>& truth,
                                   const std::vector<std::size_t>& chosen) {
  std::size_t hits = 0;
  for (std::size_t v : truth) {
    if (std::binary_search(chosen.begin(), chosen.end(), v)) ++hits;
  }
  return hits;
}

inline WeakSweepResult run_weak_recovery_sweep(const WeakSweepConfig& cfg) {
  if (cfg.polys == 0 || cfg.draws == 0 || cfg.sample_sizes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sweep needs polys, draws and sample sizes");
  }
  const std::size_t k = cfg.k == 0 ? cfg.r : cfg.k;
  const std::size_t sizes = cfg.sample_sizes.size();
  const std::size_t trials = cfg.polys * cfg.draws;
  std::vector<WeakSweepRow> rows(trials * sizes);
  std::vector<QuadPoly> polys;
  for (std::size_t q = 0; q < cfg.polys; ++q) {
    polys.push_back(random_quad_poly(cfg.p, cfg.num_lin, cfg.num_quad, cfg.r,
                                     cfg.coefficients, derive_key(cfg.seed, 0x706F6CULL, q)));
  }
  parallel_for(0, trials, [&](std::size_t t) {
    const std::size_t q = t / cfg.draws;
    const std::size_t d = t % cfg.draws;
    CounterRng rng(derive_key(cfg.seed, 0x647277ULL, q, d));
    const double gamma = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
    std::vector<double> biases(cfg.p);
    for (double& b : biases) b = sample_separated_bias(rng, cfg.bias_lo, cfg.bias_hi);
    const auto model = make_binary_model(polys[q], biases, gamma);
    const auto truth = weak_support(model.poly);
    for (std::size_t s = 0; s < sizes; ++s) {
      const std::size_t n = cfg.sample_sizes[s];
      const auto data = sample_dataset(model, n, derive_key(rng.key(), n));
      const auto scores = correlation_scores(data, cfg.normalize && n >= 2);
      const auto chosen = select_weak_support(scores, ScreenConfig::top_k(k, cfg.normalize));
      WeakSweepRow& row = rows[t * sizes + s];
      row.n = n;
      row.poly = q;
      row.draw = d;
      row.gamma = gamma;
      row.support = truth.size();
      row.recovered = count_recovered(truth, chosen);
      row.k = k;
      row.fraction = truth.empty() ? 1.0
                                   : static_cast<double>(row.recovered) /
                                         static_cast<double>(truth.size());
    }
  });
  WeakSweepResult out;
  out.rows = std::move(rows);
  for (std::size_t s = 0; s < sizes; ++s) {
    RecoverySummary sum;
    sum.n = cfg.sample_sizes[s];
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& row = out.rows[t * sizes + s];
      sum.mean_fraction += row.fraction;
      if (row.recovered + 2 >= row.support) sum.all_but_two += 1.0;
    }
    sum.trials = trials;
    sum.mean_fraction /= static_cast<double>(trials);
    sum.all_but_two /= static_cast<double>(trials);
    out.summary.push_back(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hashed screen on dense random quadratics over {-2, -1, 1, 2}.

inline Alphabet four_point_alphabet() { return Alphabet({-2.0, -1.0, 1.0, 2.0}); }

struct Table2Config {
  std::size_t p = 1010;
  std::size_t s = 10;
  std::size_t hashes = kDefaultHashCount;
  std::int64_t hash_range = kDefaultHashRange;
  std::size_t k = 20;
  std::size_t functions = 100;
  std::vector<std::size_t> sample_sizes = {500, 1000, 5000, 10000};
  bool include_squares = false;
  double gamma = 1.0;
  std::uint64_t seed = 1;
};

struct Table2Row {
  std::size_t n = 0;
  std::size_t function = 0;
  std::size_t recovered = 0;
  double fraction = 0.0;
  std::size_t degenerate_hashes = 0;
};

struct Table2Result {
  std::vector<Table2Row> rows;
  std::vector<RecoverySummary> summary;
};

inline GenerativeModel random_dense_model(const Table2Config& cfg, std::size_t f) {
  GenerativeModel m;
  m.p = cfg.p;
  m.poly = dense_quadratic_poly(cfg.p, cfg.s, {-1.0, 1.0}, derive_key(cfg.seed, 0x66756EULL, f),
                                cfg.include_squares);
  m.gamma = cfg.gamma;
  m.sigma = SigmaKind::kSigmoid;
  m.alphabets.assign(cfg.p, four_point_alphabet());
  CounterRng rng(derive_key(cfg.seed, 0x706D66ULL, f));
  for (std::size_t i = 0; i < cfg.p; ++i) {
    auto pmf = sample_simplex(rng, 4);
    // Renormalize so the pmf passes the 1e-12 sum check exactly.
    double total = 0.0;
    for (double v : pmf) total += v;
    for (double& v : pmf) v /= total;
    m.marginals.push_back(std::move(pmf));
  }
  validate_model(m);
  return m;
}

inline Table2Result run_table2(const Table2Config& cfg) {
  if (cfg.functions == 0 || cfg.sample_sizes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "table needs functions and sample sizes");
  }
  const std::size_t sizes = cfg.sample_sizes.size();
  std::vector<Table2Row> rows(cfg.functions * sizes);
  parallel_for(0, cfg.functions, [&](std::size_t f) {
    const auto model = random_dense_model(cfg, f);
    const auto truth = weak_support(model.poly);
    const HashFamily family(4, cfg.hashes, cfg.hash_range, derive_key(cfg.seed, 0x68736BULL, f));
    for (std::size_t s = 0; s < sizes; ++s) {
      const std::size_t n = cfg.sample_sizes[s];
      const auto data = sample_dataset(model, n, derive_key(cfg.seed, 0x646174ULL, f, n));
      const auto scores = nonlinear_scores(data, family);
      const auto chosen = select_weak_support_nl(scores, ScreenConfig::top_k(cfg.k));
      Table2Row& row = rows[f * sizes + s];
      row.n = n;
      row.function = f;
      row.recovered = count_recovered(truth, chosen);
      row.fraction = static_cast<double>(row.recovered) / static_cast<double>(truth.size());
      for (auto d : scores.degenerate) row.degenerate_hashes += d;
    }
  });
  Table2Result out;
  out.rows = std::move(rows);
  for (std::size_t s = 0; s < sizes; ++s) {
    RecoverySummary sum;
    sum.n = cfg.sample_sizes[s];
    sum.trials = cfg.functions;
    for (std::size_t f = 0; f < cfg.functions; ++f) {
      const auto& row = out.rows[f * sizes + s];
      sum.mean_fraction += row.fraction;
      if (row.recovered + 2 >= cfg.s) sum.all_but_two += 1.0;
    }
    sum.mean_fraction /= static_cast<double>(cfg.functions);
    sum.all_but_two /= static_cast<double>(cfg.functions);
    out.summary.push_back(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// A fixed three-variable model padded with irrelevant four-point variables:
// is X1 ranked above every irrelevant variable by the hashed screen?

struct HashedExampleConfig {
  std::size_t n = 1000;
  std::size_t trials = 100;
  std::size_t irrelevant = 97;
  std::size_t hashes = kDefaultHashCount;
  std::int64_t hash_range = kDefaultHashRange;
  std::uint64_t seed = 1;
};

struct HashedExampleRow {
  std::size_t trial = 0;
  // 1-based rank of the target among {target} + irrelevant variables.
  std::size_t rank_hashed = 0;
  std::size_t rank_linear = 0;
  double score_hashed = 0.0;
  double best_irrelevant_hashed = 0.0;
};

struct HashedExampleResult {
  std::vector<HashedExampleRow> rows;
  std::size_t first_hashed = 0;
  std::size_t first_linear = 0;
};

inline GenerativeModel pad_with_irrelevant(const GenerativeModel& base, std::size_t extra,
                                           std::uint64_t seed) {
  GenerativeModel m = base;
  CounterRng rng(seed, 0x706164ULL);
  for (std::size_t t = 0; t < extra; ++t) {
    const Alphabet a = base.alphabets.back();
    auto pmf = sample_simplex(rng, a.size());
    double total = 0.0;
    for (double v : pmf) total += v;
    for (double& v : pmf) v /= total;
    m.alphabets.push_back(a);
    m.marginals.push_back(std::move(pmf));
  }
  m.p = base.p + extra;
  validate_model(m);
  return m;
}

inline HashedExampleResult run_hashed_example(const GenerativeModel& base,
                                              const HashedExampleConfig& cfg,
                                              std::size_t target = 0) {
  const auto model = pad_with_irrelevant(base, cfg.irrelevant, cfg.seed);
  std::vector<HashedExampleRow> rows(cfg.trials);
  parallel_for(0, cfg.trials, [&](std::size_t t) {
    const auto data = sample_dataset(model, cfg.n, derive_key(cfg.seed, 0x747269ULL, t));
    const HashFamily family(base.alphabets[target].size(), cfg.hashes, cfg.hash_range,
                            derive_key(cfg.seed, 0x68736BULL, t));
    const auto nl = nonlinear_scores(data, family);
    const auto lin = correlation_scores(data, true);
    HashedExampleRow& row = rows[t];
    row.trial = t;
    row.score_hashed = nl.c_abs[target];
    row.rank_hashed = 1;
    row.rank_linear = 1;
    for (std::size_t i = base.p; i < model.p; ++i) {
      row.best_irrelevant_hashed = std::max(row.best_irrelevant_hashed, nl.c_abs[i]);
      if (nl.c_abs[i] >= nl.c_abs[target]) ++row.rank_hashed;
      if (std::abs(lin.scores[i]) >= std::abs(lin.scores[target])) ++row.rank_linear;
    }
  });
  HashedExampleResult out;
  out.rows = std::move(rows);
  for (const auto& row : out.rows) {
    if (row.rank_hashed == 1) ++out.first_hashed;
    if (row.rank_linear == 1) ++out.first_linear;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Screening wall time.

enum class BenchScreen { kLinear, kNonlinear };

inline Dataset random_uniform_dataset(std::size_t n, std::size_t p, const Alphabet& alphabet,
                                      std::uint64_t seed) {
  std::vector<std::uint8_t> codes(n * p);
  std::vector<std::uint8_t> labels(n);
  const std::size_t size = alphabet.size();
  parallel_for(0, p, [&](std::size_t i) {
    const std::uint64_t key = derive_key(seed, i);
    for (std::size_t r = 0; r < n; ++r) {
      codes[i * n + r] =
          static_cast<std::uint8_t>(integer_in(counter_bits(key, r), 0, static_cast<std::int64_t>(size) - 1));
    }
  });
  const std::uint64_t label_key = derive_key(seed, detail::kLabelStream);
  for (std::size_t r = 0; r < n; ++r) labels[r] = counter_bits(label_key, r) & 1;
  return Dataset(n, p, std::vector<Alphabet>(p, alphabet), std::move(codes), std::move(labels),
                 seed);
}

namespace detail {

inline Alphabet bench_alphabet(BenchScreen screen) {
  return screen == BenchScreen::kLinear ? Alphabet::plus_minus_one() : four_point_alphabet();
}

// Wall time in seconds of one screening pass.
inline double time_screen(BenchScreen screen, const Dataset& data, const HashFamily& family,
                          double& sink) {
  const auto start = std::chrono::steady_clock::now();
  if (screen == BenchScreen::kLinear) {
    sink += correlation_scores(data, true).scores[0];
  } else {
    sink += nonlinear_scores(data, family).c[0];
  }
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace detail

// Median wall time in seconds of one screening pass over an n x p dataset.
inline double bench_screen(BenchScreen screen, std::size_t p, std::size_t n,
                           std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kInvalidArgument, "need >= 1 trial");
  const Alphabet alphabet = detail::bench_alphabet(screen);
  const auto data = random_uniform_dataset(n, p, alphabet, seed);
  const HashFamily family(alphabet.size(), kDefaultHashCount, kDefaultHashRange, seed);
  std::vector<double> times;
  double sink = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    times.push_back(detail::time_screen(screen, data, family, sink));
  }
  volatile double keep = sink;
  (void)keep;
  return detail::median(std::move(times));
}

struct ScalingTimes {
  double base = 0.0;  // n x p
  double wide = 0.0;  // n x 2p
  double tall = 0.0;  // 2n x p
};

// Median pass times at n x p, n x 2p and 2n x p. The three shapes are timed
// round-robin after one warm-up pass each, so load drift hits all of them.
inline ScalingTimes bench_scaling(BenchScreen screen, std::size_t p, std::size_t n,
                                  std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kInvalidArgument, "need >= 1 trial");
  const Alphabet alphabet = detail::bench_alphabet(screen);
  const Dataset shapes[] = {random_uniform_dataset(n, p, alphabet, seed),
                            random_uniform_dataset(n, 2 * p, alphabet, seed),
                            random_uniform_dataset(2 * n, p, alphabet, seed)};
  const HashFamily family(alphabet.size(), kDefaultHashCount, kDefaultHashRange, seed);
  std::vector<double> times[3];
  double sink = 0.0;
  for (const auto& d : shapes) detail::time_screen(screen, d, family, sink);
  for (std::size_t t = 0; t < trials; ++t) {
    for (int s = 0; s < 3; ++s) {
      times[s].push_back(detail::time_screen(screen, shapes[s], family, sink));
    }
  }
  volatile double keep = sink;
  (void)keep;
  return {detail::median(std::move(times[0])), detail::median(std::move(times[1])),
          detail::median(std::move(times[2]))};
}

}  // namespace quadscreen
