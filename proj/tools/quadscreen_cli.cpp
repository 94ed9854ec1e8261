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

// quadscreen: command-line front end.
//
// Exit status: 0 ok, 2 usage error, 3 data error, 4 warning under --strict.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadscreen/experiments.hpp"
#include "quadscreen/io.hpp"
#include "quadscreen/model.hpp"
#include "quadscreen/oracle.hpp"
#include "quadscreen/regress.hpp"
#include "quadscreen/screen_linear.hpp"
#include "quadscreen/screen_nonlinear.hpp"
#include "quadscreen/strong_support.hpp"

namespace {

using namespace quadscreen;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitWarning = 4;

struct Globals {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string format = "csv";
  bool strict = false;
  std::string config_path;
  std::optional<ExperimentConfig> config;
};

// Warnings go to stderr and turn into exit status 4 under --strict.
class Warnings {
 public:
  void add(const std::string& message) {
    std::cerr << "warning: " << message << "\n";
    any_ = true;
  }
  bool any() const { return any_; }

 private:
  bool any_ = false;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::kIo, "cannot open for writing", path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string num(double v) { return detail::format_double(v); }

// ---------------------------------------------------------------------------
// Dataset input.

struct DataArgs {
  std::string path;
  std::string labels;
  std::size_t p = 0;
  std::string encoding = "plus-minus";
  std::size_t index_base = 0;
};

void add_data_options(CLI::App* sub, DataArgs& args, const std::string& flag,
                      const std::string& what) {
  sub->add_option(flag, args.path,
                  what + " (CSV file, or sparse feature file); defaults to the config's data");
  sub->add_option("--labels", args.labels, "label file for --format sparse");
  sub->add_option("--p", args.p, "number of features for --format sparse");
  sub->add_option("--encoding", args.encoding, "sparse feature encoding")
      ->check(CLI::IsMember({"plus-minus", "zero-one"}));
  sub->add_option("--index-base", args.index_base, "first feature index in sparse files")
      ->check(CLI::IsMember({0, 1}));
}

Encoding encoding_of(const std::string& name) {
  return name == "zero-one" ? Encoding::kZeroOne : Encoding::kPlusMinusOne;
}

Dataset load_data(const Globals& g, const DataArgs& args) {
  std::string path = args.path;
  if (path.empty() && g.config && g.config->data_path) path = *g.config->data_path;
  if (path.empty()) throw Error(ErrorCode::kInvalidArgument, "no input dataset given");
  if (g.format == "csv") return read_csv_dataset(std::filesystem::path(path));
  if (args.labels.empty() || args.p == 0) {
    throw Error(ErrorCode::kInvalidArgument, "--format sparse needs --labels and --p");
  }
  SparseReadOptions opts;
  opts.p = args.p;
  opts.encoding = encoding_of(args.encoding);
  opts.index_base = args.index_base;
  opts.seed = g.seed;
  return read_sparse_binary(path, args.labels, opts);
}

template <typename T>
void from_config(CLI::Option* opt, const std::optional<T>& value, T& target) {
  if (opt->count() == 0 && value) target = *value;
}

void write_csv_rows(std::ostream& out, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Fit files.

json fit_to_json(const FitResult& fit, const std::optional<CvResult>& cv) {
  json cols = json::array();
  for (const auto& t : fit.columns) {
    cols.push_back({{"name", to_string(t)},
                    {"kind", t.kind == Term::Kind::kLinear ? "linear" : "quad"},
                    {"i", t.i},
                    {"j", t.j}});
  }
  json j = {{"columns", cols},
            {"weights", fit.weights},
            {"intercept", fit.intercept},
            {"lambda", fit.lambda},
            {"iterations", fit.iterations},
            {"final_nll", fit.final_nll},
            {"converged", fit.converged},
            {"residual", fit.residual}};
  if (cv) {
    j["cv"] = {{"lambdas", cv->lambdas},
               {"mean_loss", cv->mean_loss},
               {"best_lambda", cv->best_lambda}};
  }
  return j;
}

FitResult fit_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading", path);
  FitResult fit;
  try {
    const json j = json::parse(in);
    for (const auto& c : j.at("columns")) {
      const auto kind = c.at("kind").get<std::string>();
      const auto i = c.at("i").get<std::size_t>();
      const auto jj = c.at("j").get<std::size_t>();
      if (kind == "linear") {
        fit.columns.push_back(Term::linear(i));
      } else if (kind == "quad") {
        fit.columns.push_back(Term::quad(i, jj));
      } else {
        throw Error(ErrorCode::kSchema, "unknown column kind '" + kind + "'", path);
      }
    }
    fit.weights = j.at("weights").get<std::vector<double>>();
    fit.intercept = j.at("intercept").get<double>();
    fit.lambda = j.value("lambda", 0.0);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), path);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, e.what(), path);
  }
  if (fit.weights.size() != fit.columns.size()) {
    throw Error(ErrorCode::kSchema, "weights and columns differ in length", path);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Subcommands. Each registers its options and returns the action to run.

using Action = std::function<void(Warnings&)>;

Action add_gen(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("gen", "sample a dataset from a model");
  struct Args {
    std::string model;
    std::size_t p = 100, r = 10, num_lin = 5, num_quad = 5, n = 1000;
    double gamma = 1.0;
    std::string out, labels_out, model_out;
  };
  auto a = std::make_shared<Args>();
  auto* model_opt = sub->add_option("--model", a->model, "model JSON; random model if absent");
  auto* p_opt = sub->add_option("--p", a->p, "variables of the random model");
  auto* r_opt = sub->add_option("--r", a->r, "relevant variables of the random model");
  auto* lin_opt = sub->add_option("--num-lin", a->num_lin, "linear terms");
  auto* quad_opt = sub->add_option("--num-quad", a->num_quad, "quadratic terms");
  sub->add_option("--gamma", a->gamma, "scaling of the random model");
  sub->add_option("-n,--n", a->n, "rows to sample")->required();
  sub->add_option("--out", a->out, "dataset output (features file for sparse)")->required();
  sub->add_option("--labels-out", a->labels_out, "label file for --format sparse");
  sub->add_option("--model-out", a->model_out, "write the model used as JSON");
  return [=, &g](Warnings&) {
    GenerativeModel model;
    if (g.config) {
      from_config(model_opt, g.config->model_path, a->model);
      from_config(p_opt, g.config->p, a->p);
      from_config(r_opt, g.config->r, a->r);
      from_config(lin_opt, g.config->num_lin, a->num_lin);
      from_config(quad_opt, g.config->num_quad, a->num_quad);
    }
    if (!a->model.empty()) {
      model = read_model_json(a->model);
    } else {
      auto poly = random_quad_poly(a->p, a->num_lin, a->num_quad, a->r, {0.1, 1.0},
                                   derive_key(g.seed, 0x67656EULL));
      CounterRng rng(g.seed, 0x626961ULL);
      std::vector<double> biases(a->p);
      for (double& b : biases) b = sample_separated_bias(rng, 0.1, 0.4);
      model = make_binary_model(std::move(poly), biases, a->gamma);
      model.seed = g.seed;
    }
    const auto data = sample_dataset(model, a->n, g.seed);
    if (g.format == "csv") {
      write_csv_dataset(std::filesystem::path(a->out), data);
    } else {
      if (a->labels_out.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "--format sparse needs --labels-out");
      }
      write_sparse_binary(a->out, a->labels_out, data);
    }
    if (!a->model_out.empty()) write_model_json(a->model_out, model);
  };
}

Action add_screen(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("screen", "linear correlation screen");
  struct Args {
    DataArgs data;
    std::optional<double> eps;
    std::optional<std::size_t> top_k;
    bool normalize = false;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  add_data_options(sub, a->data, "--input", "dataset");
  auto* eps = sub->add_option("--eps", a->eps, "keep |score| > eps");
  auto* k = sub->add_option("--top-k", a->top_k, "keep the k largest |score|");
  eps->excludes(k);
  sub->add_flag("--normalize", a->normalize, "divide by the sample stddev");
  sub->add_option("--out", a->out, "scores CSV (stdout if absent)");
  return [=, &g](Warnings& w) {
    const auto data = load_data(g, a->data);
    const auto scores = correlation_scores(data, a->normalize);
    std::vector<std::size_t> chosen;
    if (a->eps) {
      chosen = select_weak_support(scores, ScreenConfig::with_threshold(*a->eps, a->normalize));
    } else if (a->top_k) {
      chosen = select_weak_support(scores, ScreenConfig::top_k(*a->top_k, a->normalize));
    }
    std::vector<bool> selected(data.cols(), false);
    for (auto i : chosen) selected[i] = true;
    std::size_t constant = 0;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < data.cols(); ++i) {
      if (a->normalize && scores.stddev[i] == 0.0) ++constant;
      rows.push_back({std::to_string(i), num(scores.mu_hat[i]), num(scores.scores[i]),
                      selected[i] ? "1" : "0"});
    }
    if (constant > 0) {
      w.add(std::to_string(constant) + " constant column(s) scored 0");
    }
    Output out(a->out);
    write_csv_rows(out.stream(), {"index", "mu_hat", "score", "selected"}, rows);
  };
}

Action add_screen_nl(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("screen-nl", "hashed nonlinear correlation screen");
  struct Args {
    DataArgs data;
    std::size_t hashes = kDefaultHashCount;
    std::int64_t range = kDefaultHashRange;
    std::optional<double> theta;
    std::optional<std::size_t> top_k;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  add_data_options(sub, a->data, "--input", "dataset");
  auto* hashes = sub->add_option("--hashes", a->hashes, "hash functions averaged");
  auto* range = sub->add_option("--range", a->range, "hash values drawn from [-U, U]");
  auto* theta = sub->add_option("--theta", a->theta, "keep |score| > theta");
  auto* k = sub->add_option("--top-k", a->top_k, "keep the k largest |score|");
  theta->excludes(k);
  sub->add_option("--out", a->out, "scores CSV (stdout if absent)");
  return [=, &g](Warnings& w) {
    if (g.config) {
      from_config(hashes, g.config->hashes, a->hashes);
      from_config(range, g.config->hash_range, a->range);
    }
    const auto data = load_data(g, a->data);
    if (data.cols() == 0) throw Error(ErrorCode::kSchema, "dataset has no columns");
    const auto family = make_hash_family(data.alphabet(0), a->hashes, a->range, g.seed);
    const auto scores = nonlinear_scores(data, family);
    std::vector<std::size_t> chosen;
    if (a->theta) {
      chosen = select_weak_support_nl(scores, ScreenConfig::with_threshold(*a->theta));
    } else if (a->top_k) {
      chosen = select_weak_support_nl(scores, ScreenConfig::top_k(*a->top_k));
    }
    std::vector<bool> selected(data.cols(), false);
    for (auto i : chosen) selected[i] = true;
    std::vector<std::vector<std::string>> rows;
    std::size_t degenerate = 0;
    for (std::size_t i = 0; i < data.cols(); ++i) {
      degenerate += scores.degenerate[i];
      rows.push_back({std::to_string(i), num(scores.c[i]), num(scores.c_abs[i]),
                      std::to_string(scores.degenerate[i]), selected[i] ? "1" : "0"});
    }
    if (scores.warning()) {
      w.add(std::to_string(degenerate) + " degenerate hash evaluation(s)");
    }
    Output out(a->out);
    write_csv_rows(out.stream(), {"index", "score", "abs_score", "degenerate", "selected"},
                   rows);
  };
}

Action add_strong(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("strong", "classify weak variables into quad pairs and linear");
  struct Args {
    DataArgs data;
    std::vector<std::size_t> weak;
    std::optional<double> theta;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  add_data_options(sub, a->data, "--input", "dataset");
  sub->add_option("--weak", a->weak, "weak support, comma separated")
      ->required()
      ->delimiter(',');
  sub->add_option("--theta", a->theta, "gap threshold (default from the cell counts)");
  sub->add_option("--out", a->out, "JSON output (stdout if absent)");
  return [=, &g](Warnings& w) {
    const auto data = load_data(g, a->data);
    const auto checks = pair_checks(data, a->weak);
    double theta = 0.0;
    if (a->theta) {
      theta = *a->theta;
    } else {
      const std::size_t t_min = min_cell_count(checks);
      if (t_min == 0) {
        throw Error(ErrorCode::kUndecidable,
                    "a conditioning cell is empty; pass --theta explicitly");
      }
      theta = default_theta(checks.empty() ? 0 : a->weak.size(), t_min);
    }
    std::vector<std::size_t> weak = a->weak;
    std::sort(weak.begin(), weak.end());
    weak.erase(std::unique(weak.begin(), weak.end()), weak.end());
    const auto result = classify_strong(checks, theta, weak);
    json pairs = json::array();
    for (const auto& c : checks) {
      pairs.push_back({{"i", c.i},
                       {"j", c.j},
                       {"u_pp", c.u_pp},
                       {"u_pm", c.u_pm},
                       {"u_mp", c.u_mp},
                       {"u_mm", c.u_mm},
                       {"undecidable", c.undecidable}});
    }
    json j = {{"theta", theta},
              {"quad_pairs", result.quad_pairs},
              {"linear_vars", result.linear_vars},
              {"undecidable", result.undecidable},
              {"heuristic", result.heuristic},
              {"pairs", pairs}};
    if (result.heuristic) w.add("a variable appears in more than one accepted pair");
    if (!result.undecidable.empty()) {
      w.add(std::to_string(result.undecidable.size()) + " undecidable pair(s)");
    }
    Output out(a->out);
    out.stream() << j.dump(2) << "\n";
  };
}

Action add_fit(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("fit", "L1 logistic regression on the expanded weak support");
  struct Args {
    DataArgs data;
    std::vector<std::size_t> weak;
    std::optional<double> lambda;
    bool cv = false;
    std::size_t folds = 4;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  add_data_options(sub, a->data, "--input", "training dataset");
  sub->add_option("--weak", a->weak, "weak support, comma separated")
      ->required()
      ->delimiter(',');
  auto* lambda = sub->add_option("--lambda", a->lambda, "L1 penalty");
  auto* cv = sub->add_flag("--cv", a->cv, "choose lambda by cross-validated log-loss");
  lambda->excludes(cv);
  sub->add_option("--folds", a->folds, "cross-validation folds");
  sub->add_option("--out", a->out, "fit JSON (stdout if absent)");
  return [=, &g](Warnings& w) {
    if (!a->lambda && !a->cv) {
      throw Error(ErrorCode::kInvalidArgument, "fit needs --lambda or --cv");
    }
    const auto data = load_data(g, a->data);
    const auto design = expand_features(data, std::span<const std::size_t>(a->weak));
    const auto labels = data.labels();
    std::optional<CvResult> cv_result;
    FitOptions opts;
    if (a->cv) {
      cv_result = cross_validate(design, labels, lambda_grid(), a->folds, g.seed);
      opts.lambda = cv_result->best_lambda;
    } else {
      opts.lambda = *a->lambda;
    }
    const auto fit = fit_logistic(design, labels, opts);
    if (!fit.converged) {
      w.add("solver stopped after " + std::to_string(fit.iterations) +
            " iterations with residual " + num(fit.residual));
    }
    Output out(a->out);
    out.stream() << fit_to_json(fit, cv_result).dump(2) << "\n";
  };
}

Action add_eval(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("eval", "AUC and log-loss of a fit on held-out data");
  struct Args {
    std::string fit;
    DataArgs data;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--fit", a->fit, "fit JSON from the fit subcommand")->required();
  add_data_options(sub, a->data, "--test", "test dataset");
  sub->add_option("--out", a->out, "JSON output (stdout if absent)");
  return [=, &g](Warnings&) {
    const auto fit = fit_from_json(a->fit);
    const auto data = load_data(g, a->data);
    for (const auto& t : fit.columns) {
      if (t.j >= data.cols()) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "fit uses variable " + std::to_string(t.j) + " but test data has " +
                        std::to_string(data.cols()) + " columns");
      }
    }
    const auto design = expand_features(data, fit.columns);
    const auto probs = predict_proba(fit, design);
    const json j = {{"n", data.rows()},
                    {"auc", auc(probs, data.labels())},
                    {"log_loss", log_loss(probs, data.labels())}};
    Output out(a->out);
    out.stream() << j.dump(2) << "\n";
  };
}

json measure_to_json(const GammaMeasureReport& r) {
  return {{"case", r.support_case == SupportCase::kLinearInComponent ? "linear_in_component"
                                                                      : "purely_quadratic"},
          {"eps", r.eps},
          {"delta", r.delta},
          {"b", r.b},
          {"s", r.s},
          {"r", r.r},
          {"m", r.m},
          {"interval", r.interval},
          {"magnitude_bound", r.magnitude_bound},
          {"required_measure", r.required_measure},
          {"good_points", r.good_points},
          {"good_measure", r.good_measure},
          {"min_magnitude_on_good_set", r.min_magnitude_on_good_set},
          {"max_magnitude", r.max_magnitude},
          {"satisfied", r.satisfied()}};
}

json error_to_json(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
}

Action add_oracle(CLI::App& app, Globals&) {
  auto* sub = app.add_subcommand("oracle", "exact population quantities of a model");
  struct Args {
    std::string model;
    std::size_t var = 0;
    std::optional<std::size_t> gamma_scan;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--model", a->model, "model JSON")->required();
  sub->add_option("--var", a->var, "variable index")->required();
  sub->add_option("--gamma-scan", a->gamma_scan,
                  "grid size of the good-gamma measure check (piecewise-linear sigma)");
  sub->add_option("--out", a->out, "JSON output (stdout if absent)");
  return [=](Warnings& w) {
    const auto model = read_model_json(a->model);
    const std::size_t k = a->var;
    json j;
    j["var"] = k;
    j["correlation"] = population_correlation(model, k);
    if (model.alphabets.at(k).is_plus_minus_one()) {
      const auto profile = enumerate_values(model, k);
      j["values"] = profile.values;
      j["influences"] = profile.influence;
      j["prob_plus"] = profile.prob_plus;
      j["prob_minus"] = profile.prob_minus;
      j["zero"] = {{"present", profile.has_zero},
                   {"prob_plus", profile.zero_prob_plus},
                   {"prob_minus", profile.zero_prob_minus},
                   {"influence", profile.zero_influence}};
    } else {
      j["values"] = nullptr;
      j["influences"] = nullptr;
    }
    try {
      const auto usp = check_usp(model.poly);
      json entries = json::array();
      for (const auto& e : usp.entries) {
        entries.push_back({{"value", e.value},
                           {"unique_sign", e.unique_sign},
                           {"has_negation_partner", e.has_negation_partner}});
      }
      const auto support = weak_support(model.poly);
      const bool relevant = std::binary_search(support.begin(), support.end(), k);
      j["usp"] = {{"all_unique", usp.all_unique()},
                  {"any_unique", usp.any_unique()},
                  {"hypothesis_holds", relevant && usp_hypothesis_holds(model.poly, k)},
                  {"entries", entries}};
    } catch (const Error& e) {
      j["usp"] = error_to_json(e);
      w.add(e.what());
    }
    if (a->gamma_scan) {
      try {
        GammaMeasureOptions opts;
        opts.grid = *a->gamma_scan;
        j["measure_check"] = measure_to_json(gamma_measure_check(model, k, opts));
      } catch (const Error& e) {
        j["measure_check"] = error_to_json(e);
        w.add(e.what());
      }
    } else {
      j["measure_check"] = nullptr;
    }
    Output out(a->out);
    out.stream() << j.dump(2) << "\n";
  };
}

Action add_bench(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("bench", "screening wall time");
  struct Args {
    std::vector<std::size_t> p_list{1000, 2000};
    std::vector<std::size_t> n_list{1000};
    std::size_t trials = 5;
    std::string screen = "linear";
    std::string out;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--p-list", a->p_list, "variable counts")->delimiter(',');
  sub->add_option("--n-list,--n", a->n_list, "sample sizes")->delimiter(',');
  sub->add_option("--trials", a->trials, "repetitions; the median is reported");
  sub->add_option("--screen", a->screen, "which screen to time")
      ->check(CLI::IsMember({"linear", "nonlinear"}));
  sub->add_option("--out", a->out, "CSV output (stdout if absent)");
  return [=, &g](Warnings&) {
    const auto which = a->screen == "linear" ? BenchScreen::kLinear : BenchScreen::kNonlinear;
    std::vector<std::vector<std::string>> rows;
    for (auto n : a->n_list) {
      for (auto p : a->p_list) {
        rows.push_back({a->screen, std::to_string(p), std::to_string(n),
                        num(bench_screen(which, p, n, a->trials, g.seed))});
      }
    }
    Output out(a->out);
    write_csv_rows(out.stream(), {"screen", "p", "n", "seconds"}, rows);
  };
}

Action add_fig1(CLI::App& app, Globals&) {
  auto* sub = app.add_subcommand(
      "fig1", "population correlation of C (x1 - mu1)(x2 - mu2) over the bias square");
  struct Args {
    std::size_t grid = 101;
    double c = 20.0;
    double gamma = 1.0;
    std::string sigma = "sigmoid";
    std::string out;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--grid", a->grid, "points per axis on [0, 1]");
  sub->add_option("--C", a->c, "interaction coefficient");
  sub->add_option("--gamma", a->gamma, "scaling parameter");
  sub->add_option("--sigma", a->sigma, "link")
      ->check(CLI::IsMember({"sigmoid", "piecewise_linear"}));
  sub->add_option("--out", a->out, "CSV output (stdout if absent)");
  return [=](Warnings&) {
    const auto sigma =
        a->sigma == "sigmoid" ? SigmaKind::kSigmoid : SigmaKind::kPiecewiseLinear;
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : fig1_surface(a->grid, a->c, a->gamma, sigma)) {
      rows.push_back({num(s.p1), num(s.p2), num(s.corr_x1), num(s.corr_x2)});
    }
    Output out(a->out);
    write_csv_rows(out.stream(), {"p1", "p2", "corr_x1", "corr_x2"}, rows);
  };
}

std::vector<std::string> summary_row(const RecoverySummary& s, std::size_t k) {
  return {"summary", std::to_string(s.n), "", "", "", "", "", std::to_string(k),
          num(s.mean_fraction), num(s.all_but_two)};
}

Action add_sweep_weak(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("sweep-weak", "weak-support recovery versus sample size");
  auto cfg = std::make_shared<WeakSweepConfig>();
  auto out_path = std::make_shared<std::string>();
  auto no_normalize = std::make_shared<bool>(false);
  auto* p = sub->add_option("--p", cfg->p, "variables");
  auto* r = sub->add_option("--r", cfg->r, "relevant variables");
  auto* lin = sub->add_option("--num-lin", cfg->num_lin, "linear terms");
  auto* quad = sub->add_option("--num-quad", cfg->num_quad, "quadratic terms");
  auto* polys = sub->add_option("--polys", cfg->polys, "random polynomials");
  auto* draws = sub->add_option("--draws", cfg->draws, "(gamma, bias) draws per polynomial");
  auto* k = sub->add_option("--k", cfg->k, "TopK size (0 means r)");
  auto* sizes = sub->add_option("--sample-sizes", cfg->sample_sizes, "sample sizes")
                    ->delimiter(',');
  auto* raw = sub->add_flag("--raw", *no_normalize, "rank unnormalized correlations");
  sub->add_option("--out", *out_path, "CSV output (stdout if absent)");
  return [=, &g](Warnings&) {
    cfg->seed = g.seed;
    if (g.config) {
      const auto& c = *g.config;
      from_config(p, c.p, cfg->p);
      from_config(r, c.r, cfg->r);
      from_config(lin, c.num_lin, cfg->num_lin);
      from_config(quad, c.num_quad, cfg->num_quad);
      from_config(polys, c.polys, cfg->polys);
      from_config(draws, c.draws, cfg->draws);
      from_config(k, c.k, cfg->k);
      if (sizes->count() == 0 && !c.sample_sizes.empty()) cfg->sample_sizes = c.sample_sizes;
      if (raw->count() == 0 && c.normalize) *no_normalize = !*c.normalize;
    }
    cfg->normalize = !*no_normalize;
    const auto result = run_weak_recovery_sweep(*cfg);
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : result.rows) {
      rows.push_back({"trial", std::to_string(row.n), std::to_string(row.poly),
                      std::to_string(row.draw), num(row.gamma), std::to_string(row.support),
                      std::to_string(row.recovered), std::to_string(row.k), num(row.fraction),
                      ""});
    }
    const std::size_t kk = cfg->k == 0 ? cfg->r : cfg->k;
    for (const auto& s : result.summary) rows.push_back(summary_row(s, kk));
    Output out(*out_path);
    write_csv_rows(out.stream(),
                   {"row", "n", "poly", "draw", "gamma", "support", "recovered", "k",
                    "fraction", "all_but_two"},
                   rows);
  };
}

Action add_table2(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand("table2", "hashed-screen recovery on dense four-point models");
  auto cfg = std::make_shared<Table2Config>();
  auto out_path = std::make_shared<std::string>();
  auto* p = sub->add_option("--p", cfg->p, "variables");
  auto* s = sub->add_option("--s", cfg->s, "support size");
  auto* hashes = sub->add_option("--hashes", cfg->hashes, "hash functions");
  auto* range = sub->add_option("--range", cfg->hash_range, "hash range U");
  auto* k = sub->add_option("--k", cfg->k, "TopK size");
  auto* functions = sub->add_option("--functions", cfg->functions, "random functions");
  auto* sizes = sub->add_option("--sample-sizes", cfg->sample_sizes, "sample sizes")
                    ->delimiter(',');
  auto* squares = sub->add_flag("--squares", cfg->include_squares, "include x_i^2 terms");
  sub->add_option("--out", *out_path, "CSV output (stdout if absent)");
  return [=, &g](Warnings& w) {
    cfg->seed = g.seed;
    if (g.config) {
      const auto& c = *g.config;
      from_config(p, c.p, cfg->p);
      from_config(s, c.r, cfg->s);
      from_config(hashes, c.hashes, cfg->hashes);
      from_config(range, c.hash_range, cfg->hash_range);
      from_config(k, c.k, cfg->k);
      from_config(functions, c.trials, cfg->functions);
      from_config(squares, c.include_squares, cfg->include_squares);
      if (sizes->count() == 0 && !c.sample_sizes.empty()) cfg->sample_sizes = c.sample_sizes;
    }
    const auto result = run_table2(*cfg);
    std::vector<std::vector<std::string>> rows;
    std::size_t degenerate = 0;
    for (const auto& row : result.rows) {
      degenerate += row.degenerate_hashes;
      rows.push_back({"trial", std::to_string(row.n), std::to_string(row.function),
                      std::to_string(row.recovered), num(row.fraction),
                      std::to_string(row.degenerate_hashes), ""});
    }
    for (const auto& sum : result.summary) {
      rows.push_back({"summary", std::to_string(sum.n), "", "", num(sum.mean_fraction), "",
                      num(sum.all_but_two)});
    }
    if (degenerate > 0) w.add(std::to_string(degenerate) + " degenerate hash evaluation(s)");
    Output out(*out_path);
    write_csv_rows(out.stream(),
                   {"row", "n", "function", "recovered", "fraction", "degenerate",
                    "all_but_two"},
                   rows);
  };
}

Action add_hashed_example(CLI::App& app, Globals& g) {
  auto* sub = app.add_subcommand(
      "hashed-example", "rank of a target variable under the hashed and linear screens");
  auto cfg = std::make_shared<HashedExampleConfig>();
  auto model_path = std::make_shared<std::string>();
  auto target = std::make_shared<std::size_t>(0);
  auto out_path = std::make_shared<std::string>();
  auto* model = sub->add_option("--model", *model_path, "base model JSON");
  auto* n = sub->add_option("-n,--n", cfg->n, "rows per trial");
  auto* trials = sub->add_option("--trials", cfg->trials, "trials");
  sub->add_option("--irrelevant", cfg->irrelevant, "padding variables");
  auto* hashes = sub->add_option("--hashes", cfg->hashes, "hash functions");
  auto* range = sub->add_option("--range", cfg->hash_range, "hash range U");
  sub->add_option("--target", *target, "variable to rank");
  sub->add_option("--out", *out_path, "CSV output (stdout if absent)");
  return [=, &g](Warnings&) {
    cfg->seed = g.seed;
    if (g.config) {
      const auto& c = *g.config;
      from_config(model, c.model_path, *model_path);
      from_config(trials, c.trials, cfg->trials);
      from_config(hashes, c.hashes, cfg->hashes);
      from_config(range, c.hash_range, cfg->hash_range);
      if (n->count() == 0 && !c.sample_sizes.empty()) cfg->n = c.sample_sizes.front();
    }
    if (model_path->empty()) throw Error(ErrorCode::kInvalidArgument, "--model is required");
    const auto base = read_model_json(*model_path);
    if (*target >= base.p) {
      throw Error(ErrorCode::kIndexOutOfRange, "--target outside the base model");
    }
    const auto result = run_hashed_example(base, *cfg, *target);
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : result.rows) {
      rows.push_back({"trial", std::to_string(row.trial), std::to_string(row.rank_hashed),
                      std::to_string(row.rank_linear), num(row.score_hashed),
                      num(row.best_irrelevant_hashed)});
    }
    rows.push_back({"summary", std::to_string(result.rows.size()),
                    std::to_string(result.first_hashed), std::to_string(result.first_linear),
                    "", ""});
    Output out(*out_path);
    write_csv_rows(out.stream(),
                   {"row", "trial", "rank_hashed", "rank_linear", "score_hashed",
                    "best_irrelevant_hashed"},
                   rows);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support recovery for sparse quadratic logistic models"};
  app.require_subcommand(1);
  Globals g;
  auto* seed = app.add_option("--seed", g.seed, "master seed");
  app.add_option("--threads", g.threads, "worker threads (0 = runtime default)");
  app.add_option("--format", g.format, "dataset format")
      ->check(CLI::IsMember({"csv", "sparse"}));
  app.add_flag("--strict", g.strict, "exit with status 4 on warnings");
  app.add_option("--config", g.config_path, "experiment config JSON");

  std::vector<std::pair<CLI::App*, Action>> actions;
  auto reg = [&](Action (*add)(CLI::App&, Globals&)) {
    auto action = add(app, g);
    actions.emplace_back(app.get_subcommands({}).back(), std::move(action));
  };
  reg(add_gen);
  reg(add_screen);
  reg(add_screen_nl);
  reg(add_strong);
  reg(add_fit);
  reg(add_eval);
  reg(add_oracle);
  reg(add_bench);
  reg(add_fig1);
  reg(add_sweep_weak);
  reg(add_table2);
  reg(add_hashed_example);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!g.config_path.empty()) g.config = read_experiment_config(g.config_path);
    // --seed wins over the config seed.
    if (g.config && g.config->seed && seed->count() == 0) g.seed = *g.config->seed;
    set_num_threads(g.threads);
    Warnings warnings;
    for (auto& [sub, action] : actions) {
      if (sub->parsed()) action(warnings);
    }
    if (g.strict && warnings.any()) return kExitWarning;
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kInfeasible:
        return kExitUsage;
      default:
        return kExitData;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
