#include "enarkit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "enarkit/error.hpp"
#include "enarkit/io.hpp"

namespace enarkit::cli {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  if (is_numerical(code)) return kNumerical;
  if (code == ErrorCode::InvalidArgument) return kUsage;
  return kData;
}

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(ErrorCode::InvalidArgument, "unknown key '" + key + "' in " + where);
  }
}

VectorXd vector_from_json(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size()));
}

json vector_to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

MatrixXd matrix_from_json(const json& j, Index cols) {
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) fail(ErrorCode::ParseError, "ragged latent matrix in fit JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

std::vector<Index> index_list(const json& j) { return j.get<std::vector<Index>>(); }

std::vector<bench::ModelKind> model_list(const json& j) {
  std::vector<bench::ModelKind> out;
  for (const auto& s : j) out.push_back(estimate::parse_model(s.get<std::string>()));
  return out;
}

network::IsolationPolicy parse_isolation(const std::string& s) {
  if (s == "resample") return network::IsolationPolicy::Resample;
  if (s == "allow") return network::IsolationPolicy::Allow;
  fail(ErrorCode::InvalidArgument, "isolation must be 'resample' or 'allow'");
}

std::string isolation_name(network::IsolationPolicy p) {
  return p == network::IsolationPolicy::Resample ? "resample" : "allow";
}

json read_json_file(const fs::path& path) {
  std::string text = io::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_atomic(path, text);
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& config) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* env = std::getenv("ENARKIT_SEED")) {
    return static_cast<std::uint64_t>(io::parse_integer(env, "ENARKIT_SEED"));
  }
  return kDefaultSeed;
}

network::Graph load_graph(const std::string& edges, const process::Panel& panel) {
  return network::read_edge_list(edges, panel.n());
}

}  // namespace

lsm::LsmConfig lsm_config_from_json(const json& j) {
  reject_unknown(j, {"max_iters", "tol", "step_init", "backtrack", "row_norm_cap", "min_step"}, "lsm config");
  lsm::LsmConfig c;
  c.max_iters = j.value("max_iters", c.max_iters);
  c.tol = j.value("tol", c.tol);
  c.step_init = j.value("step_init", c.step_init);
  c.backtrack = j.value("backtrack", c.backtrack);
  c.row_norm_cap = j.value("row_norm_cap", c.row_norm_cap);
  c.min_step = j.value("min_step", c.min_step);
  c.validate();
  return c;
}

bench::ExperimentConfig experiment_from_json(const json& j) {
  reject_unknown(j,
                 {"n_values", "t_values", "k_values", "generators", "truth_models", "fit_models", "reps", "base_seed",
                  "alpha", "theta", "beta", "gamma", "sigma", "covariate_variances", "amnar_beta2", "amnar_s",
                  "lsm_q_scale", "lsm_v_mean", "lsm_v_sd", "lsm", "q_block", "rho", "isolation", "oracle_latent",
                  "record_timing"},
                 "experiment config");
  bench::ExperimentConfig c;
  try {
    if (j.contains("n_values")) c.n_values = index_list(j["n_values"]);
    if (j.contains("t_values")) c.t_values = index_list(j["t_values"]);
    if (j.contains("k_values")) c.k_values = index_list(j["k_values"]);
    if (j.contains("generators")) {
      c.generators.clear();
      for (const auto& g : j["generators"]) c.generators.push_back(bench::parse_generator(g.get<std::string>()));
    }
    if (j.contains("truth_models")) c.truth_models = model_list(j["truth_models"]);
    if (j.contains("fit_models")) c.fit_models = model_list(j["fit_models"]);
    c.reps = j.value("reps", c.reps);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.alpha = j.value("alpha", c.alpha);
    c.theta = j.value("theta", c.theta);
    if (j.contains("beta")) c.beta = vector_from_json(j["beta"]);
    if (j.contains("gamma")) c.gamma = vector_from_json(j["gamma"]);
    c.sigma = j.value("sigma", c.sigma);
    if (j.contains("covariate_variances")) c.covariate_variances = vector_from_json(j["covariate_variances"]);
    c.amnar_beta2 = j.value("amnar_beta2", c.amnar_beta2);
    c.amnar_s = j.value("amnar_s", c.amnar_s);
    c.lsm_q_scale = j.value("lsm_q_scale", c.lsm_q_scale);
    c.lsm_v_mean = j.value("lsm_v_mean", c.lsm_v_mean);
    c.lsm_v_sd = j.value("lsm_v_sd", c.lsm_v_sd);
    if (j.contains("lsm")) c.lsm = lsm_config_from_json(j["lsm"]);
    c.q_block = j.value("q_block", c.q_block);
    if (j.contains("rho") && !j["rho"].is_null()) c.rho = j["rho"].get<double>();
    if (j.contains("isolation")) c.isolation = parse_isolation(j["isolation"].get<std::string>());
    c.oracle_latent = j.value("oracle_latent", c.oracle_latent);
    c.record_timing = j.value("record_timing", c.record_timing);
  } catch (const json::type_error& e) {
    fail(ErrorCode::InvalidArgument, std::string("experiment config: ") + e.what());
  }
  return c;
}

json experiment_to_json(const bench::ExperimentConfig& c) {
  json j;
  j["n_values"] = c.n_values;
  j["t_values"] = c.t_values;
  j["k_values"] = c.k_values;
  j["generators"] = json::array();
  for (auto g : c.generators) j["generators"].push_back(bench::generator_name(g));
  j["truth_models"] = json::array();
  for (auto m : c.truth_models) j["truth_models"].push_back(estimate::model_name(m));
  j["fit_models"] = json::array();
  for (auto m : c.fit_models) j["fit_models"].push_back(estimate::model_name(m));
  j["reps"] = c.reps;
  j["base_seed"] = c.base_seed;
  j["alpha"] = c.alpha;
  j["theta"] = c.theta;
  j["beta"] = vector_to_json(c.beta);
  j["gamma"] = vector_to_json(c.gamma);
  j["sigma"] = c.sigma;
  j["covariate_variances"] = vector_to_json(c.covariate_variances);
  j["amnar_beta2"] = c.amnar_beta2;
  j["amnar_s"] = c.amnar_s;
  j["lsm_q_scale"] = c.lsm_q_scale;
  j["lsm_v_mean"] = c.lsm_v_mean;
  j["lsm_v_sd"] = c.lsm_v_sd;
  j["lsm"] = {{"max_iters", c.lsm.max_iters}, {"tol", c.lsm.tol},           {"step_init", c.lsm.step_init},
              {"backtrack", c.lsm.backtrack}, {"row_norm_cap", c.lsm.row_norm_cap}, {"min_step", c.lsm.min_step}};
  j["q_block"] = c.q_block;
  j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
  j["isolation"] = isolation_name(c.isolation);
  j["oracle_latent"] = c.oracle_latent;
  j["record_timing"] = c.record_timing;
  return j;
}

namespace {

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::string> model, generator;
  std::optional<Index> n, t, k;
  std::optional<std::uint64_t> seed;
};

// Single-data-set settings share the experiment schema; grids must be singletons.
void simulate(const SimulateArgs& args, std::ostream& out) {
  json cfg = args.config.empty() ? json::object() : read_json_file(args.config);
  bench::ExperimentConfig config = experiment_from_json(cfg);
  if (config.n_values.size() != 1 || config.t_values.size() != 1 || config.k_values.size() != 1 ||
      config.generators.size() != 1 || config.truth_models.size() != 1) {
    fail(ErrorCode::InvalidArgument, "simulate needs a single N, T, K, generator and truth model");
  }
  bench::DataCell cell{config.generators[0], config.truth_models[0], config.n_values[0], config.t_values[0],
                       config.k_values[0]};
  if (args.model) cell.truth = estimate::parse_model(*args.model);
  if (args.generator) cell.gen = bench::parse_generator(*args.generator);
  if (args.n) cell.n = *args.n;
  if (args.t) cell.t = *args.t;
  if (args.k) cell.k = *args.k;
  config.n_values = {cell.n};
  config.t_values = {cell.t};
  config.k_values = {cell.k};
  config.generators = {cell.gen};
  config.truth_models = {cell.truth};
  config.validate();
  if (cell.k >= cell.n) fail(ErrorCode::InvalidArgument, "k must be below n");

  std::optional<std::uint64_t> cfg_seed;
  if (cfg.contains("base_seed")) cfg_seed = config.base_seed;
  const std::uint64_t seed = resolve_seed(args.seed, cfg_seed);
  Rng rng(seed);
  bench::SimulatedData data = bench::simulate_data(cell, config, rng, 0);

  // stationary mean phi = (I - G)^{-1} (latent effect), G = alpha I + theta L
  MatrixXd g = config.theta * MatrixXd(data.laplacian);
  g.diagonal().array() += config.alpha;
  VectorXd phi = (MatrixXd::Identity(cell.n, cell.n) - g).partialPivLu().solve(data.latent_effect);

  json truth;
  truth["model"] = estimate::model_name(cell.truth);
  truth["generator"] = bench::generator_name(cell.gen);
  truth["n"] = cell.n;
  truth["t"] = cell.t;
  truth["k"] = cell.k;
  truth["seed"] = seed;
  truth["alpha"] = config.alpha;
  truth["theta"] = config.theta;
  VectorXd beta = cell.truth == bench::ModelKind::NAR ? VectorXd() : config.beta_for(cell.k);
  truth["beta"] = vector_to_json(beta);
  if (cell.truth == bench::ModelKind::AMNAR) {
    truth["beta2"] = config.amnar_beta2;
    truth["s"] = config.amnar_s;
    truth["multiplier"] = process::amnar_multiplier(cell.n, cell.t, config.amnar_s);
  }
  truth["gamma"] = vector_to_json(config.gamma);
  truth["sigma"] = config.sigma;
  truth["noise_variance"] = config.sigma * config.sigma;
  truth["covariate_variances"] = vector_to_json(config.covariate_variances);
  truth["rho"] = config.rho_for(cell.n);
  truth["coefficients"] = estimate::DesignSpec{cell.truth, cell.truth == bench::ModelKind::NAR ? 0 : cell.k,
                                               config.amnar_s}
                              .coefficient_names(config.gamma.size());
  truth["mu"] = vector_to_json(data.mu_true);
  truth["latent"] = matrix_to_json(data.latent_truth);
  truth["latent_effect"] = vector_to_json(data.latent_effect);
  truth["phi"] = vector_to_json(phi);
  truth["phi_digest"] = {{"mean", phi.size() ? phi.mean() : 0.0},
                         {"norm", phi.norm()},
                         {"min", phi.size() ? phi.minCoeff() : 0.0},
                         {"max", phi.size() ? phi.maxCoeff() : 0.0}};
  truth["edges"] = data.graph.edge_count();
  truth["isolated_nodes"] = data.graph.isolated_nodes().size();

  fs::path dir(args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, dir.string() + ": " + ec.message());
  network::write_edge_list(dir / "edges.csv", data.graph);
  process::write_panel_csv(dir / "panel.csv", data.panel);
  io::write_atomic(dir / "truth.json", truth.dump(2) + "\n");
  out << json{{"edges", (dir / "edges.csv").string()},
              {"panel", (dir / "panel.csv").string()},
              {"truth", (dir / "truth.json").string()},
              {"seed", seed}}
             .dump()
      << "\n";
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string edges, panel, model = "enar", out, lsm_config;
  std::optional<Index> k;
  double s = 0.25;
  Index window_start = 0;
  std::optional<Index> window_len;
  bool no_intercept = false;
};

void fit(const FitArgs& args, std::ostream& out) {
  const bench::ModelKind model = estimate::parse_model(args.model);
  if (model == bench::ModelKind::NAR && args.k) fail(ErrorCode::InvalidArgument, "--k is not allowed with the NAR model");
  if (model != bench::ModelKind::NAR && !args.k) fail(ErrorCode::InvalidArgument, "--k is required for this model");
  if (model != bench::ModelKind::ENR && args.no_intercept) {
    fail(ErrorCode::InvalidArgument, "--no-intercept only applies to ENR");
  }
  process::Panel full = process::read_panel_csv(args.panel);
  network::Graph graph = load_graph(args.edges, full);
  if (args.window_start < 0 || args.window_start >= full.t_len()) {
    fail(ErrorCode::InvalidArgument, "--window-start outside the panel");
  }
  Index len = args.window_len.value_or(full.t_len() - args.window_start);
  process::Panel panel = full.window(args.window_start, len);

  estimate::FitOptions options;
  options.enr_intercept = !args.no_intercept;
  estimate::FitResult result;
  MatrixXd latent(graph.n(), 0);
  switch (model) {
    case bench::ModelKind::NAR:
      result = estimate::fit_nar(panel, graph, options);
      break;
    case bench::ModelKind::ENAR: {
      auto f = estimate::fit_enar(panel, graph, *args.k, options);
      result = f.fit;
      latent = f.embedding.vectors;
      break;
    }
    case bench::ModelKind::ENR: {
      auto f = estimate::fit_enr(panel, graph, *args.k, options);
      result = f.fit;
      latent = f.embedding.vectors;
      break;
    }
    case bench::ModelKind::AMNAR: {
      lsm::LsmConfig lc = args.lsm_config.empty() ? lsm::LsmConfig{} : lsm_config_from_json(read_json_file(args.lsm_config));
      auto f = estimate::fit_amnar(panel, graph, *args.k, args.s, lc, options);
      result = f.fit;
      latent = f.latent_estimate;
      break;
    }
  }
  json j = estimate::fit_to_json(result);
  j["window_start"] = args.window_start;
  j["window_len"] = len;
  j["latent"] = matrix_to_json(latent);
  emit(j.dump(2) + "\n", args.out, out);
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string fit, edges, panel, out;
  std::optional<Index> origin;
};

void predict(const PredictArgs& args, std::ostream& out) {
  json j = read_json_file(args.fit);
  estimate::FitResult result = estimate::fit_from_json(j);
  process::Panel panel = process::read_panel_csv(args.panel);
  network::Graph graph = load_graph(args.edges, panel);
  if (result.n_nodes != graph.n()) fail(ErrorCode::DimensionMismatch, "fit and graph differ in node count");
  const Index cols = result.spec.latent_columns();
  MatrixXd latent = j.contains("latent") && cols > 0 ? matrix_from_json(j.at("latent"), cols) : MatrixXd(graph.n(), 0);
  if (latent.rows() != graph.n()) fail(ErrorCode::DimensionMismatch, "latent matrix in fit JSON has wrong row count");

  // the forecast at origin t needs Z_t, so the last usable origin is T - 1
  Index origin = args.origin.value_or(panel.t_len() - 1);
  if (origin < 0 || origin >= panel.t_len()) fail(ErrorCode::InvalidArgument, "--origin must lie in [0, T)");
  network::SparseMatrix l = network::normalized_laplacian(graph, true);
  VectorXd y_hat = estimate::predict_one_step(result, l, panel.y.col(origin), panel.z[static_cast<std::size_t>(origin)],
                                              latent);
  VectorXd actual = panel.y.col(origin + 1);
  std::string csv = "node,t,y_hat,y_actual\n";
  for (Index i = 0; i < graph.n(); ++i) {
    csv += std::to_string(i) + ',' + std::to_string(origin + 1) + ',' + io::format_double(y_hat(i)) + ',' +
           io::format_double(actual(i)) + '\n';
  }
  emit(csv, args.out, out);
}

// ---------------------------------------------------------------------------
// select-k

struct SelectArgs {
  std::string edges, out;
  Index k_max = 8;
  int folds = 5;
  double holdout = 0.1;
  std::optional<Index> n;
  std::optional<std::uint64_t> seed;
};

void select(const SelectArgs& args, std::ostream& out) {
  network::Graph graph = network::read_edge_list(args.edges, args.n);
  const std::uint64_t seed = resolve_seed(args.seed, std::nullopt);
  Rng rng(seed);
  network::SelectKOptions options{args.k_max, args.folds, args.holdout};
  auto result = network::select_k(graph, options, rng);
  json j{{"k", result.k}, {"cv_error", result.cv_error}, {"seed", seed}};
  emit(j.dump() + "\n", args.out, out);
}

// ---------------------------------------------------------------------------
// mc

struct McArgs {
  std::string config, out = "results.csv", summary = "summary.csv", group_by = "gen,truth,fit,N,T,K";
  std::optional<int> reps;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

void mc(const McArgs& args, std::ostream& out) {
  json cfg = args.config.empty() ? json::object() : read_json_file(args.config);
  bench::ExperimentConfig config = experiment_from_json(cfg);
  if (args.reps) config.reps = *args.reps;
  std::optional<std::uint64_t> cfg_seed;
  if (cfg.contains("base_seed")) cfg_seed = config.base_seed;
  config.base_seed = resolve_seed(args.seed, cfg_seed);
  if (args.jobs < 1) fail(ErrorCode::InvalidArgument, "--jobs must be at least 1");

  std::vector<std::string> group_by;
  std::stringstream ss(args.group_by);
  for (std::string col; std::getline(ss, col, ',');) {
    if (!col.empty()) group_by.push_back(col);
  }
  auto results = bench::run_grid(config, args.jobs);
  auto table = bench::summarize(results, group_by);
  io::write_atomic(args.out, bench::results_csv(results));
  io::write_atomic(args.summary, bench::summary_csv(table));
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.ok() ? 0 : 1;
  out << json{{"rows", results.size()}, {"failed", failed}, {"results", args.out}, {"summary", args.summary},
              {"base_seed", config.base_seed}}
             .dump()
      << "\n";
}

void report(std::ostream& err, const std::string& code, const std::string& message, int exit) {
  err << json{{"error", code}, {"message", message}, {"exit_code", exit}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding network autoregression toolkit: simulate, fit, predict, select-k, mc.\n"
               "Seeds fall back to the ENARKIT_SEED environment variable when --seed is absent."};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a graph and panel; writes edges.csv, panel.csv, truth.json");
  s->add_option("--config", sim.config, "Experiment config JSON (singleton grid); defaults apply when omitted");
  s->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  s->add_option("--model", sim.model, "Truth model: nar, enar or amnar (overrides config)");
  s->add_option("--gen", sim.generator, "Generator: dcsbm, dcmmsbm, rdpg or lsm (overrides config)");
  s->add_option("--n", sim.n, "Number of nodes (default 40)");
  s->add_option("--t", sim.t, "Number of transitions T; the panel holds y_0..y_T (default 40)");
  s->add_option("--k", sim.k, "Latent dimension (default 3)");
  s->add_option("--seed", sim.seed, "Seed (else config base_seed, else ENARKIT_SEED, else 20240601)");

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Least-squares fit of NAR, ENAR, AMNAR or ENR; writes fit JSON");
  f->add_option("--edges", fa.edges, "Edge-list CSV (src,dst)")->required();
  f->add_option("--panel", fa.panel, "Panel CSV (node,t,y,z1..zp)")->required();
  f->add_option("--model", fa.model, "nar, enar, amnar or enr")->capture_default_str();
  f->add_option("--k", fa.k, "Latent dimension (required except for nar, rejected for nar)");
  f->add_option("--s", fa.s, "AMNAR rate exponent s in r = N^-s T^-1/2")->capture_default_str();
  f->add_option("--window-start", fa.window_start, "First time index of the fitting window")->capture_default_str();
  f->add_option("--window-len", fa.window_len, "Number of transitions in the window (default: to the end)");
  f->add_option("--lsm-config", fa.lsm_config, "LSM optimizer settings JSON (amnar only)");
  f->add_flag("--no-intercept", fa.no_intercept, "Drop the ENR intercept column");
  f->add_option("--out", fa.out, "Output path (default stdout)");

  PredictArgs pa;
  auto* p = app.add_subcommand("predict", "One-step forecast from a fit JSON; writes CSV node,t,y_hat,y_actual");
  p->add_option("--fit", pa.fit, "Fit JSON from the fit subcommand")->required();
  p->add_option("--edges", pa.edges, "Edge-list CSV")->required();
  p->add_option("--panel", pa.panel, "Panel CSV")->required();
  p->add_option("--origin", pa.origin, "Forecast origin t in [0, T); forecasts y_{t+1} (default T-1)");
  p->add_option("--out", pa.out, "Output path (default stdout)");

  SelectArgs sa;
  auto* k = app.add_subcommand("select-k", "Edge cross-validation choice of the embedding dimension");
  k->add_option("--edges", sa.edges, "Edge-list CSV")->required();
  k->add_option("--n", sa.n, "Node count (default: largest id + 1)");
  k->add_option("--k-max", sa.k_max, "Largest candidate dimension")->capture_default_str();
  k->add_option("--folds", sa.folds, "Cross-validation folds")->capture_default_str();
  k->add_option("--holdout", sa.holdout, "Held-out fraction of node pairs per fold")->capture_default_str();
  k->add_option("--seed", sa.seed, "Seed (else ENARKIT_SEED, else 20240601)");
  k->add_option("--out", sa.out, "Output path (default stdout)");

  McArgs ma;
  auto* m = app.add_subcommand("mc", "Monte Carlo grid; writes per-replication and summary CSVs");
  m->add_option("--config", ma.config, "Experiment config JSON; defaults apply when omitted");
  m->add_option("--out", ma.out, "Results CSV path")->capture_default_str();
  m->add_option("--summary", ma.summary, "Summary CSV path")->capture_default_str();
  m->add_option("--group-by", ma.group_by, "Comma-separated summary grouping columns")->capture_default_str();
  m->add_option("--reps", ma.reps, "Override the number of replications per cell");
  m->add_option("--jobs", ma.jobs, "Worker threads")->capture_default_str();
  m->add_option("--seed", ma.seed, "Base seed (else config base_seed, else ENARKIT_SEED, else 20240601)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    // subcommand help arrives as CallForHelp from the subcommand parser
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return kOk;
    }
    report(err, "UsageError", e.what(), kUsage);
    return kUsage;
  }

  try {
    if (*s) simulate(sim, out);
    if (*f) fit(fa, out);
    if (*p) predict(pa, out);
    if (*k) select(sa, out);
    if (*m) mc(ma, out);
  } catch (const Error& e) {
    int code = exit_code_for(e.code());
    report(err, std::string(error_code_name(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report(err, "IoError", e.what(), kData);
    return kData;
  }
  return kOk;
}

}  // namespace enarkit::cli
