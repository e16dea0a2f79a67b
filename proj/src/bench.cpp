#include "enarkit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "enarkit/error.hpp"
#include "enarkit/io.hpp"

namespace enarkit::bench {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string generator_name(Generator g) {
  switch (g) {
    case Generator::DCSBM: return "dcsbm";
    case Generator::DCMMSBM: return "dcmmsbm";
    case Generator::RDPG: return "rdpg";
    case Generator::LSM: return "lsm";
  }
  return "unknown";
}

Generator parse_generator(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "dcsbm") return Generator::DCSBM;
  if (lower == "dcmmsbm") return Generator::DCMMSBM;
  if (lower == "rdpg") return Generator::RDPG;
  if (lower == "lsm") return Generator::LSM;
  fail(ErrorCode::InvalidArgument, "unknown generator '" + name + "' (expected dcsbm, dcmmsbm, rdpg or lsm)");
}

VectorXd alternating_beta(Index k) {
  VectorXd b(k);
  for (Index j = 0; j < k; ++j) b(j) = (j % 2 == 0 ? 1.0 : -1.0) / static_cast<double>(j + 1);
  return b;
}

void ExperimentConfig::validate() const {
  auto positive = [](const std::vector<Index>& v, const char* what) {
    if (v.empty()) fail(ErrorCode::InvalidArgument, std::string(what) + " grid is empty");
    for (Index x : v) {
      if (x < 1) fail(ErrorCode::InvalidArgument, std::string(what) + " grid values must be positive");
    }
  };
  positive(n_values, "N");
  positive(t_values, "T");
  positive(k_values, "K");
  if (generators.empty() || truth_models.empty() || fit_models.empty()) {
    fail(ErrorCode::InvalidArgument, "generators, truth models and fit models must be nonempty");
  }
  if (reps < 1) fail(ErrorCode::InvalidArgument, "reps must be at least 1");
  if (!(q_block > 0.0 && q_block <= 1.0 / 3.0)) fail(ErrorCode::InvalidArgument, "q_block must lie in (0, 1/3]");
  if (rho && !(*rho > 0.0 && *rho <= 1.0)) fail(ErrorCode::InvalidArgument, "rho must lie in (0, 1]");
  if (!process::check_stationarity(alpha, theta)) fail(ErrorCode::NotStationary, "|alpha| + |theta| must be below 1");
  if (gamma.size() != covariate_variances.size()) {
    fail(ErrorCode::InvalidArgument, "gamma and covariate variances differ in length");
  }
  if (!(amnar_s > 0.0 && amnar_s < 0.5)) fail(ErrorCode::InvalidArgument, "amnar s must lie in (0, 1/2)");
  for (ModelKind m : truth_models) {
    if (m == ModelKind::ENR) fail(ErrorCode::InvalidArgument, "ENR is not a time-series truth model");
    if (m == ModelKind::AMNAR) {
      for (Generator g : generators) {
        if (g != Generator::LSM) fail(ErrorCode::InvalidArgument, "AMNAR truth requires the lsm generator");
      }
    }
  }
  for (ModelKind m : fit_models) {
    if (m == ModelKind::ENR) fail(ErrorCode::InvalidArgument, "ENR is not supported as a grid fit model");
  }
  if (beta.size() > 0) {
    for (Index k : k_values) {
      if (k != beta.size()) fail(ErrorCode::InvalidArgument, "explicit beta length must equal every K in the grid");
    }
  }
  lsm.validate();
}

VectorXd ExperimentConfig::beta_for(Index k) const { return beta.size() > 0 ? beta : alternating_beta(k); }

double ExperimentConfig::rho_for(Index n) const { return rho ? *rho : 1.0 / std::sqrt(static_cast<double>(n)); }

std::string DataCell::id() const {
  return generator_name(gen) + "|" + estimate::model_name(truth) + "|N=" + std::to_string(n) +
         "|T=" + std::to_string(t) + "|K=" + std::to_string(k);
}

std::string Cell::id() const { return data.id() + "|fit=" + estimate::model_name(fit); }

std::uint64_t replication_seed(std::uint64_t base_seed, const DataCell& cell, int rep) {
  return derive_seed(base_seed, cell.id(), static_cast<std::uint64_t>(rep));
}

SimulatedData simulate_data(const DataCell& cell, const ExperimentConfig& config, Rng& rng, Index holdout) {
  const Index n = cell.n, k = cell.k, t = cell.t;
  const double rho = config.rho_for(n);
  MatrixXd p;
  lsm::LsmState planted;
  switch (cell.gen) {
    case Generator::DCSBM:
      p = network::connection_matrix(network::draw_dcsbm_spec(n, k, config.q_block, n * rho, rng)).p;
      break;
    case Generator::DCMMSBM:
      p = network::connection_matrix(network::draw_dcmmsbm_spec(n, k, config.q_block, n * rho, rng)).p;
      break;
    case Generator::RDPG: {
      network::RdpgSpec spec;
      spec.rho = rho;
      spec.positions.resize(n, k);
      for (Index i = 0; i < n; ++i) spec.positions.row(i) = draw_dirichlet(rng, k).transpose();
      p = network::connection_matrix(spec).p;
      break;
    }
    case Generator::LSM:
      planted = lsm::draw_planted_state(n, k, config.lsm_q_scale, config.lsm_v_mean, config.lsm_v_sd, rng);
      p = planted.chi().unaryExpr([](double x) { return lsm::sigmoid(x); });
      p.diagonal().setZero();
      break;
  }

  SimulatedData data;
  network::SamplingOptions sampling;
  sampling.isolation = config.isolation;
  data.graph = network::sample_graph(p, rng, sampling);
  data.laplacian = network::normalized_laplacian(data.graph, config.isolation == network::IsolationPolicy::Allow);

  process::CovariateSpec cov{config.covariate_variances};
  const Index p_cov = cov.p();
  switch (cell.truth) {
    case ModelKind::ENAR: {
      data.latent_truth = network::spectral_embed(p, k).vectors;
      VectorXd beta = config.beta_for(k);
      data.latent_effect = data.latent_truth * beta;
      data.mu_true.resize(k + 2 + p_cov);
      data.mu_true << beta, config.alpha, config.theta, config.gamma;
      break;
    }
    case ModelKind::NAR:
      data.latent_truth.resize(n, 0);
      data.latent_effect = VectorXd::Zero(n);
      data.mu_true.resize(2 + p_cov);
      data.mu_true << config.alpha, config.theta, config.gamma;
      break;
    case ModelKind::AMNAR: {
      data.latent_truth = planted.stacked();
      process::AmnarParams params;
      params.beta1 = config.beta_for(k);
      params.beta2 = config.amnar_beta2;
      params.s = config.amnar_s;
      data.latent_effect = process::amnar_latent_effect(params, data.latent_truth, t);
      data.mu_true.resize(k + 3 + p_cov);
      data.mu_true << params.beta1, params.beta2, config.alpha, config.theta, config.gamma;
      break;
    }
    case ModelKind::ENR:
      fail(ErrorCode::InvalidArgument, "ENR is not a time-series truth model");
  }
  data.panel = process::simulate_with_effect(config.alpha, config.theta, config.gamma, config.sigma, data.laplacian,
                                             data.latent_effect, cov, t + holdout, rng);
  return data;
}

namespace {

double relative_scalar_error(double truth, double est) {
  if (truth == 0.0) return std::nan("");
  return std::abs(est - truth) / std::abs(truth);
}

// ||beta_hat - H' beta|| / ||beta|| with H aligning the estimated latent block to the truth.
double aligned_beta_error(const MatrixXd& latent_hat, const MatrixXd& latent_true, const VectorXd& beta_hat,
                          const VectorXd& beta_true, Index rotated_cols) {
  if (beta_true.norm() == 0.0) return std::nan("");
  auto proc = network::procrustes_align(latent_hat.leftCols(rotated_cols), latent_true.leftCols(rotated_cols));
  VectorXd target = beta_true;
  target.head(rotated_cols) = proc.h.transpose() * beta_true.head(rotated_cols);
  return (beta_hat - target).norm() / beta_true.norm();
}

ReplicationResult failed_row(const DataCell& cell, ModelKind fit, int rep, std::uint64_t seed,
                             const std::string& status) {
  ReplicationResult r;
  r.cell = Cell{cell, fit};
  r.rep = rep;
  r.seed = seed;
  r.status = status;
  return r;
}

std::string status_of(const std::exception& e) {
  if (auto err = dynamic_cast<const Error*>(&e)) return std::string(error_code_name(err->code()));
  return "Exception";
}

}  // namespace

std::vector<ReplicationResult> run_data_replication(const DataCell& cell, int rep, const ExperimentConfig& config) {
  using clock = std::chrono::steady_clock;
  const std::uint64_t seed = replication_seed(config.base_seed, cell, rep);
  Rng rng(seed);
  std::vector<ReplicationResult> out;

  auto t_data = clock::now();
  SimulatedData data;
  try {
    data = simulate_data(cell, config, rng);
  } catch (const std::exception& e) {
    for (ModelKind fit : config.fit_models) out.push_back(failed_row(cell, fit, rep, seed, status_of(e)));
    return out;
  }
  double data_ms = std::chrono::duration<double, std::milli>(clock::now() - t_data).count();

  const Index t = cell.t, k = cell.k;
  const process::Panel training = data.panel.window(0, t);
  const VectorXd y_t = data.panel.y.col(t);
  const MatrixXd& z_t = data.panel.z[static_cast<std::size_t>(t)];
  VectorXd true_mean = config.alpha * y_t + config.theta * (data.laplacian * y_t) + data.latent_effect;
  if (z_t.cols() > 0) true_mean += z_t * config.gamma;

  for (ModelKind fit_model : config.fit_models) {
    auto t_fit = clock::now();
    ReplicationResult r = failed_row(cell, fit_model, rep, seed, "ok");
    try {
      estimate::DesignSpec spec{fit_model, fit_model == ModelKind::NAR ? 0 : k, config.amnar_s};
      MatrixXd latent;
      estimate::Diagnostics extra;
      bool oracle = config.oracle_latent && fit_model == cell.truth;
      if (fit_model == ModelKind::NAR) {
        latent.resize(cell.n, 0);
      } else if (oracle) {
        latent = data.latent_truth;
      } else if (fit_model == ModelKind::ENAR) {
        latent = network::spectral_embed(data.graph, k).vectors;
      } else {
        lsm::LsmFit lf = lsm::fit_lsm(data.graph, k, config.lsm);
        latent = lf.state.stacked();
        extra.lsm_loglik = lf.loglik_trace.back();
        extra.lsm_stalled = lf.stalled;
      }
      estimate::FitResult fit = estimate::fit_with_latent(training, data.laplacian, latent, spec);
      r.names = fit.names;
      r.mu_hat = fit.mu_hat;
      r.se = fit.se;
      r.diagnostics = fit.diagnostics;
      r.diagnostics.lsm_loglik = extra.lsm_loglik;
      r.diagnostics.lsm_stalled = extra.lsm_stalled;
      r.alpha_hat = fit.coefficient("alpha");
      r.theta_hat = fit.coefficient("theta");
      r.rmse_alpha = relative_scalar_error(config.alpha, r.alpha_hat);
      r.rmse_theta = relative_scalar_error(config.theta, r.theta_hat);
      r.sigma2_hat = fit.sigma2_hat;
      r.aic = fit.aic;
      r.bic = fit.bic;
      if (fit_model == cell.truth && fit_model != ModelKind::NAR) {
        const Index lat = spec.latent_columns();
        r.rmse_beta = aligned_beta_error(latent, data.latent_truth, fit.mu_hat.head(lat), data.mu_true.head(lat),
                                         fit_model == ModelKind::AMNAR ? k : lat);
      }
      VectorXd y_hat = estimate::predict_one_step(fit, data.laplacian, y_t, z_t, latent);
      r.rmsp = estimate::rmsp_forecast(y_hat, true_mean);
    } catch (const std::exception& e) {
      r = failed_row(cell, fit_model, rep, seed, status_of(e));
    }
    if (config.record_timing) {
      r.wall_ms = data_ms + std::chrono::duration<double, std::milli>(clock::now() - t_fit).count();
    }
    out.push_back(std::move(r));
  }
  return out;
}

ReplicationResult run_replication(const Cell& cell, int rep, const ExperimentConfig& config) {
  ExperimentConfig single = config;
  single.fit_models = {cell.fit};
  return run_data_replication(cell.data, rep, single).front();
}

namespace {

std::vector<DataCell> data_cells(const ExperimentConfig& config) {
  std::vector<DataCell> cells;
  for (Generator g : config.generators)
    for (ModelKind truth : config.truth_models)
      for (Index n : config.n_values)
        for (Index t : config.t_values)
          for (Index k : config.k_values) cells.push_back(DataCell{g, truth, n, t, k});
  return cells;
}

}  // namespace

std::vector<Cell> grid_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (Generator g : config.generators)
    for (ModelKind truth : config.truth_models)
      for (ModelKind fit : config.fit_models)
        for (Index n : config.n_values)
          for (Index t : config.t_values)
            for (Index k : config.k_values) cells.push_back(Cell{DataCell{g, truth, n, t, k}, fit});
  return cells;
}

std::vector<ReplicationResult> run_grid(const ExperimentConfig& config, int jobs) {
  config.validate();
  const auto cells = data_cells(config);
  const std::size_t reps = static_cast<std::size_t>(config.reps);
  const std::size_t tasks = cells.size() * reps;
  std::vector<std::vector<ReplicationResult>> task_results(tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t task = next++; task < tasks; task = next++) {
      task_results[task] = run_data_replication(cells[task / reps], static_cast<int>(task % reps), config);
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::map<std::string, std::size_t> data_index;
  for (std::size_t i = 0; i < cells.size(); ++i) data_index[cells[i].id()] = i;
  std::vector<ReplicationResult> out;
  out.reserve(tasks * config.fit_models.size());
  for (const Cell& cell : grid_cells(config)) {
    std::size_t fit_pos = static_cast<std::size_t>(
        std::find(config.fit_models.begin(), config.fit_models.end(), cell.fit) - config.fit_models.begin());
    std::size_t d = data_index.at(cell.data.id());
    for (std::size_t rep = 0; rep < reps; ++rep) out.push_back(task_results[d * reps + rep][fit_pos]);
  }
  return out;
}

std::string results_csv(const std::vector<ReplicationResult>& results) {
  std::string out =
      "gen,truth,fit,N,T,K,rep,seed,alpha_hat,theta_hat,rmse_alpha,rmse_theta,rmse_beta,rmsp,sigma2_hat,aic,bic,"
      "status,wall_ms\n";
  for (const auto& r : results) {
    const auto& d = r.cell.data;
    out += generator_name(d.gen) + ',' + estimate::model_name(d.truth) + ',' + estimate::model_name(r.cell.fit) + ',' +
           std::to_string(d.n) + ',' + std::to_string(d.t) + ',' + std::to_string(d.k) + ',' + std::to_string(r.rep) +
           ',' + std::to_string(r.seed);
    for (double x : {r.alpha_hat, r.theta_hat, r.rmse_alpha, r.rmse_theta, r.rmse_beta, r.rmsp, r.sigma2_hat, r.aic,
                     r.bic}) {
      out += ',' + io::format_double(x);
    }
    out += ',' + r.status + ',' + io::format_double(r.wall_ms) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

namespace {

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.size() == 1) return sorted.front();
  double pos = prob * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string group_value(const ReplicationResult& r, const std::string& column) {
  const auto& d = r.cell.data;
  if (column == "gen") return generator_name(d.gen);
  if (column == "truth") return estimate::model_name(d.truth);
  if (column == "fit") return estimate::model_name(r.cell.fit);
  if (column == "N") return std::to_string(d.n);
  if (column == "T") return std::to_string(d.t);
  if (column == "K") return std::to_string(d.k);
  fail(ErrorCode::InvalidArgument, "cannot group by '" + column + "'");
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"alpha_hat", "theta_hat", "rmse_alpha", "rmse_theta",
                                              "rmse_beta", "rmsp",      "sigma2_hat"};
  return names;
}

double metric_value(const ReplicationResult& r, std::size_t m) {
  const double values[] = {r.alpha_hat, r.theta_hat, r.rmse_alpha, r.rmse_theta, r.rmse_beta, r.rmsp, r.sigma2_hat};
  return values[m];
}

}  // namespace

MetricSummary summarize_values(const std::string& metric, std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double x) { return !std::isfinite(x); }),
               values.end());
  MetricSummary s;
  s.metric = metric;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.sd = s.min = s.q1 = s.median = s.q3 = s.max = std::nan("");
    return s;
  }
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double x : values) sum += x;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - s.mean) * (x - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  return s;
}

double median(std::vector<double> values) { return summarize_values("", std::move(values)).median; }

const SummaryRow* SummaryTable::find(const std::vector<std::string>& group) const {
  for (const auto& row : rows) {
    if (row.group == group) return &row;
  }
  return nullptr;
}

const MetricSummary& SummaryTable::metric(const std::vector<std::string>& group, const std::string& name) const {
  const SummaryRow* row = find(group);
  if (!row) fail(ErrorCode::EmptyGroup, "no rows in requested group");
  for (const auto& m : row->metrics) {
    if (m.metric == name) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

SummaryTable summarize(const std::vector<ReplicationResult>& results, const std::vector<std::string>& group_by) {
  if (results.empty()) fail(ErrorCode::EmptyGroup, "no results to summarize");
  SummaryTable table;
  table.group_by = group_by;
  std::vector<std::vector<std::string>> order;
  std::map<std::vector<std::string>, std::vector<const ReplicationResult*>> groups;
  for (const auto& r : results) {
    std::vector<std::string> key;
    for (const auto& col : group_by) key.push_back(group_value(r, col));
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  for (const auto& key : order) {
    const auto& members = groups.at(key);
    SummaryRow row;
    row.group = key;
    row.rows = members.size();
    for (const auto* r : members) row.failed += r->ok() ? 0 : 1;
    for (std::size_t m = 0; m < metric_names().size(); ++m) {
      std::vector<double> values;
      for (const auto* r : members) {
        if (r->ok()) values.push_back(metric_value(*r, m));
      }
      row.metrics.push_back(summarize_values(metric_names()[m], std::move(values)));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string summary_csv(const SummaryTable& table) {
  std::string out;
  for (const auto& col : table.group_by) out += col + ',';
  out += "metric,rows,failed,count,mean,sd,min,q1,median,q3,max\n";
  for (const auto& row : table.rows) {
    for (const auto& m : row.metrics) {
      for (const auto& g : row.group) out += g + ',';
      out += m.metric + ',' + std::to_string(row.rows) + ',' + std::to_string(row.failed) + ',' +
             std::to_string(m.count);
      for (double x : {m.mean, m.sd, m.min, m.q1, m.median, m.q3, m.max}) out += ',' + io::format_double(x);
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rolling forecasts

RollingComparison rolling_forecast(const process::Panel& panel, const network::Graph& graph,
                                   const std::vector<ModelKind>& models, Index k, Index window_len, Index windows,
                                   const lsm::LsmConfig& lsm_config) {
  panel.validate();
  if (window_len < 1 || windows < 1) fail(ErrorCode::InvalidArgument, "window length and count must be positive");
  // the forecast origin s + window_len needs covariates, so it must lie before T
  if (windows - 1 + window_len >= panel.t_len()) {
    fail(ErrorCode::DimensionMismatch, "panel too short for the requested rolling windows");
  }
  const network::SparseMatrix l = network::normalized_laplacian(graph, true);
  RollingComparison out;
  out.models = models;
  for (ModelKind model : models) {
    estimate::DesignSpec spec{model, model == ModelKind::NAR ? 0 : k};
    MatrixXd latent;
    if (model == ModelKind::NAR) {
      latent.resize(graph.n(), 0);
    } else if (model == ModelKind::AMNAR) {
      latent = lsm::fit_lsm(graph, k, lsm_config).state.stacked();
    } else {
      latent = network::spectral_embed(graph, k).vectors;
    }
    std::vector<double> errors;
    for (Index s = 0; s < windows; ++s) {
      estimate::FitResult fit = estimate::fit_with_latent(panel.window(s, window_len), l, latent, spec);
      Index origin = s + window_len;
      VectorXd y_hat = estimate::predict_one_step(fit, l, panel.y.col(origin),
                                                  panel.z[static_cast<std::size_t>(origin)], latent);
      errors.push_back((y_hat - panel.y.col(origin + 1)).squaredNorm() / static_cast<double>(graph.n()));
    }
    out.mspe.push_back(std::move(errors));
  }
  return out;
}

}  // namespace enarkit::bench
