#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "enarkit/estimate.hpp"
#include "enarkit/lsm.hpp"
#include "enarkit/network.hpp"
#include "enarkit/process.hpp"

namespace enarkit::bench {

using estimate::ModelKind;

enum class Generator { DCSBM, DCMMSBM, RDPG, LSM };

std::string generator_name(Generator g);
Generator parse_generator(const std::string& name);

/// (1, -1/2, 1/3, ..., (-1)^{K-1}/K)
Eigen::VectorXd alternating_beta(Eigen::Index k);

struct ExperimentConfig {
  std::vector<Eigen::Index> n_values{40};
  std::vector<Eigen::Index> t_values{40};
  std::vector<Eigen::Index> k_values{3};
  std::vector<Generator> generators{Generator::DCMMSBM};
  std::vector<ModelKind> truth_models{ModelKind::ENAR};
  std::vector<ModelKind> fit_models{ModelKind::NAR, ModelKind::ENAR};
  int reps = 200;
  std::uint64_t base_seed = 20240601;

  double alpha = 0.2;
  double theta = 0.2;
  /// Latent effects; empty means alternating_beta(K) for each K.
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma = (Eigen::VectorXd(3) << 1.0 / 3.0, -1.0 / 6.0, 0.0).finished();
  double sigma = 0.5;
  Eigen::VectorXd covariate_variances = (Eigen::VectorXd(3) << 3.0, 2.0, 1.0).finished();

  /// AMNAR truth: beta1 follows `beta`, beta2 and s below.
  double amnar_beta2 = 1.0;
  double amnar_s = 0.25;
  double lsm_q_scale = 1.0;
  double lsm_v_mean = -1.0;
  double lsm_v_sd = 0.5;
  lsm::LsmConfig lsm;

  double q_block = 9.0 / 40.0;
  /// Sparsity; empty means N^{-1/2}. Max expected degree is N rho.
  std::optional<double> rho;
  network::IsolationPolicy isolation = network::IsolationPolicy::Allow;

  /// Use the true latent regressors instead of estimates.
  bool oracle_latent = false;
  /// Record wall time per row (makes output run-dependent).
  bool record_timing = false;

  void validate() const;
  Eigen::VectorXd beta_for(Eigen::Index k) const;
  double rho_for(Eigen::Index n) const;
};

/// Data-generating part of a cell; replications with equal DataCell share data.
struct DataCell {
  Generator gen = Generator::DCMMSBM;
  ModelKind truth = ModelKind::ENAR;
  Eigen::Index n = 40;
  Eigen::Index t = 40;
  Eigen::Index k = 3;

  std::string id() const;
};

struct Cell {
  DataCell data;
  ModelKind fit = ModelKind::ENAR;
  std::string id() const;
};

std::uint64_t replication_seed(std::uint64_t base_seed, const DataCell& cell, int rep);

/// One simulated data set: graph, population truth and a panel of T + 1
/// transitions (the last one is held out for forecasting).
struct SimulatedData {
  network::Graph graph;
  network::SparseMatrix laplacian;
  Eigen::MatrixXd latent_truth;  // U (ENAR), [Q | v] (AMNAR), N x 0 (NAR)
  Eigen::VectorXd latent_effect;
  Eigen::VectorXd mu_true;       // in the truth model's coefficient order
  process::Panel panel;
};

/// `holdout` extra transitions are appended beyond cell.t (1 for the grid).
SimulatedData simulate_data(const DataCell& cell, const ExperimentConfig& config, Rng& rng, Eigen::Index holdout = 1);

struct ReplicationResult {
  Cell cell;
  int rep = 0;
  std::uint64_t seed = 0;
  double alpha_hat = std::nan("");
  double theta_hat = std::nan("");
  double rmse_alpha = std::nan("");
  double rmse_theta = std::nan("");
  double rmse_beta = std::nan("");
  double rmsp = std::nan("");
  double sigma2_hat = std::nan("");
  double aic = std::nan("");
  double bic = std::nan("");
  std::string status = "ok";
  double wall_ms = 0.0;
  // kept in memory only
  std::vector<std::string> names;
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd se;
  estimate::Diagnostics diagnostics;

  bool ok() const { return status == "ok"; }
};

ReplicationResult run_replication(const Cell& cell, int rep, const ExperimentConfig& config);

/// Every fit model on one shared data draw, in config order.
std::vector<ReplicationResult> run_data_replication(const DataCell& cell, int rep, const ExperimentConfig& config);

/// Cells in canonical order: gen, truth, fit, N, T, K as listed in the config.
std::vector<Cell> grid_cells(const ExperimentConfig& config);

/// All cells x reps, sorted by cell then rep regardless of `jobs`.
std::vector<ReplicationResult> run_grid(const ExperimentConfig& config, int jobs = 1);

std::string results_csv(const std::vector<ReplicationResult>& results);

struct MetricSummary {
  std::string metric;
  std::size_t count = 0;
  double mean = 0, sd = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct SummaryRow {
  std::vector<std::string> group;
  std::size_t rows = 0;
  std::size_t failed = 0;
  std::vector<MetricSummary> metrics;
};

struct SummaryTable {
  std::vector<std::string> group_by;
  std::vector<SummaryRow> rows;

  const SummaryRow* find(const std::vector<std::string>& group) const;
  const MetricSummary& metric(const std::vector<std::string>& group, const std::string& name) const;
};

/// Columns allowed in group_by: gen, truth, fit, N, T, K.
SummaryTable summarize(const std::vector<ReplicationResult>& results, const std::vector<std::string>& group_by);
std::string summary_csv(const SummaryTable& table);

/// Five-number summary helpers on finite values (linear interpolation quantiles).
MetricSummary summarize_values(const std::string& metric, std::vector<double> values);
double median(std::vector<double> values);

/// Rolling-origin one-step forecasts: for each window start s, fit on
/// [s, s + window_len] and score the forecast of y_{s+window_len+1}.
struct RollingComparison {
  std::vector<ModelKind> models;
  std::vector<std::vector<double>> mspe;  // [model][window]
};
RollingComparison rolling_forecast(const process::Panel& panel, const network::Graph& graph,
                                   const std::vector<ModelKind>& models, Eigen::Index k, Eigen::Index window_len,
                                   Eigen::Index windows, const lsm::LsmConfig& lsm_config = {});

}  // namespace enarkit::bench
