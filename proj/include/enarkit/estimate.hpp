#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "enarkit/lsm.hpp"
#include "enarkit/network.hpp"
#include "enarkit/process.hpp"

namespace enarkit::estimate {

using network::SparseMatrix;

enum class ModelKind { NAR, ENAR, AMNAR, ENR };

std::string model_name(ModelKind kind);
ModelKind parse_model(const std::string& name);

struct DesignSpec {
  ModelKind model = ModelKind::ENAR;
  Eigen::Index k = 0;        // latent dimension (ENAR, AMNAR, ENR)
  double s = 0.25;           // AMNAR rate exponent
  bool enr_intercept = true; // grand-mean column for ENR

  /// Number of latent columns: k, k + 1 for AMNAR, 0 for NAR.
  Eigen::Index latent_columns() const;
  bool has_lags() const { return model != ModelKind::ENR; }
  /// Column names in design order.
  std::vector<std::string> coefficient_names(Eigen::Index p) const;
  void validate() const;
};

/// Regressor block: row (t N + i) for node i at time t, response y_{i,t+1}.
struct Design {
  Eigen::MatrixXd w;
  Eigen::VectorXd y;
};

/// latent is N x latent_columns() (raw estimates; AMNAR scaling is applied here).
Design build_design(const process::Panel& panel, const SparseMatrix& laplacian, const Eigen::MatrixXd& latent,
                    const DesignSpec& spec);

/// Regressor rows for a single time: (latent, y_t, L y_t, Z_t) in design order.
Eigen::MatrixXd design_rows(const Eigen::MatrixXd& latent, const Eigen::VectorXd& y_t, const SparseMatrix& laplacian,
                            const Eigen::MatrixXd& z_t, const DesignSpec& spec, Eigen::Index t_len);

/// Sample analogues of the embedding quality constants.
struct Diagnostics {
  double eigengap = std::nan("");
  double kappa = std::nan("");
  double condition_number = std::nan("");
  // AMNAR only
  double lsm_loglik = std::nan("");
  double lsm_centering_residual = std::nan("");
  double lsm_diagonal_residual = std::nan("");
  bool lsm_stalled = false;
};

struct FitResult {
  DesignSpec spec;
  std::vector<std::string> names;
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd se;
  Eigen::MatrixXd cov_hat;
  double sigma2_hat = 0.0;
  double rss = 0.0;
  Eigen::Index n_obs = 0;
  Eigen::Index n_params = 0;
  Eigen::Index n_nodes = 0;
  Eigen::Index t_len = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  /// Latent coefficients are identified only up to an orthogonal rotation.
  bool beta_rotation_ambiguous = false;
  Diagnostics diagnostics;

  double coefficient(const std::string& name) const;
  Eigen::Index index_of(const std::string& name) const;
};

/// Least squares via column-pivoted QR with rank check at relative pivot 1e-10.
FitResult fit_ls(const Eigen::MatrixXd& w, const Eigen::VectorXd& y);

struct FitOptions {
  bool allow_isolated = true;
  bool enr_intercept = true;
};

struct EnarFit {
  FitResult fit;
  network::Embedding embedding;
};

struct AmnarFit {
  FitResult fit;
  lsm::LsmFit latent;
  Eigen::MatrixXd latent_estimate;  // [Q | v]
};

/// Fits with given latent regressors (estimated or true); NAR when latent has 0 columns.
FitResult fit_with_latent(const process::Panel& panel, const SparseMatrix& laplacian, const Eigen::MatrixXd& latent,
                          const DesignSpec& spec);

FitResult fit_nar(const process::Panel& panel, const network::Graph& graph, const FitOptions& options = {});
EnarFit fit_enar(const process::Panel& panel, const network::Graph& graph, Eigen::Index k,
                 const FitOptions& options = {});
AmnarFit fit_amnar(const process::Panel& panel, const network::Graph& graph, Eigen::Index k, double s,
                   const lsm::LsmConfig& config, const FitOptions& options = {});
/// Regression of y_{t+1} on (embedding, Z_t) without lag terms.
EnarFit fit_enr(const process::Panel& panel, const network::Graph& graph, Eigen::Index k,
                const FitOptions& options = {});

/// Eigengap and kappa from the adjacency spectrum at dimension k.
Diagnostics embedding_diagnostics(const network::Graph& graph, Eigen::Index k);

/// Point forecast W_T mu_hat.
Eigen::VectorXd predict_one_step(const FitResult& fit, const SparseMatrix& laplacian, const Eigen::VectorXd& y_t,
                                 const Eigen::MatrixXd& z_t, const Eigen::MatrixXd& latent);

/// ||B - B_hat||_2 / ||B||_2 (spectral norm; Euclidean for vectors).
double rmse_rel(const Eigen::MatrixXd& b_true, const Eigen::MatrixXd& b_hat);
/// ||W_T (mu_hat - mu)|| / ||W_T mu||.
double rmsp(const Eigen::MatrixXd& w_t, const Eigen::VectorXd& mu_hat, const Eigen::VectorXd& mu_true);
/// ||y_hat - m|| / ||m|| for a forecast against the true conditional mean.
double rmsp_forecast(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& true_mean);

/// Inverse standard normal CDF.
double normal_quantile(double prob);

/// mu_j +- z_{(1+level)/2} se_j.
std::pair<double, double> confint(const FitResult& fit, Eigen::Index index, double level);

nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

}  // namespace enarkit::estimate
