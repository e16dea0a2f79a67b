#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "enarkit/network.hpp"
#include "enarkit/random.hpp"

namespace enarkit::process {

using network::SparseMatrix;

/// Momentum alpha, peer effect theta, latent effects beta (length K, may be
/// empty for NAR), covariate effects gamma and noise standard deviation.
struct EnarParams {
  double alpha = 0.2;
  double theta = 0.2;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  double sigma = 0.5;
};

/// AMNAR carries its latent effects on r [Q | v] with r = N^{-s} T^{-1/2}.
struct AmnarParams {
  double alpha = 0.2;
  double theta = 0.2;
  Eigen::VectorXd beta1;
  double beta2 = 0.0;
  Eigen::VectorXd gamma;
  double sigma = 0.5;
  double s = 0.25;
};

struct CovariateSpec {
  Eigen::VectorXd variances;  // diagonal of the covariate covariance
  Eigen::Index p() const { return variances.size(); }
};

/// y holds y_0..y_T as columns; z[t] holds Z_t (N x p) for t = 0..T-1.
struct Panel {
  Eigen::MatrixXd y;
  std::vector<Eigen::MatrixXd> z;

  Eigen::Index n() const { return y.rows(); }
  Eigen::Index t_len() const { return y.cols() - 1; }
  Eigen::Index p() const { return z.empty() ? 0 : z.front().cols(); }

  /// Sub-panel with responses y_start..y_{start+len} and covariates Z_start..Z_{start+len-1}.
  Panel window(Eigen::Index start, Eigen::Index len) const;

  void validate() const;
};

struct StationaryMoments {
  Eigen::MatrixXd g;       // alpha I + theta L
  Eigen::VectorXd phi;     // stationary mean
  Eigen::MatrixXd gamma0;  // stationary covariance
  double c = 0.0;          // innovation variance sigma^2 + gamma' Sigma_z gamma
  int iterations = 0;
};

bool check_stationarity(double alpha, double theta);

/// sigma^2 + gamma' diag(variances) gamma.
double innovation_variance(double sigma, const Eigen::VectorXd& gamma, const CovariateSpec& cov);

/// Mean and covariance of the stationary law. Gamma(0) comes from the
/// fixed-point iteration Gamma <- G Gamma G' + c I started at c I, run in squared (doubling) form.
StationaryMoments stationary_moments(const SparseMatrix& laplacian, const Eigen::VectorXd& latent_effect,
                                     double alpha, double theta, double c);

/// Gamma(h) = G^h Gamma(0) for h >= 0 and Gamma(0) (G')^{-h} for h < 0.
Eigen::MatrixXd autocov(const StationaryMoments& m, int h);

/// r = N^{-s} T^{-1/2}.
double amnar_multiplier(Eigen::Index n, Eigen::Index t_len, double s);

struct SimulationOptions {
  /// Forces y_0 instead of drawing it from the stationary law.
  std::optional<Eigen::VectorXd> y0;
  /// Exact stationary draw of y_0 at or below this size, burn-in above.
  Eigen::Index exact_init_limit = 512;
  int burn_in = 500;
  /// Time horizon used in the AMNAR multiplier (defaults to the simulated length).
  std::optional<Eigen::Index> multiplier_t;
};

/// Simulates t_len transitions; embedding_truth is N x K (N x 0 for NAR).
Panel simulate_enar(const EnarParams& params, const SparseMatrix& laplacian, const Eigen::MatrixXd& embedding_truth,
                    const CovariateSpec& cov, Eigen::Index t_len, Rng& rng, const SimulationOptions& options = {});

/// latent_truth is [Q | v], N x (K + 1).
Panel simulate_amnar(const AmnarParams& params, const SparseMatrix& laplacian, const Eigen::MatrixXd& latent_truth,
                     const CovariateSpec& cov, Eigen::Index t_len, Rng& rng, const SimulationOptions& options = {});

/// Simulates from an explicit additive latent effect vector.
Panel simulate_with_effect(double alpha, double theta, const Eigen::VectorXd& gamma, double sigma,
                           const SparseMatrix& laplacian, const Eigen::VectorXd& latent_effect,
                           const CovariateSpec& cov, Eigen::Index t_len, Rng& rng,
                           const SimulationOptions& options = {});

/// r [Q | v] (beta1', beta2)'.
Eigen::VectorXd amnar_latent_effect(const AmnarParams& params, const Eigen::MatrixXd& latent_truth,
                                    Eigen::Index t_len);

/// Long-format CSV: `node,t,y,z1,...,zp`. Rows at t = T leave the z fields empty.
void write_panel_csv(const std::filesystem::path& path, const Panel& panel);
Panel read_panel_csv(const std::filesystem::path& path);

}  // namespace enarkit::process
