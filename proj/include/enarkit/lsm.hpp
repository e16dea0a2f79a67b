#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "enarkit/network.hpp"
#include "enarkit/random.hpp"

// Additive and multiplicative latent space model with logistic link:
//   P(a_ij = 1) = sigmoid(q_i'q_j + v_i + v_j),  i != j.
namespace enarkit::lsm {

struct LsmState {
  Eigen::MatrixXd q;  // N x K multiplicative positions
  Eigen::VectorXd v;  // N additive degree effects

  Eigen::Index n() const { return q.rows(); }
  Eigen::Index k() const { return q.cols(); }
  /// [Q | v]
  Eigen::MatrixXd stacked() const;
  /// chi = Q Q' + v 1' + 1 v'
  Eigen::MatrixXd chi() const;
};

struct LsmConfig {
  int max_iters = 2000;
  double tol = 1e-10;            // relative log-likelihood change
  double step_init = 0.0;        // 0 means 1 / N
  double backtrack = 0.5;
  double row_norm_cap = 0.0;     // 0 means 3 sqrt(K + 1)
  double min_step = 1e-12;

  void validate() const;
  double resolved_step(Eigen::Index n) const;
  double resolved_cap(Eigen::Index k) const;
};

struct Gradient {
  Eigen::MatrixXd dq;
  Eigen::VectorXd dv;
};

struct LsmFit {
  LsmState state;
  std::vector<double> loglik_trace;  // initializer first, then every accepted step
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // line search hit min_step
};

/// log(1 + exp(x)) without overflow.
double log1p_exp(double x);
double sigmoid(double x);

/// sum_{i<j} a_ij chi_ij - log(1 + exp(chi_ij)).
double lsm_loglik(const LsmState& state, const network::Graph& graph);

/// Exact gradient of lsm_loglik: dq = R Q, dv = R 1 with R = A - sigmoid(chi), zero diagonal.
Gradient lsm_gradient(const LsmState& state, const network::Graph& graph);

/// Centers Q (absorbing the shift into v so chi is unchanged), rotates Q so
/// Q'Q is diagonal with descending entries, and caps row norms of [Q | v].
LsmState project_constraints(const LsmState& state, double row_norm_cap);

struct ConstraintResiduals {
  double centering = 0.0;     // max |column sum of Q|
  double off_diagonal = 0.0;  // max |(Q'Q)_ij|, i != j, relative to trace
  double max_row_norm = 0.0;
};
ConstraintResiduals constraint_residuals(const LsmState& state);

/// Spectral warm start, projected.
LsmState initialize(const network::Graph& graph, Eigen::Index k, const LsmConfig& config);

/// Projected gradient ascent with backtracking.
LsmFit fit_lsm(const network::Graph& graph, Eigen::Index k, const LsmConfig& config = {});

/// Bernoulli draws from the logistic latent space model.
network::Graph generate_lsm(const LsmState& truth, Rng& rng, const network::SamplingOptions& options = {});

/// Gaussian Q rows with scale q_scale, v ~ N(v_mean, v_sd^2), then projected
/// into the constrained space.
LsmState draw_planted_state(Eigen::Index n, Eigen::Index k, double q_scale, double v_mean, double v_sd, Rng& rng);

/// CSV with header `node,v,q1,...,qK`.
void write_latent_csv(const std::filesystem::path& path, const LsmState& state);

}  // namespace enarkit::lsm
