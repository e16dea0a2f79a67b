#include "enarkit/process.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "enarkit/error.hpp"
#include "enarkit/io.hpp"

namespace enarkit::process {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Panel Panel::window(Index start, Index len) const {
  if (start < 0 || len < 1 || start + len > t_len()) {
    fail(ErrorCode::DimensionMismatch, "window [" + std::to_string(start) + ", " + std::to_string(start + len) +
                                           "] outside panel of length " + std::to_string(t_len()));
  }
  Panel out;
  out.y = y.middleCols(start, len + 1);
  out.z.assign(z.begin() + start, z.begin() + start + len);
  return out;
}

void Panel::validate() const {
  if (y.cols() < 1) fail(ErrorCode::DimensionMismatch, "panel has no time points");
  if (static_cast<Index>(z.size()) != t_len()) {
    fail(ErrorCode::DimensionMismatch, "panel needs one covariate slice per transition");
  }
  for (const auto& zt : z) {
    if (zt.rows() != n() || zt.cols() != p()) fail(ErrorCode::DimensionMismatch, "covariate slice shape mismatch");
  }
}

bool check_stationarity(double alpha, double theta) { return std::abs(alpha) + std::abs(theta) < 1.0; }

double innovation_variance(double sigma, const VectorXd& gamma, const CovariateSpec& cov) {
  if (gamma.size() != cov.p()) {
    fail(ErrorCode::DimensionMismatch, "gamma has " + std::to_string(gamma.size()) + " entries but covariates have p = " +
                                           std::to_string(cov.p()));
  }
  return sigma * sigma + gamma.dot(cov.variances.cwiseProduct(gamma));
}

namespace {

MatrixXd transition_matrix(const SparseMatrix& laplacian, double alpha, double theta) {
  MatrixXd g = theta * MatrixXd(laplacian);
  g.diagonal().array() += alpha;
  return g;
}

VectorXd stationary_mean(const MatrixXd& g, const VectorXd& latent_effect) {
  MatrixXd i_minus_g = -g;
  i_minus_g.diagonal().array() += 1.0;
  return i_minus_g.partialPivLu().solve(latent_effect);
}

}  // namespace

StationaryMoments stationary_moments(const SparseMatrix& laplacian, const VectorXd& latent_effect, double alpha,
                                     double theta, double c) {
  if (!check_stationarity(alpha, theta)) {
    fail(ErrorCode::NotStationary, "|alpha| + |theta| must be below 1");
  }
  if (laplacian.rows() != laplacian.cols() || latent_effect.size() != laplacian.rows()) {
    fail(ErrorCode::DimensionMismatch, "latent effect length differs from node count");
  }
  const Index n = laplacian.rows();
  StationaryMoments m;
  m.c = c;
  m.g = transition_matrix(laplacian, alpha, theta);
  m.phi = stationary_mean(m.g, latent_effect);

  // Squared form of Gamma <- G Gamma G' + cI: after k passes the partial sum
  // holds 2^k terms, so the stopping increment bounds the remaining tail.
  constexpr int max_iterations = 100000;
  MatrixXd current = c * MatrixXd::Identity(n, n);
  MatrixXd power = m.g;
  MatrixXd tmp(n, n), step(n, n);
  for (int it = 1; it <= max_iterations; ++it) {
    tmp.noalias() = power * current;
    step.noalias() = tmp * power.transpose();
    current += step;
    double change = step.norm();
    double size = current.norm();
    if (change <= 1e-12 * size || !(change > 0.0)) {
      m.gamma0 = 0.5 * (current + current.transpose());
      m.iterations = it;
      return m;
    }
    tmp.noalias() = power * power;
    power.swap(tmp);
  }
  fail(ErrorCode::LyapunovNonconvergence, "stationary covariance iteration did not converge");
}

MatrixXd autocov(const StationaryMoments& m, int h) {
  // Gamma(-h) is taken as the transpose of Gamma(h) so the symmetry holds exactly
  if (h < 0) return autocov(m, -h).transpose();
  MatrixXd out = m.gamma0;
  for (int i = 0; i < h; ++i) out = m.g * out;
  return out;
}

double amnar_multiplier(Index n, Index t_len, double s) {
  if (n < 1 || t_len < 1) fail(ErrorCode::InvalidArgument, "multiplier needs positive N and T");
  return std::pow(static_cast<double>(n), -s) / std::sqrt(static_cast<double>(t_len));
}

Panel simulate_with_effect(double alpha, double theta, const VectorXd& gamma, double sigma,
                           const SparseMatrix& laplacian, const VectorXd& latent_effect, const CovariateSpec& cov,
                           Index t_len, Rng& rng, const SimulationOptions& options) {
  if (!check_stationarity(alpha, theta)) fail(ErrorCode::NotStationary, "|alpha| + |theta| must be below 1");
  if (t_len < 0) fail(ErrorCode::InvalidArgument, "negative panel length");
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be nonnegative");
  if ((cov.variances.array() <= 0.0).any()) fail(ErrorCode::InvalidArgument, "covariate variances must be positive");
  const Index n = laplacian.rows();
  if (latent_effect.size() != n) fail(ErrorCode::DimensionMismatch, "latent effect length differs from node count");
  const double c = innovation_variance(sigma, gamma, cov);
  const Index p = cov.p();
  const VectorXd sd_z = cov.variances.cwiseSqrt();

  MatrixXd zt(n, p);
  VectorXd noise(n);
  auto draw_step = [&]() {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) zt(i, j) = sd_z(j) * draw_normal(rng);
    }
    for (Index i = 0; i < n; ++i) noise(i) = sigma * draw_normal(rng);
  };

  Panel panel;
  panel.y.resize(n, t_len + 1);
  panel.z.reserve(static_cast<std::size_t>(t_len));

  if (options.y0) {
    if (options.y0->size() != n) fail(ErrorCode::DimensionMismatch, "forced y0 has the wrong length");
    panel.y.col(0) = *options.y0;
  } else if (n <= options.exact_init_limit) {
    StationaryMoments m = stationary_moments(laplacian, latent_effect, alpha, theta, c);
    Eigen::LLT<MatrixXd> llt(m.gamma0);
    if (llt.info() != Eigen::Success) {
      MatrixXd jittered = m.gamma0;
      jittered.diagonal().array() += 1e-10 * m.gamma0.trace() / static_cast<double>(n);
      llt.compute(jittered);
      if (llt.info() != Eigen::Success) {
        fail(ErrorCode::CholeskyFailure, "stationary covariance is not numerically positive definite");
      }
    }
    panel.y.col(0) = m.phi + llt.matrixL() * draw_normal_vector(rng, n);
  } else {
    MatrixXd g = transition_matrix(laplacian, alpha, theta);
    VectorXd y = stationary_mean(g, latent_effect);
    for (int b = 0; b < options.burn_in; ++b) {
      draw_step();
      VectorXd next = alpha * y + theta * (laplacian * y) + latent_effect + noise;
      if (p > 0) next += zt * gamma;
      y = std::move(next);
    }
    panel.y.col(0) = y;
  }

  for (Index t = 0; t < t_len; ++t) {
    draw_step();
    VectorXd yt = panel.y.col(t);
    VectorXd next = alpha * yt + theta * (laplacian * yt) + latent_effect + noise;
    if (p > 0) next += zt * gamma;
    panel.y.col(t + 1) = next;
    panel.z.push_back(zt);
  }
  return panel;
}

Panel simulate_enar(const EnarParams& params, const SparseMatrix& laplacian, const MatrixXd& embedding_truth,
                    const CovariateSpec& cov, Index t_len, Rng& rng, const SimulationOptions& options) {
  if (embedding_truth.rows() != laplacian.rows() || embedding_truth.cols() != params.beta.size()) {
    fail(ErrorCode::DimensionMismatch, "embedding must be N x K with K = length of beta");
  }
  VectorXd effect = params.beta.size() > 0 ? VectorXd(embedding_truth * params.beta)
                                           : VectorXd(VectorXd::Zero(laplacian.rows()));
  return simulate_with_effect(params.alpha, params.theta, params.gamma, params.sigma, laplacian, effect, cov, t_len,
                              rng, options);
}

VectorXd amnar_latent_effect(const AmnarParams& params, const MatrixXd& latent_truth, Index t_len) {
  const Index k = params.beta1.size();
  if (latent_truth.cols() != k + 1) fail(ErrorCode::DimensionMismatch, "latent truth must be N x (K + 1)");
  if (!(params.s > 0.0 && params.s < 0.5)) fail(ErrorCode::InvalidArgument, "s must lie in (0, 1/2)");
  VectorXd coef(k + 1);
  coef << params.beta1, params.beta2;
  return amnar_multiplier(latent_truth.rows(), t_len, params.s) * (latent_truth * coef);
}

Panel simulate_amnar(const AmnarParams& params, const SparseMatrix& laplacian, const MatrixXd& latent_truth,
                     const CovariateSpec& cov, Index t_len, Rng& rng, const SimulationOptions& options) {
  if (latent_truth.rows() != laplacian.rows()) fail(ErrorCode::DimensionMismatch, "latent truth row count");
  VectorXd effect = amnar_latent_effect(params, latent_truth, options.multiplier_t.value_or(t_len));
  return simulate_with_effect(params.alpha, params.theta, params.gamma, params.sigma, laplacian, effect, cov, t_len,
                              rng, options);
}

// ---------------------------------------------------------------------------
// CSV

void write_panel_csv(const std::filesystem::path& path, const Panel& panel) {
  panel.validate();
  const Index n = panel.n(), t_len = panel.t_len(), p = panel.p();
  std::string out = "node,t,y";
  for (Index j = 0; j < p; ++j) out += ",z" + std::to_string(j + 1);
  out += '\n';
  for (Index t = 0; t <= t_len; ++t) {
    for (Index i = 0; i < n; ++i) {
      out += std::to_string(i) + ',' + std::to_string(t) + ',' + io::format_double(panel.y(i, t));
      for (Index j = 0; j < p; ++j) {
        out += ',';
        if (t < t_len) out += io::format_double(panel.z[static_cast<std::size_t>(t)](i, j));
      }
      out += '\n';
    }
  }
  io::write_atomic(path, out);
}

Panel read_panel_csv(const std::filesystem::path& path) {
  auto lines = io::read_lines(path);
  if (lines.empty()) fail(ErrorCode::ParseError, path.string() + ": empty file");
  auto header = io::split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "node" || header[1] != "t" || header[2] != "y") {
    fail(ErrorCode::ParseError, path.string() + ": line 1: expected header 'node,t,y,z1,...'");
  }
  const Index p = static_cast<Index>(header.size()) - 3;
  for (Index j = 0; j < p; ++j) {
    if (header[static_cast<std::size_t>(j + 3)] != "z" + std::to_string(j + 1)) {
      fail(ErrorCode::ParseError, path.string() + ": line 1: covariate columns must be z1..zp");
    }
  }

  struct Row {
    Index node, t;
    double y;
    std::vector<double> z;
    bool has_z;
  };
  std::vector<Row> rows;
  rows.reserve(lines.size());
  Index n = 0, t_len = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::string where = path.string() + ": line " + std::to_string(r + 1);
    auto fields = io::split_csv_line(lines[r]);
    if (static_cast<Index>(fields.size()) != p + 3) fail(ErrorCode::ParseError, where + ": wrong field count");
    Row row;
    row.node = io::parse_integer(fields[0], where);
    row.t = io::parse_integer(fields[1], where);
    if (row.node < 0 || row.t < 0) fail(ErrorCode::ParseError, where + ": negative node or time");
    row.y = io::parse_double(fields[2], where);
    std::size_t empties = 0;
    for (Index j = 0; j < p; ++j) empties += fields[static_cast<std::size_t>(j + 3)].empty();
    if (empties != 0 && empties != static_cast<std::size_t>(p)) {
      fail(ErrorCode::ParseError, where + ": covariates must be all present or all empty");
    }
    row.has_z = p > 0 && empties == 0;
    if (row.has_z) {
      for (Index j = 0; j < p; ++j) row.z.push_back(io::parse_double(fields[static_cast<std::size_t>(j + 3)], where));
    }
    n = std::max(n, row.node + 1);
    t_len = std::max(t_len, row.t);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ParseError, path.string() + ": no data rows");
  if (static_cast<Index>(rows.size()) != n * (t_len + 1)) {
    fail(ErrorCode::ParseError, path.string() + ": expected one row per (node, t) for N = " + std::to_string(n) +
                                    ", T = " + std::to_string(t_len));
  }
  Panel panel;
  panel.y = MatrixXd::Constant(n, t_len + 1, std::nan(""));
  panel.z.assign(static_cast<std::size_t>(t_len), MatrixXd(n, p));
  std::vector<char> seen(static_cast<std::size_t>(n * (t_len + 1)), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + ": line " + std::to_string(r + 2);
    auto& flag = seen[static_cast<std::size_t>(row.t * n + row.node)];
    if (flag) fail(ErrorCode::ParseError, where + ": duplicate (node, t)");
    flag = 1;
    panel.y(row.node, row.t) = row.y;
    if (p > 0) {
      if (row.t < t_len && !row.has_z) fail(ErrorCode::ParseError, where + ": missing covariates");
      if (row.t == t_len && row.has_z) fail(ErrorCode::ParseError, where + ": covariates given at final time");
      if (row.has_z) {
        for (Index j = 0; j < p; ++j) panel.z[static_cast<std::size_t>(row.t)](row.node, j) = row.z[static_cast<std::size_t>(j)];
      }
    }
  }
  return panel;
}

}  // namespace enarkit::process
