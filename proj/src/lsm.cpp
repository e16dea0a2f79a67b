#include "enarkit/lsm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "enarkit/error.hpp"
#include "enarkit/io.hpp"

namespace enarkit::lsm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd LsmState::stacked() const {
  MatrixXd x(n(), k() + 1);
  x << q, v;
  return x;
}

MatrixXd LsmState::chi() const {
  MatrixXd c = q * q.transpose();
  c.colwise() += v;
  c.rowwise() += v.transpose();
  return c;
}

void LsmConfig::validate() const {
  if (max_iters < 0) fail(ErrorCode::InvalidArgument, "max_iters must be nonnegative");
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tol must be positive");
  if (step_init < 0.0) fail(ErrorCode::InvalidArgument, "step_init must be positive (or 0 for 1/N)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) fail(ErrorCode::InvalidArgument, "backtrack factor must lie in (0,1)");
  if (row_norm_cap < 0.0) fail(ErrorCode::InvalidArgument, "row_norm_cap must be positive (or 0 for default)");
  if (!(min_step > 0.0)) fail(ErrorCode::InvalidArgument, "min_step must be positive");
}

double LsmConfig::resolved_step(Index n) const {
  return step_init > 0.0 ? step_init : 1.0 / static_cast<double>(std::max<Index>(n, 1));
}

double LsmConfig::resolved_cap(Index k) const {
  return row_norm_cap > 0.0 ? row_norm_cap : 3.0 * std::sqrt(static_cast<double>(k + 1));
}

double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_shapes(const LsmState& state, const network::Graph& graph) {
  if (state.q.rows() != graph.n() || state.v.size() != graph.n()) {
    fail(ErrorCode::DimensionMismatch, "latent state size differs from node count");
  }
}

}  // namespace

double lsm_loglik(const LsmState& state, const network::Graph& graph) {
  check_shapes(state, graph);
  const Index n = graph.n();
  const MatrixXd chi = state.chi();
  const MatrixXd a = graph.dense();
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    double col = 0.0;
    for (Index i = 0; i < j; ++i) col += a(i, j) * chi(i, j) - log1p_exp(chi(i, j));
    total += col;
  }
  return total;
}

Gradient lsm_gradient(const LsmState& state, const network::Graph& graph) {
  check_shapes(state, graph);
  MatrixXd r = graph.dense() - state.chi().unaryExpr([](double x) { return sigmoid(x); });
  r.diagonal().setZero();
  Gradient g;
  g.dq = r * state.q;
  g.dv = r.rowwise().sum();
  return g;
}

namespace {

void center_absorbing(LsmState& s) {
  if (s.n() == 0 || s.k() == 0) return;
  VectorXd m = s.q.colwise().mean().transpose();
  s.q.rowwise() -= m.transpose();
  // Q Q' = Qc Qc' + Qc m 1' + 1 m' Qc' + |m|^2 1 1'
  s.v += s.q * m;
  s.v.array() += 0.5 * m.squaredNorm();
}

void rotate_diagonal(LsmState& s) {
  if (s.k() == 0) return;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s.q.transpose() * s.q);
  const Index k = s.k();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return eig.eigenvalues()(a) > eig.eigenvalues()(b); });
  MatrixXd rot(k, k);
  for (Index c = 0; c < k; ++c) {
    rot.col(c) = eig.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    Index big = 0;
    rot.col(c).cwiseAbs().maxCoeff(&big);
    if (rot(big, c) < 0.0) rot.col(c) *= -1.0;
  }
  s.q = s.q * rot;
}

double max_row_norm(const LsmState& s) {
  double best = 0.0;
  for (Index i = 0; i < s.n(); ++i) {
    best = std::max(best, std::sqrt(s.q.row(i).squaredNorm() + s.v(i) * s.v(i)));
  }
  return best;
}

}  // namespace

LsmState project_constraints(const LsmState& state, double row_norm_cap) {
  if (!(row_norm_cap > 0.0)) fail(ErrorCode::InvalidArgument, "row norm cap must be positive");
  LsmState s = state;
  constexpr int max_passes = 50;
  for (int pass = 0; pass < max_passes; ++pass) {
    center_absorbing(s);
    rotate_diagonal(s);
    if (max_row_norm(s) <= row_norm_cap * (1.0 + 1e-9)) return s;
    for (Index i = 0; i < s.n(); ++i) {
      double norm = std::sqrt(s.q.row(i).squaredNorm() + s.v(i) * s.v(i));
      if (norm > row_norm_cap) {
        double f = row_norm_cap / norm;
        s.q.row(i) *= f;
        s.v(i) *= f;
      }
    }
  }
  center_absorbing(s);
  rotate_diagonal(s);
  return s;
}

ConstraintResiduals constraint_residuals(const LsmState& state) {
  ConstraintResiduals r;
  if (state.k() > 0 && state.n() > 0) {
    r.centering = state.q.colwise().sum().cwiseAbs().maxCoeff();
    MatrixXd gram = state.q.transpose() * state.q;
    double trace = gram.trace();
    gram.diagonal().setZero();
    double off = gram.cwiseAbs().maxCoeff();
    r.off_diagonal = trace > 0.0 ? off / trace : off;
  }
  r.max_row_norm = max_row_norm(state);
  return r;
}

LsmState initialize(const network::Graph& graph, Index k, const LsmConfig& config) {
  const Index n = graph.n();
  if (k < 1 || k >= n) fail(ErrorCode::InvalidArgument, "latent dimension must lie in [1, N)");
  const double lo = 0.5 / static_cast<double>(n - 1);
  VectorXd d = graph.degrees();
  LsmState s;
  s.v.resize(n);
  for (Index i = 0; i < n; ++i) {
    double p = std::clamp(d(i) / static_cast<double>(n - 1), lo, 1.0 - lo);
    // chi_ij = v_i + v_j, so each endpoint carries half the logit
    s.v(i) = 0.5 * std::log(p / (1.0 - p));
  }
  MatrixXd base(n, n);
  base.setZero();
  base.colwise() += s.v;
  base.rowwise() += s.v.transpose();
  MatrixXd resid = graph.dense() - base.unaryExpr([](double x) { return sigmoid(x); });
  resid.diagonal().setZero();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(resid);
  if (eig.info() != Eigen::Success) fail(ErrorCode::EigConvergenceFailure, "initializer eigensolver failed");
  s.q.resize(n, k);
  // eigenvalues ascend; the leading positive part approximates Q Q'
  for (Index c = 0; c < k; ++c) {
    Index src = n - 1 - c;
    s.q.col(c) = eig.eigenvectors().col(src) * std::sqrt(std::max(eig.eigenvalues()(src), 0.0));
  }
  return project_constraints(s, config.resolved_cap(k));
}

LsmFit fit_lsm(const network::Graph& graph, Index k, const LsmConfig& config) {
  config.validate();
  const double cap = config.resolved_cap(k);
  const double step0 = config.resolved_step(graph.n());

  LsmFit fit;
  fit.state = initialize(graph, k, config);
  double ll = lsm_loglik(fit.state, graph);
  fit.loglik_trace.push_back(ll);
  double step = step0;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    Gradient g = lsm_gradient(fit.state, graph);
    LsmState candidate;
    double ll_new = ll;
    while (true) {
      LsmState moved{fit.state.q + step * g.dq, fit.state.v + step * g.dv};
      candidate = project_constraints(moved, cap);
      ll_new = lsm_loglik(candidate, graph);
      if (ll_new > ll) break;
      step *= config.backtrack;
      if (step < config.min_step) {
        fit.stalled = true;
        break;
      }
    }
    if (fit.stalled) break;
    double rel = (ll_new - ll) / std::max(std::abs(ll), 1.0);
    fit.state = std::move(candidate);
    ll = ll_new;
    fit.loglik_trace.push_back(ll);
    fit.iterations = iter + 1;
    step = std::min(step / config.backtrack, 100.0 * step0);
    if (rel < config.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

network::Graph generate_lsm(const LsmState& truth, Rng& rng, const network::SamplingOptions& options) {
  MatrixXd p = truth.chi().unaryExpr([](double x) { return sigmoid(x); });
  p.diagonal().setZero();
  return network::sample_graph(p, rng, options);
}

LsmState draw_planted_state(Index n, Index k, double q_scale, double v_mean, double v_sd, Rng& rng) {
  LsmState s;
  s.q.resize(n, k);
  s.v.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < k; ++c) s.q(i, c) = q_scale * draw_normal(rng);
    s.v(i) = v_mean + v_sd * draw_normal(rng);
  }
  LsmConfig defaults;
  return project_constraints(s, defaults.resolved_cap(k));
}

void write_latent_csv(const std::filesystem::path& path, const LsmState& state) {
  std::string out = "node,v";
  for (Index c = 0; c < state.k(); ++c) out += ",q" + std::to_string(c + 1);
  out += '\n';
  for (Index i = 0; i < state.n(); ++i) {
    out += std::to_string(i) + ',' + io::format_double(state.v(i));
    for (Index c = 0; c < state.k(); ++c) out += ',' + io::format_double(state.q(i, c));
    out += '\n';
  }
  io::write_atomic(path, out);
}

}  // namespace enarkit::lsm
