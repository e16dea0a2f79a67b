#include "enarkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "enarkit/error.hpp"
#include "enarkit/io.hpp"

namespace enarkit::network {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Graph

Graph Graph::from_edges(Index n, const std::vector<std::pair<Index, Index>>& edges) {
  if (n < 0) fail(ErrorCode::InvalidArgument, "node count must be nonnegative");
  std::set<std::pair<Index, Index>> seen;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size());
  for (std::size_t row = 0; row < edges.size(); ++row) {
    auto [a, b] = edges[row];
    if (a < 0 || b < 0 || a >= n || b >= n) {
      fail(ErrorCode::InvalidArgument, "edge " + std::to_string(row) + " has node id out of range");
    }
    if (a == b) fail(ErrorCode::InvalidArgument, "edge " + std::to_string(row) + " is a self loop");
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second) {
      fail(ErrorCode::InvalidArgument, "edge " + std::to_string(row) + " is a duplicate");
    }
    triplets.emplace_back(a, b, 1.0);
    triplets.emplace_back(b, a, 1.0);
  }
  Graph g;
  g.n_ = n;
  g.adjacency_.resize(n, n);
  g.adjacency_.setFromTriplets(triplets.begin(), triplets.end());
  g.adjacency_.makeCompressed();
  return g;
}

Graph Graph::from_dense_upper(const MatrixXd& upper) {
  if (upper.rows() != upper.cols()) fail(ErrorCode::ShapeMismatch, "adjacency must be square");
  std::vector<std::pair<Index, Index>> edges;
  for (Index j = 0; j < upper.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (upper(i, j) != 0.0) edges.emplace_back(i, j);
    }
  }
  return from_edges(upper.rows(), edges);
}

VectorXd Graph::degrees() const {
  VectorXd d = VectorXd::Zero(n_);
  for (Index j = 0; j < adjacency_.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(adjacency_, j); it; ++it) d(it.row()) += it.value();
  }
  return d;
}

double Graph::edge_density() const {
  if (n_ < 2) return 0.0;
  return static_cast<double>(edge_count()) / (0.5 * static_cast<double>(n_) * static_cast<double>(n_ - 1));
}

std::vector<Index> Graph::isolated_nodes() const {
  std::vector<Index> out;
  for (Index j = 0; j < adjacency_.outerSize(); ++j) {
    if (adjacency_.outerIndexPtr()[j + 1] == adjacency_.outerIndexPtr()[j]) out.push_back(j);
  }
  return out;
}

std::vector<std::pair<Index, Index>> Graph::edges() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(static_cast<std::size_t>(edge_count()));
  for (Index j = 0; j < adjacency_.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(adjacency_, j); it; ++it) {
      if (it.row() < j) out.emplace_back(it.row(), j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Laplacian

SparseMatrix normalized_laplacian(const Graph& g, bool allow_isolated) {
  VectorXd d = g.degrees();
  VectorXd inv_sqrt(g.n());
  for (Index i = 0; i < g.n(); ++i) {
    if (d(i) > 0) {
      inv_sqrt(i) = 1.0 / std::sqrt(d(i));
    } else if (allow_isolated) {
      inv_sqrt(i) = 0.0;
    } else {
      fail(ErrorCode::IsolatedNode, "node " + std::to_string(i) + " has no neighbours");
    }
  }
  SparseMatrix l = g.adjacency();
  for (Index j = 0; j < l.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(l, j); it; ++it) {
      it.valueRef() = inv_sqrt(it.row()) * inv_sqrt(j);
    }
  }
  return l;
}

// ---------------------------------------------------------------------------
// Generators

MatrixXd planted_block_matrix(Index k, double q) {
  return 2.0 * q * MatrixXd::Identity(k, k) + q * MatrixXd::Ones(k, k);
}

namespace {

void rescale_and_clip(ConnectionMatrix& cm, double max_expected_degree) {
  cm.p.diagonal().setZero();
  cm.max_row_sum = cm.p.rowwise().sum().maxCoeff();
  if (cm.max_row_sum > 0.0) cm.p *= max_expected_degree / cm.max_row_sum;
  cm.max_row_sum = cm.p.rowwise().sum().maxCoeff();
  cm.clipped = 0;
  for (Index j = 0; j < cm.p.cols(); ++j) {
    for (Index i = 0; i < cm.p.rows(); ++i) {
      if (cm.p(i, j) > 1.0) {
        cm.p(i, j) = 1.0;
        if (i != j) ++cm.clipped;
      }
    }
  }
}

void check_block_inputs(const MatrixXd& b, const VectorXd& degrees, Index n, double max_expected_degree) {
  if (b.rows() != b.cols()) fail(ErrorCode::ShapeMismatch, "block matrix must be square");
  if ((b.array() < 0.0).any()) fail(ErrorCode::InvalidArgument, "block matrix has negative entries");
  if (degrees.size() != n) fail(ErrorCode::ShapeMismatch, "degree vector length differs from node count");
  if ((degrees.array() <= 0.0).any()) fail(ErrorCode::InvalidArgument, "degree parameters must be positive");
  if (!(max_expected_degree > 0.0)) fail(ErrorCode::InvalidArgument, "max expected degree must be positive");
}

ConnectionMatrix rdpg_connection(const RdpgSpec& spec) {
  if (!(spec.rho > 0.0 && spec.rho <= 1.0)) fail(ErrorCode::InvalidArgument, "rho must lie in (0, 1]");
  ConnectionMatrix cm;
  cm.p = spec.rho * spec.positions * spec.positions.transpose();
  const Index n = cm.p.rows();
  constexpr double slack = 1e-12;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      double p = cm.p(i, j);
      if (!(p >= -slack && p <= 1.0 + slack)) {
        std::ostringstream msg;
        msg << "connection probability p(" << i << "," << j << ") = " << p << " outside [0,1]";
        fail(ErrorCode::InvalidProbability, msg.str());
      }
    }
  }
  cm.p = cm.p.cwiseMax(0.0).cwiseMin(1.0);
  cm.p.diagonal().setZero();
  cm.max_row_sum = n > 0 ? cm.p.rowwise().sum().maxCoeff() : 0.0;
  return cm;
}

ConnectionMatrix dcsbm_connection(const DcsbmSpec& spec) {
  const Index n = static_cast<Index>(spec.memberships.size());
  check_block_inputs(spec.block_matrix, spec.degrees, n, spec.max_expected_degree);
  const Index k = spec.block_matrix.rows();
  MatrixXd m = MatrixXd::Zero(n, k);
  for (Index i = 0; i < n; ++i) {
    Index g = spec.memberships[static_cast<std::size_t>(i)];
    if (g < 0 || g >= k) fail(ErrorCode::InvalidArgument, "membership label out of range at node " + std::to_string(i));
    m(i, g) = spec.degrees(i);
  }
  ConnectionMatrix cm;
  cm.p = m * spec.block_matrix * m.transpose();
  rescale_and_clip(cm, spec.max_expected_degree);
  return cm;
}

ConnectionMatrix dcmmsbm_connection(const DcmmsbmSpec& spec) {
  const Index n = spec.memberships.rows();
  check_block_inputs(spec.block_matrix, spec.degrees, n, spec.max_expected_degree);
  if (spec.memberships.cols() != spec.block_matrix.rows()) {
    fail(ErrorCode::ShapeMismatch, "membership columns differ from block count");
  }
  for (Index i = 0; i < n; ++i) {
    if ((spec.memberships.row(i).array() < 0.0).any() ||
        std::abs(spec.memberships.row(i).sum() - 1.0) > 1e-12) {
      fail(ErrorCode::InvalidArgument, "membership row " + std::to_string(i) + " is not on the simplex");
    }
  }
  MatrixXd m = spec.degrees.asDiagonal() * spec.memberships;
  ConnectionMatrix cm;
  cm.p = m * spec.block_matrix * m.transpose();
  rescale_and_clip(cm, spec.max_expected_degree);
  return cm;
}

}  // namespace

ConnectionMatrix connection_matrix(const LatentGraphSpec& spec) {
  return std::visit(
      [](const auto& s) -> ConnectionMatrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RdpgSpec>) return rdpg_connection(s);
        else if constexpr (std::is_same_v<T, DcsbmSpec>) return dcsbm_connection(s);
        else return dcmmsbm_connection(s);
      },
      spec);
}

Graph sample_graph(const MatrixXd& p, Rng& rng, const SamplingOptions& options) {
  if (p.rows() != p.cols()) fail(ErrorCode::ShapeMismatch, "connection matrix must be square");
  const Index n = p.rows();
  const int attempts = options.isolation == IsolationPolicy::Resample ? std::max(1, options.max_attempts) : 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::vector<std::pair<Index, Index>> edges;
    std::vector<char> touched(static_cast<std::size_t>(n), 0);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < j; ++i) {
        if (draw_uniform(rng) < p(i, j)) {
          edges.emplace_back(i, j);
          touched[static_cast<std::size_t>(i)] = touched[static_cast<std::size_t>(j)] = 1;
        }
      }
    }
    bool isolated = std::find(touched.begin(), touched.end(), 0) != touched.end();
    if (!isolated || options.isolation == IsolationPolicy::Allow) return Graph::from_edges(n, edges);
  }
  fail(ErrorCode::IsolationRetriesExceeded,
       "every one of " + std::to_string(attempts) + " draws contained an isolated node");
}

Graph generate_rdpg(const RdpgSpec& spec, Rng& rng, const SamplingOptions& options) {
  return sample_graph(rdpg_connection(spec).p, rng, options);
}

Graph generate_dcsbm(const DcsbmSpec& spec, Rng& rng, const SamplingOptions& options) {
  return sample_graph(dcsbm_connection(spec).p, rng, options);
}

Graph generate_dcmmsbm(const DcmmsbmSpec& spec, Rng& rng, const SamplingOptions& options) {
  return sample_graph(dcmmsbm_connection(spec).p, rng, options);
}

Graph generate(const LatentGraphSpec& spec, Rng& rng, const SamplingOptions& options) {
  return sample_graph(connection_matrix(spec).p, rng, options);
}

DcsbmSpec draw_dcsbm_spec(Index n, Index k, double q, double max_expected_degree, Rng& rng) {
  DcsbmSpec spec;
  spec.block_matrix = planted_block_matrix(k, q);
  spec.max_expected_degree = max_expected_degree;
  spec.degrees.resize(n);
  spec.memberships.resize(static_cast<std::size_t>(n));
  std::lognormal_distribution<double> lognormal(0.0, 1.0);
  std::uniform_int_distribution<Index> block(0, k - 1);
  for (Index i = 0; i < n; ++i) {
    spec.degrees(i) = lognormal(rng);
    spec.memberships[static_cast<std::size_t>(i)] = block(rng);
  }
  return spec;
}

DcmmsbmSpec draw_dcmmsbm_spec(Index n, Index k, double q, double max_expected_degree, Rng& rng) {
  DcmmsbmSpec spec;
  spec.block_matrix = planted_block_matrix(k, q);
  spec.max_expected_degree = max_expected_degree;
  spec.degrees.resize(n);
  spec.memberships.resize(n, k);
  std::lognormal_distribution<double> lognormal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    spec.degrees(i) = lognormal(rng);
    spec.memberships.row(i) = draw_dirichlet(rng, k).transpose();
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Eigensolvers

namespace {

using MatVec = std::function<void(const VectorXd&, VectorXd&)>;

// Positions of the k leading values: |value| descending, then signed value
// descending, then index.
std::vector<Index> leading_order(const VectorXd& values, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    double fa = std::abs(values(a)), fb = std::abs(values(b));
    if (fa != fb) return fa > fb;
    if (values(a) != values(b)) return values(a) > values(b);
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

void apply_sign_convention(MatrixXd& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      double a = std::abs(vectors(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

Embedding dense_embed(const MatrixXd& a, Index k) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::EigConvergenceFailure, "dense symmetric eigensolver did not converge");
  }
  auto order = leading_order(solver.eigenvalues(), k);
  Embedding e;
  e.vectors.resize(a.rows(), k);
  e.eigenvalues.resize(k);
  for (Index c = 0; c < k; ++c) {
    e.vectors.col(c) = solver.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    e.eigenvalues(c) = solver.eigenvalues()(order[static_cast<std::size_t>(c)]);
  }
  apply_sign_convention(e.vectors);
  return e;
}

// Lanczos with full reorthogonalization. The Krylov space grows until the k
// leading Ritz pairs have residual below tol * |leading Ritz value|.
Embedding lanczos_embed(Index n, const MatVec& apply, Index k, double tol = 1e-8) {
  const Index max_iters = 10 * n;
  Index target = std::min(n, std::max<Index>(2 * k + 20, 40));

  MatrixXd basis(n, target);
  std::vector<double> diag, offdiag;
  Rng start_rng(0x5eedcafeULL);

  auto fresh_vector = [&](Index used) {
    for (int tries = 0; tries < 10; ++tries) {
      VectorXd v = draw_normal_vector(start_rng, n);
      for (int pass = 0; pass < 2; ++pass) {
        v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
      }
      double nv = v.norm();
      if (nv > 1e-8) return VectorXd(v / nv);
    }
    fail(ErrorCode::EigConvergenceFailure, "Lanczos could not extend the Krylov basis");
  };

  basis.col(0) = fresh_vector(0);
  VectorXd w(n);
  Index used = 1;
  Index iters = 0;
  double scale = 0.0;

  while (true) {
    const Index j = used - 1;
    apply(basis.col(j), w);
    ++iters;
    if (j > 0) w -= offdiag.back() * basis.col(j - 1);
    double a = basis.col(j).dot(w);
    diag.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(used) * (basis.leftCols(used).transpose() * w);
    }
    double b = w.norm();
    scale = std::max({scale, std::abs(a), b});

    bool at_checkpoint = used == target || used == n;
    if (at_checkpoint) {
      Index m = used;
      MatrixXd t = MatrixXd::Zero(m, m);
      for (Index i = 0; i < m; ++i) {
        t(i, i) = diag[static_cast<std::size_t>(i)];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<MatrixXd> small(t);
      if (small.info() != Eigen::Success) {
        fail(ErrorCode::EigConvergenceFailure, "tridiagonal eigensolver failed");
      }
      Index want = std::min(k, m);
      auto order = leading_order(small.eigenvalues(), want);
      double lead = std::abs(small.eigenvalues()(order[0]));
      bool converged = used == n;
      if (!converged && want == k) {
        converged = true;
        for (Index c = 0; c < k; ++c) {
          double resid = std::abs(b * small.eigenvectors()(m - 1, order[static_cast<std::size_t>(c)]));
          if (resid > tol * std::max(lead, 1e-300)) {
            converged = false;
            break;
          }
        }
      }
      if (converged) {
        Embedding e;
        e.vectors.resize(n, k);
        e.eigenvalues.resize(k);
        for (Index c = 0; c < k; ++c) {
          Index o = order[static_cast<std::size_t>(c)];
          e.vectors.col(c) = basis.leftCols(m) * small.eigenvectors().col(o);
          e.eigenvalues(c) = small.eigenvalues()(o);
        }
        apply_sign_convention(e.vectors);
        return e;
      }
      if (iters >= max_iters) {
        fail(ErrorCode::EigConvergenceFailure, "Lanczos exceeded " + std::to_string(max_iters) + " iterations");
      }
      target = std::min(n, target + std::max<Index>(target / 2, 20));
      basis.conservativeResize(n, target);
    }

    if (b <= 1e-12 * std::max(scale, 1.0)) {
      // invariant subspace: restart in its orthogonal complement
      offdiag.push_back(0.0);
      basis.col(used) = fresh_vector(used);
    } else {
      offdiag.push_back(b);
      basis.col(used) = w / b;
    }
    ++used;
  }
}

void check_k(Index n, Index k) {
  if (k < 1 || k > n) {
    fail(ErrorCode::InvalidArgument, "embedding dimension must lie in [1, " + std::to_string(n) + "]");
  }
}

}  // namespace

Embedding spectral_embed(const MatrixXd& symmetric, Index k) {
  if (symmetric.rows() != symmetric.cols()) fail(ErrorCode::ShapeMismatch, "matrix must be square");
  const Index n = symmetric.rows();
  check_k(n, k);
  if (n <= kDenseEigenLimit) return dense_embed(symmetric, k);
  return lanczos_embed(n, [&](const VectorXd& x, VectorXd& y) { y.noalias() = symmetric * x; }, k);
}

Embedding spectral_embed(const SparseMatrix& symmetric, Index k) {
  if (symmetric.rows() != symmetric.cols()) fail(ErrorCode::ShapeMismatch, "matrix must be square");
  const Index n = symmetric.rows();
  check_k(n, k);
  if (n <= kDenseEigenLimit) return dense_embed(MatrixXd(symmetric), k);
  return lanczos_embed(n, [&](const VectorXd& x, VectorXd& y) { y.noalias() = symmetric * x; }, k);
}

Embedding spectral_embed(const Graph& g, Index k) { return spectral_embed(g.adjacency(), k); }

// ---------------------------------------------------------------------------
// Procrustes

Procrustes procrustes_align(const MatrixXd& u_hat, const MatrixXd& u_ref) {
  if (u_hat.rows() != u_ref.rows() || u_hat.cols() != u_ref.cols()) {
    fail(ErrorCode::ShapeMismatch, "procrustes inputs differ in shape");
  }
  MatrixXd cross = u_ref.transpose() * u_hat;
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Procrustes out;
  out.h = svd.matrixU() * svd.matrixV().transpose();
  out.residual = (u_hat - u_ref * out.h).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Rank selection

Index argmin_rank(const std::vector<double>& cv_error) {
  if (cv_error.empty()) fail(ErrorCode::InvalidArgument, "no candidate ranks");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cv_error.size(); ++i) {
    if (cv_error[i] < cv_error[best]) best = i;
  }
  return static_cast<Index>(best) + 1;
}

SelectKResult select_k(const Graph& g, const SelectKOptions& options, Rng& rng) {
  const Index n = g.n();
  if (options.k_max < 1 || options.k_max >= n) {
    fail(ErrorCode::InvalidArgument, "k_max must lie in [1, n)");
  }
  if (options.folds < 2) fail(ErrorCode::InvalidArgument, "at least two folds are required");
  if (!(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "holdout fraction must lie in (0, 1)");
  }
  const Index k_max = options.k_max;
  const double keep_scale = 1.0 / (1.0 - options.holdout_fraction);
  const MatrixXd a = g.dense();

  std::vector<double> total(static_cast<std::size_t>(k_max), 0.0);
  for (int fold = 0; fold < options.folds; ++fold) {
    std::vector<std::pair<Index, Index>> hidden;
    std::vector<Eigen::Triplet<double>> observed;
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < j; ++i) {
        if (draw_uniform(rng) < options.holdout_fraction) {
          hidden.emplace_back(i, j);
        } else if (a(i, j) != 0.0) {
          observed.emplace_back(i, j, keep_scale);
          observed.emplace_back(j, i, keep_scale);
        }
      }
    }
    if (hidden.empty()) continue;
    SparseMatrix scaled(n, n);
    scaled.setFromTriplets(observed.begin(), observed.end());
    Embedding e = spectral_embed(scaled, k_max);

    std::vector<double> fold_err(static_cast<std::size_t>(k_max), 0.0);
    for (auto [i, j] : hidden) {
      double recon = 0.0;
      for (Index r = 0; r < k_max; ++r) {
        recon += e.eigenvalues(r) * e.vectors(i, r) * e.vectors(j, r);
        double diff = recon - a(i, j);
        fold_err[static_cast<std::size_t>(r)] += diff * diff;
      }
    }
    for (Index r = 0; r < k_max; ++r) {
      total[static_cast<std::size_t>(r)] += fold_err[static_cast<std::size_t>(r)] / static_cast<double>(hidden.size());
    }
  }
  SelectKResult result;
  result.cv_error.resize(total.size());
  for (std::size_t r = 0; r < total.size(); ++r) result.cv_error[r] = total[r] / options.folds;
  result.k = argmin_rank(result.cv_error);
  return result;
}

// ---------------------------------------------------------------------------
// Edge list CSV

Graph read_edge_list(const std::filesystem::path& path, std::optional<Index> n) {
  auto lines = io::read_lines(path);
  if (lines.empty() || io::split_csv_line(lines[0]) != std::vector<std::string_view>{"src", "dst"}) {
    fail(ErrorCode::ParseError, path.string() + ": line 1: expected header 'src,dst'");
  }
  std::vector<std::pair<Index, Index>> edges;
  std::set<std::pair<Index, Index>> seen;
  Index max_id = -1;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string where = path.string() + ": line " + std::to_string(row + 1);
    auto fields = io::split_csv_line(lines[row]);
    if (fields.size() != 2) fail(ErrorCode::ParseError, where + ": expected 2 fields");
    Index a = io::parse_integer(fields[0], where);
    Index b = io::parse_integer(fields[1], where);
    if (a < 0 || b < 0) fail(ErrorCode::ParseError, where + ": negative node id");
    if (a == b) fail(ErrorCode::ParseError, where + ": self loop on node " + std::to_string(a));
    if (!seen.insert(std::minmax(a, b)).second) fail(ErrorCode::ParseError, where + ": duplicate edge");
    if (n && std::max(a, b) >= *n) fail(ErrorCode::ParseError, where + ": node id exceeds node count");
    max_id = std::max({max_id, a, b});
    edges.emplace_back(a, b);
  }
  return Graph::from_edges(n ? *n : max_id + 1, edges);
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::string out = "src,dst\n";
  for (auto [a, b] : g.edges()) {
    out += std::to_string(a) + "," + std::to_string(b) + "\n";
  }
  io::write_atomic(path, out);
}

}  // namespace enarkit::network
