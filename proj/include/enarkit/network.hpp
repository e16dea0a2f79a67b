#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "enarkit/random.hpp"

namespace enarkit::network {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Undirected, unweighted, hollow graph. The adjacency stores both triangles.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an undirected edge list (each edge once, any orientation).
  /// Self loops, duplicates and out-of-range ids are rejected.
  static Graph from_edges(Eigen::Index n, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& edges);

  /// Takes the strict upper triangle of a dense 0/1 matrix; the lower triangle is ignored.
  static Graph from_dense_upper(const Eigen::MatrixXd& upper);

  Eigen::Index n() const { return n_; }
  const SparseMatrix& adjacency() const { return adjacency_; }
  Eigen::Index edge_count() const { return adjacency_.nonZeros() / 2; }
  Eigen::VectorXd degrees() const;
  double edge_density() const;
  std::vector<Eigen::Index> isolated_nodes() const;

  /// Edges with src < dst, sorted.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges() const;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(adjacency_); }

 private:
  Eigen::Index n_ = 0;
  SparseMatrix adjacency_;
};

struct RdpgSpec {
  Eigen::MatrixXd positions;  // N x K
  double rho = 1.0;
};

struct DcsbmSpec {
  Eigen::MatrixXd block_matrix;           // K x K
  std::vector<Eigen::Index> memberships;  // N block labels in [0, K)
  Eigen::VectorXd degrees;                // N positive
  double max_expected_degree = 1.0;
};

struct DcmmsbmSpec {
  Eigen::MatrixXd block_matrix;  // K x K
  Eigen::MatrixXd memberships;   // N x K, rows on the simplex
  Eigen::VectorXd degrees;
  double max_expected_degree = 1.0;
};

using LatentGraphSpec = std::variant<RdpgSpec, DcsbmSpec, DcmmsbmSpec>;

/// What the samplers do when a draw contains a node of degree zero.
enum class IsolationPolicy {
  Resample,  // redraw the whole graph, up to `max_attempts` times
  Allow,
};

struct SamplingOptions {
  IsolationPolicy isolation = IsolationPolicy::Resample;
  int max_attempts = 100;
};

/// Population connection matrix with generator bookkeeping.
struct ConnectionMatrix {
  Eigen::MatrixXd p;            // hollow, entries in [0, 1]
  double max_row_sum = 0.0;     // before clipping
  Eigen::Index clipped = 0;     // off-diagonal entries clipped to 1
};

struct Embedding {
  Eigen::MatrixXd vectors;      // N x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // k, |.| nonincreasing
  Eigen::Index k() const { return vectors.cols(); }
};

/// D^{-1/2} A D^{-1/2}. Isolated nodes raise IsolatedNode unless allowed, in
/// which case their rows and columns are zero.
SparseMatrix normalized_laplacian(const Graph& g, bool allow_isolated = false);

/// K x K matrix 2q I + q 1 1'.
Eigen::MatrixXd planted_block_matrix(Eigen::Index k, double q);

ConnectionMatrix connection_matrix(const LatentGraphSpec& spec);

/// Independent Bernoulli(p_ij) for i < j, mirrored.
Graph sample_graph(const Eigen::MatrixXd& p, Rng& rng, const SamplingOptions& options = {});

Graph generate_rdpg(const RdpgSpec& spec, Rng& rng, const SamplingOptions& options = {});
Graph generate_dcsbm(const DcsbmSpec& spec, Rng& rng, const SamplingOptions& options = {});
Graph generate_dcmmsbm(const DcmmsbmSpec& spec, Rng& rng, const SamplingOptions& options = {});
Graph generate(const LatentGraphSpec& spec, Rng& rng, const SamplingOptions& options = {});

/// Degrees standard log-normal, memberships uniform categorical.
DcsbmSpec draw_dcsbm_spec(Eigen::Index n, Eigen::Index k, double q, double max_expected_degree, Rng& rng);
/// Degrees standard log-normal, memberships Dirichlet(1, ..., 1).
DcmmsbmSpec draw_dcmmsbm_spec(Eigen::Index n, Eigen::Index k, double q, double max_expected_degree, Rng& rng);

/// Leading k eigenpairs by magnitude, each column signed so that its
/// largest-magnitude entry is positive.
Embedding spectral_embed(const Graph& g, Eigen::Index k);
Embedding spectral_embed(const Eigen::MatrixXd& symmetric, Eigen::Index k);
Embedding spectral_embed(const SparseMatrix& symmetric, Eigen::Index k);

/// Dense solver at or below this size, Lanczos above.
inline constexpr Eigen::Index kDenseEigenLimit = 1024;

struct Procrustes {
  Eigen::MatrixXd h;  // K x K orthogonal
  double residual = 0.0;
};

/// Orthogonal h minimizing ||u_hat - u_ref h||_F.
Procrustes procrustes_align(const Eigen::MatrixXd& u_hat, const Eigen::MatrixXd& u_ref);

struct SelectKOptions {
  Eigen::Index k_max = 8;
  int folds = 5;
  double holdout_fraction = 0.1;
};

struct SelectKResult {
  Eigen::Index k = 1;
  std::vector<double> cv_error;  // index k-1
};

/// Edge cross-validation over ranks 1..k_max.
SelectKResult select_k(const Graph& g, const SelectKOptions& options, Rng& rng);

/// First index of the minimum (as rank, 1-based).
Eigen::Index argmin_rank(const std::vector<double>& cv_error);

/// Edge list CSV with header `src,dst`. Node count defaults to max id + 1.
Graph read_edge_list(const std::filesystem::path& path, std::optional<Eigen::Index> n = std::nullopt);
void write_edge_list(const std::filesystem::path& path, const Graph& g);

}  // namespace enarkit::network
