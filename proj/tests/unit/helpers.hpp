#pragma once

#include <doctest.h>

#include <Eigen/Dense>

#include "enarkit/network.hpp"
#include "enarkit/random.hpp"

namespace testutil {

inline enarkit::network::Graph path_graph(Eigen::Index n) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> e;
  for (Eigen::Index i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return enarkit::network::Graph::from_edges(n, e);
}

inline enarkit::network::Graph complete_graph(Eigen::Index n) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> e;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return enarkit::network::Graph::from_edges(n, e);
}

// Erdos-Renyi draw with every node on a ring so nothing is isolated.
inline enarkit::network::Graph connected_random_graph(Eigen::Index n, double p, enarkit::Rng& rng) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> e;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      bool ring = j == i + 1 || (i == 0 && j == n - 1);
      if (ring || enarkit::draw_uniform(rng) < p) e.emplace_back(i, j);
    }
  return enarkit::network::Graph::from_edges(n, e);
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index k, enarkit::Rng& rng) {
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = enarkit::draw_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline void check_adjacency(const enarkit::network::Graph& g) {
  Eigen::MatrixXd a = g.dense();
  REQUIRE((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.diagonal().cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.array() * (1.0 - a.array())).abs().maxCoeff() == 0.0);
}

}  // namespace testutil
