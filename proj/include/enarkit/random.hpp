#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace enarkit {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed, an arbitrary byte key and an index into one 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view key, std::uint64_t index);

double draw_uniform(Rng& rng);
double draw_normal(Rng& rng);

Eigen::VectorXd draw_normal_vector(Rng& rng, Eigen::Index n);

/// Symmetric Dirichlet(alpha, ..., alpha) of dimension k.
Eigen::VectorXd draw_dirichlet(Rng& rng, Eigen::Index k, double alpha = 1.0);

}  // namespace enarkit
