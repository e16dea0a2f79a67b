#include "enarkit/random.hpp"

namespace enarkit {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view key, std::uint64_t index) {
  std::uint64_t h = splitmix64(base_seed);
  for (unsigned char c : key) {
    h = splitmix64(h ^ c);
  }
  // length terminator keeps ("ab", 1) and ("a", ...) apart
  h = splitmix64(h ^ (0xff00ULL + key.size()));
  return splitmix64(h ^ splitmix64(index));
}

double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double draw_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

Eigen::VectorXd draw_normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd out(n);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = dist(rng);
  return out;
}

Eigen::VectorXd draw_dirichlet(Rng& rng, Eigen::Index k, double alpha) {
  std::gamma_distribution<double> dist(alpha, 1.0);
  Eigen::VectorXd out(k);
  for (Eigen::Index i = 0; i < k; ++i) out(i) = dist(rng);
  return out / out.sum();
}

}  // namespace enarkit
