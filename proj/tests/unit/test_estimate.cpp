#include <doctest.h>

#include <cmath>

#include "enarkit/error.hpp"
#include "enarkit/estimate.hpp"
#include "helpers.hpp"

using namespace enarkit;
using namespace enarkit::estimate;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd default_gamma() { return (VectorXd(3) << 1.0 / 3.0, -1.0 / 6.0, 0.0).finished(); }

// Random panel whose response follows the given regressors exactly (sigma = 0).
process::Panel noiseless_panel(const network::SparseMatrix& l, const MatrixXd& latent_scaled, const VectorXd& beta,
                               double alpha, double theta, const VectorXd& gamma, double intercept, bool lags,
                               Index t_len, Rng& rng) {
  const Index n = l.rows();
  process::Panel p;
  p.y.resize(n, t_len + 1);
  p.y.col(0) = draw_normal_vector(rng, n);
  for (Index t = 0; t < t_len; ++t) {
    MatrixXd z(n, gamma.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = draw_normal(rng);
    VectorXd next = latent_scaled * beta + z * gamma + VectorXd::Constant(n, intercept);
    if (lags) next += alpha * p.y.col(t) + theta * (l * p.y.col(t));
    p.y.col(t + 1) = next;
    p.z.push_back(z);
  }
  return p;
}

}  // namespace

TEST_SUITE("estimate") {

TEST_CASE("model names") {
  CHECK(parse_model("ENAR") == ModelKind::ENAR);
  CHECK(parse_model("amnar") == ModelKind::AMNAR);
  CHECK(model_name(ModelKind::NAR) == "nar");
  CHECK_THROWS_AS(parse_model("cnar"), Error);
}

TEST_CASE("coefficient names follow the design order") {
  DesignSpec enar{ModelKind::ENAR, 2};
  CHECK(enar.coefficient_names(3) ==
        std::vector<std::string>{"beta_1", "beta_2", "alpha", "theta", "gamma_1", "gamma_2", "gamma_3"});
  DesignSpec amnar{ModelKind::AMNAR, 2};
  CHECK(amnar.latent_columns() == 3);
  CHECK(DesignSpec{ModelKind::NAR, 0}.coefficient_names(1) == std::vector<std::string>{"alpha", "theta", "gamma_1"});
}

TEST_CASE("nar design unrolled") {
  auto l = network::normalized_laplacian(testutil::path_graph(2));
  process::Panel p;
  p.y.resize(2, 2);
  p.y << 1.0, 5.0, 2.0, 7.0;
  p.z.push_back(MatrixXd(2, 0));
  Design d = build_design(p, l, MatrixXd(2, 0), DesignSpec{ModelKind::NAR, 0});
  REQUIRE(d.w.rows() == 2);
  REQUIRE(d.w.cols() == 2);
  CHECK(d.w(0, 0) == 1.0);
  CHECK(d.w(1, 0) == 2.0);
  CHECK(d.w(0, 1) == 2.0);
  CHECK(d.w(1, 1) == 1.0);
  CHECK(d.y(0) == 5.0);
  CHECK(d.y(1) == 7.0);
}

TEST_CASE("enar and amnar design columns") {
  Rng rng(1);
  auto l = network::normalized_laplacian(testutil::connected_random_graph(16, 0.3, rng));
  MatrixXd u = MatrixXd::Ones(16, 1);
  auto panel = noiseless_panel(l, MatrixXd(16, 0), VectorXd(), 0.2, 0.2, default_gamma(), 0.0, true, 4, rng);
  Design e = build_design(panel, l, u, DesignSpec{ModelKind::ENAR, 1});
  CHECK(e.w.cols() == 1 + 2 + 3);

  MatrixXd x = MatrixXd::Ones(16, 2);
  Design a = build_design(panel, l, x, DesignSpec{ModelKind::AMNAR, 1, 0.25});
  CHECK(a.w.cols() == 2 + 2 + 3);
  CHECK((a.w.leftCols(2).array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("least squares equals the normal equations oracle") {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    Index d = 1 + rep % 6;
    Index n = d + 2 + static_cast<Index>(draw_uniform(rng) * (38 - d));
    MatrixXd w(n, d);
    for (Index i = 0; i < w.size(); ++i) w(i) = draw_normal(rng);
    VectorXd y = draw_normal_vector(rng, n);
    FitResult fit = fit_ls(w, y);
    MatrixXd wtw_inv = (w.transpose() * w).inverse();
    VectorXd mu = wtw_inv * (w.transpose() * y);
    double rss = (y - w * mu).squaredNorm();
    double s2 = rss / static_cast<double>(n - d);
    CHECK((fit.mu_hat - mu).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(fit.sigma2_hat - s2) < 1e-10);
    CHECK((fit.cov_hat - s2 * wtw_inv).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((w.transpose() * (y - w * fit.mu_hat)).cwiseAbs().maxCoeff() < 1e-10);
    double ll = -0.5 * n * (std::log(2 * M_PI * rss / n) + 1);
    CHECK(fit.aic == doctest::Approx(-2 * ll + 2 * (d + 1)).epsilon(1e-12));
    CHECK(fit.bic == doctest::Approx(-2 * ll + (d + 1) * std::log(static_cast<double>(n))).epsilon(1e-12));
  }
}

TEST_CASE("zero response gives zero estimates") {
  MatrixXd w = MatrixXd::Random(10, 3);
  FitResult fit = fit_ls(w, VectorXd::Zero(10));
  CHECK(fit.mu_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fit.sigma2_hat == 0.0);
}

TEST_CASE("rank deficiency is an error") {
  MatrixXd w(6, 3);
  w.col(0) = VectorXd::LinSpaced(6, 0, 5);
  w.col(1) = VectorXd::Ones(6);
  w.col(2) = 2.0 * w.col(0) - w.col(1);
  try {
    fit_ls(w, VectorXd::Ones(6));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("noiseless data are recovered exactly") {
  Rng rng(3);
  const Index n = 30, k = 3, t = 6;
  auto l = network::normalized_laplacian(testutil::connected_random_graph(n, 0.2, rng));
  MatrixXd u = testutil::random_orthogonal(n, rng).leftCols(k);
  VectorXd beta = (VectorXd(3) << 1.0, -0.5, 1.0 / 3.0).finished();

  SUBCASE("enar") {
    auto panel = noiseless_panel(l, u, beta, 0.2, 0.2, default_gamma(), 0.0, true, t, rng);
    FitResult fit = fit_with_latent(panel, l, u, DesignSpec{ModelKind::ENAR, k});
    VectorXd truth(8);
    truth << beta, 0.2, 0.2, default_gamma();
    CHECK((fit.mu_hat - truth).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("nar") {
    auto panel = noiseless_panel(l, MatrixXd(n, 0), VectorXd(), 0.3, -0.4, default_gamma(), 0.0, true, t, rng);
    FitResult fit = fit_with_latent(panel, l, MatrixXd(n, 0), DesignSpec{ModelKind::NAR, 0});
    VectorXd truth(5);
    truth << 0.3, -0.4, default_gamma();
    CHECK((fit.mu_hat - truth).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("amnar") {
    MatrixXd x(n, k + 1);
    for (Index i = 0; i < x.size(); ++i) x(i) = draw_normal(rng);
    VectorXd b(4);
    b << 1.0, -0.5, 1.0 / 3.0, 2.0;
    double r = process::amnar_multiplier(n, t, 0.25);
    auto panel = noiseless_panel(l, r * x, b, 0.2, 0.2, default_gamma(), 0.0, true, t, rng);
    FitResult fit = fit_with_latent(panel, l, x, DesignSpec{ModelKind::AMNAR, k, 0.25});
    VectorXd truth(9);
    truth << b, 0.2, 0.2, default_gamma();
    CHECK((fit.mu_hat - truth).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("enr") {
    auto panel = noiseless_panel(l, u, beta, 0.0, 0.0, default_gamma(), 0.7, false, t, rng);
    FitResult fit = fit_with_latent(panel, l, u, DesignSpec{ModelKind::ENR, k});
    VectorXd truth(7);
    truth << beta, 0.7, default_gamma();
    CHECK((fit.mu_hat - truth).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.names[3] == "intercept");
  }
}

TEST_CASE("noiseless forecast is exact") {
  Rng rng(4);
  const Index n = 25;
  auto l = network::normalized_laplacian(testutil::connected_random_graph(n, 0.2, rng));
  MatrixXd u = testutil::random_orthogonal(n, rng).leftCols(2);
  VectorXd beta = (VectorXd(2) << 1.0, -0.5).finished();
  auto panel = noiseless_panel(l, u, beta, 0.2, 0.2, default_gamma(), 0.0, true, 8, rng);
  FitResult fit = fit_with_latent(panel.window(0, 7), l, u, DesignSpec{ModelKind::ENAR, 2});
  VectorXd y_hat = predict_one_step(fit, l, panel.y.col(7), panel.z[7], u);
  CHECK((y_hat - panel.y.col(8)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("non-latent estimates are rotation invariant") {
  Rng rng(5);
  const Index n = 40;
  network::Graph g = testutil::connected_random_graph(n, 0.15, rng);
  auto l = network::normalized_laplacian(g);
  MatrixXd u = network::spectral_embed(g, 3).vectors;
  VectorXd psi = u * (VectorXd(3) << 1.0, -0.5, 0.3).finished();
  process::CovariateSpec cov{(VectorXd(3) << 3.0, 2.0, 1.0).finished()};
  auto panel = process::simulate_with_effect(0.2, 0.2, default_gamma(), 0.5, l, psi, cov, 20, rng);
  for (int rep = 0; rep < 5; ++rep) {
    MatrixXd r = testutil::random_orthogonal(3, rng);
    FitResult a = fit_with_latent(panel, l, u, DesignSpec{ModelKind::ENAR, 3});
    FitResult b = fit_with_latent(panel, l, u * r, DesignSpec{ModelKind::ENAR, 3});
    CHECK((a.mu_hat.tail(5) - b.mu_hat.tail(5)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r.transpose() * a.mu_hat.head(3) - b.mu_hat.head(3)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(a.sigma2_hat - b.sigma2_hat) < 1e-9);
    CHECK(std::abs(a.aic - b.aic) < 1e-9);
    CHECK(std::abs(a.bic - b.bic) < 1e-9);
    Design da = build_design(panel, l, u, DesignSpec{ModelKind::ENAR, 3});
    Design db = build_design(panel, l, u * r, DesignSpec{ModelKind::ENAR, 3});
    CHECK((da.w * a.mu_hat - db.w * b.mu_hat).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("nar fit is the zero-column enar path") {
  Rng rng(6);
  network::Graph g = testutil::connected_random_graph(20, 0.2, rng);
  auto l = network::normalized_laplacian(g);
  process::CovariateSpec cov{(VectorXd(3) << 3.0, 2.0, 1.0).finished()};
  auto panel = process::simulate_with_effect(0.2, 0.2, default_gamma(), 0.5, l, VectorXd::Zero(20), cov, 10, rng);
  FitResult a = fit_nar(panel, g);
  FitResult b = fit_with_latent(panel, l, MatrixXd(20, 0), DesignSpec{ModelKind::NAR, 0});
  CHECK((a.mu_hat.array() == b.mu_hat.array()).all());
  CHECK(a.aic == b.aic);
}

TEST_CASE("enar and nar forecasts differ through the latent part") {
  Rng rng(7);
  network::Graph g = testutil::connected_random_graph(30, 0.2, rng);
  auto l = network::normalized_laplacian(g);
  process::CovariateSpec cov{(VectorXd(3) << 3.0, 2.0, 1.0).finished()};
  auto panel = process::simulate_with_effect(0.2, 0.2, default_gamma(), 0.5, l, VectorXd::Zero(30), cov, 20, rng);
  auto train = panel.window(0, 19);
  EnarFit e = fit_enar(train, g, 3);
  FitResult nfit = fit_nar(train, g);
  VectorXd y = panel.y.col(19);
  const MatrixXd& z = panel.z[19];
  VectorXd ye = predict_one_step(e.fit, l, y, z, e.embedding.vectors);
  VectorXd yn = predict_one_step(nfit, l, y, z, MatrixXd(30, 0));
  // ye - yn = U beta_hat + (shared-regressor coefficient differences) applied to W_T
  VectorXd latent = e.embedding.vectors * e.fit.mu_hat.head(3);
  VectorXd shared = (e.fit.mu_hat.tail(5) - nfit.mu_hat);
  MatrixXd w_shared(30, 5);
  w_shared << y, l * y, z;
  CHECK(((ye - yn) - latent - w_shared * shared).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ye - yn).cwiseAbs().maxCoeff() <= latent.cwiseAbs().maxCoeff() + (w_shared * shared).cwiseAbs().maxCoeff() + 1e-12);
}

TEST_CASE("relative error metrics") {
  MatrixXd i2 = MatrixXd::Identity(2, 2);
  CHECK(rmse_rel(i2, i2) == 0.0);
  CHECK(rmse_rel(i2, MatrixXd::Zero(2, 2)) == doctest::Approx(1.0));
  MatrixXd half = MatrixXd::Identity(2, 2);
  half(1, 1) = 0.5;
  CHECK(rmse_rel(i2, half) == doctest::Approx(0.5).epsilon(1e-14));
  VectorXd v(2);
  v << 3.0, 4.0;
  CHECK(rmse_rel(v, VectorXd::Zero(2)) == doctest::Approx(1.0));
  CHECK(rmse_rel(v, v * 1.1) == doctest::Approx(0.1));
  CHECK_THROWS_AS(rmse_rel(MatrixXd::Zero(2, 2), i2), Error);

  MatrixXd w = MatrixXd::Random(5, 2);
  VectorXd mu(2);
  mu << 1.0, 2.0;
  CHECK(rmsp(w, mu, mu) == 0.0);
  CHECK(rmsp(w, VectorXd::Zero(2), mu) == doctest::Approx(1.0));
}

TEST_CASE("normal quantile and intervals") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(1e-6) == doctest::Approx(-4.753424308822899).epsilon(1e-10));

  FitResult fit;
  fit.names = {"alpha"};
  fit.mu_hat = VectorXd::Constant(1, 0.3);
  fit.cov_hat = MatrixXd::Zero(1, 1);
  fit.se = VectorXd::Zero(1);
  auto [lo, hi] = confint(fit, 0, 0.95);
  CHECK(lo == 0.3);
  CHECK(hi == 0.3);
  fit.cov_hat(0, 0) = 0.04;
  fit.se(0) = 0.2;
  auto [lo2, hi2] = confint(fit, 0, 0.95);
  CHECK(lo2 == doctest::Approx(0.3 - 1.959963984540054 * 0.2));
  CHECK(hi2 == doctest::Approx(0.3 + 1.959963984540054 * 0.2));
}

TEST_CASE("strong effects are significant") {
  Rng rng(8);
  network::Graph g = testutil::connected_random_graph(60, 0.1, rng);
  auto l = network::normalized_laplacian(g);
  process::CovariateSpec cov{(VectorXd(3) << 3.0, 2.0, 1.0).finished()};
  auto panel = process::simulate_with_effect(0.8, 0.15, default_gamma(), 0.5, l, VectorXd::Zero(60), cov, 50, rng);
  EnarFit e = fit_enar(panel, g, 2);
  for (const char* name : {"alpha", "theta"}) {
    auto [lo, hi] = confint(e.fit, e.fit.index_of(name), 0.95);
    CHECK((lo > 0.0 || hi < 0.0));
  }
}

TEST_CASE("fit json round trip keeps every field") {
  Rng rng(9);
  network::Graph g = testutil::connected_random_graph(25, 0.2, rng);
  auto l = network::normalized_laplacian(g);
  process::CovariateSpec cov{(VectorXd(3) << 3.0, 2.0, 1.0).finished()};
  auto panel = process::simulate_with_effect(0.2, 0.2, default_gamma(), 0.5, l, VectorXd::Zero(25), cov, 12, rng);
  EnarFit e = fit_enar(panel, g, 2);
  auto j = fit_to_json(e.fit);
  for (const char* key : {"mu_hat", "se", "sigma2_hat", "aic", "bic", "diagnostics", "coefficients"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["mu_hat"].contains("alpha"));
  CHECK(j["se"].contains("theta"));
  CHECK(j["mu_hat"].contains("beta_2"));
  FitResult back = fit_from_json(nlohmann::json::parse(j.dump()));
  CHECK((back.mu_hat - e.fit.mu_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.cov_hat - e.fit.cov_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.names == e.fit.names);
  CHECK(back.aic == e.fit.aic);
  CHECK(e.fit.beta_rotation_ambiguous);
  CHECK(std::isfinite(e.fit.diagnostics.eigengap));
  CHECK(std::isfinite(e.fit.diagnostics.condition_number));
}

TEST_CASE("amnar fits across the range of s") {
  Rng rng(10);
  network::Graph g = testutil::connected_random_graph(30, 0.25, rng);
  process::CovariateSpec cov{(VectorXd(3) << 3.0, 2.0, 1.0).finished()};
  auto l = network::normalized_laplacian(g);
  auto panel = process::simulate_with_effect(0.2, 0.2, default_gamma(), 0.5, l, VectorXd::Zero(30), cov, 10, rng);
  for (double s : {0.01, 0.49}) {
    AmnarFit f = fit_amnar(panel, g, 2, s, lsm::LsmConfig{});
    Design d = build_design(panel, l, f.latent_estimate, DesignSpec{ModelKind::AMNAR, 2, s});
    double expected = process::amnar_multiplier(30, 10, s) * f.latent_estimate.col(0).norm();
    CHECK(d.w.col(0).head(30).norm() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(f.fit.mu_hat.allFinite());
  }
}

}  // TEST_SUITE
