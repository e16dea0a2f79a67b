#include <doctest.h>

#include <cmath>
#include <set>

#include "enarkit/bench.hpp"
#include "enarkit/error.hpp"
#include "helpers.hpp"

using namespace enarkit;
using namespace enarkit::bench;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ExperimentConfig tiny(int reps) {
  ExperimentConfig c;
  c.n_values = {30};
  c.t_values = {10};
  c.k_values = {2};
  c.reps = reps;
  return c;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("names and defaults") {
  CHECK(parse_generator("DCMMSBM") == Generator::DCMMSBM);
  CHECK(generator_name(Generator::RDPG) == "rdpg");
  CHECK_THROWS_AS(parse_generator("er"), Error);
  VectorXd b = alternating_beta(4);
  CHECK(b(0) == 1.0);
  CHECK(b(1) == -0.5);
  CHECK(b(2) == doctest::Approx(1.0 / 3.0));
  CHECK(b(3) == -0.25);
  ExperimentConfig c;
  CHECK(c.rho_for(400) == doctest::Approx(0.05));
  CHECK(c.gamma(0) == doctest::Approx(1.0 / 3.0));
  CHECK(c.sigma * c.sigma == doctest::Approx(0.25));
}

TEST_CASE("invalid configurations are rejected") {
  ExperimentConfig c = tiny(1);
  c.truth_models = {ModelKind::AMNAR};
  CHECK_THROWS_AS(c.validate(), Error);
  ExperimentConfig d = tiny(1);
  d.alpha = 0.7;
  d.theta = 0.4;
  CHECK_THROWS_AS(d.validate(), Error);
  ExperimentConfig e = tiny(0);
  CHECK_THROWS_AS(e.validate(), Error);
}

TEST_CASE("oracle mode without noise has zero errors") {
  ExperimentConfig c = tiny(1);
  c.sigma = 0.0;
  c.oracle_latent = true;
  c.fit_models = {ModelKind::ENAR};
  for (Generator gen : {Generator::DCMMSBM, Generator::DCSBM, Generator::RDPG}) {
    c.generators = {gen};
    ReplicationResult r = run_replication(Cell{DataCell{gen, ModelKind::ENAR, 40, 12, 3}, ModelKind::ENAR}, 0, c);
    REQUIRE(r.ok());
    CHECK(r.rmse_alpha < 1e-8);
    CHECK(r.rmse_theta < 1e-8);
    CHECK(r.rmse_beta < 1e-8);
    CHECK(r.rmsp < 1e-8);
  }
}

TEST_CASE("oracle amnar on the latent space generator") {
  ExperimentConfig c = tiny(1);
  c.sigma = 0.0;
  c.oracle_latent = true;
  c.generators = {Generator::LSM};
  c.truth_models = {ModelKind::AMNAR};
  c.fit_models = {ModelKind::AMNAR};
  ReplicationResult r =
      run_replication(Cell{DataCell{Generator::LSM, ModelKind::AMNAR, 40, 12, 2}, ModelKind::AMNAR}, 0, c);
  REQUIRE(r.ok());
  CHECK(r.rmse_theta < 1e-8);
  CHECK(r.rmse_beta < 1e-8);
}

TEST_CASE("replications are deterministic") {
  ExperimentConfig c = tiny(1);
  Cell cell{DataCell{Generator::DCMMSBM, ModelKind::ENAR, 30, 10, 2}, ModelKind::ENAR};
  ReplicationResult a = run_replication(cell, 3, c);
  ReplicationResult b = run_replication(cell, 3, c);
  CHECK(a.seed == b.seed);
  CHECK(same(a.theta_hat, b.theta_hat));
  CHECK(same(a.rmse_beta, b.rmse_beta));
  CHECK(same(a.rmsp, b.rmsp));
  CHECK((a.mu_hat.array() == b.mu_hat.array()).all());
}

TEST_CASE("fits of one replication share the data draw") {
  ExperimentConfig c = tiny(1);
  DataCell d{Generator::DCMMSBM, ModelKind::ENAR, 30, 10, 2};
  auto both = run_data_replication(d, 0, c);
  REQUIRE(both.size() == 2);
  CHECK(both[0].seed == both[1].seed);
  ReplicationResult single = run_replication(Cell{d, ModelKind::ENAR}, 0, c);
  CHECK(same(single.theta_hat, both[1].theta_hat));
}

TEST_CASE("grid shape and ordering") {
  ExperimentConfig one = tiny(1);
  one.fit_models = {ModelKind::ENAR};
  CHECK(run_grid(one, 1).size() == 1);

  ExperimentConfig c = tiny(3);
  c.n_values = {20, 30};
  c.t_values = {2, 5};
  auto rows = run_grid(c, 1);
  CHECK(rows.size() == 2 * 2 * 2 * 3);
  auto cells = grid_cells(c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].cell.id() == cells[i / 3].id());
    CHECK(rows[i].rep == static_cast<int>(i % 3));
  }
}

TEST_CASE("grid output does not depend on parallelism") {
  ExperimentConfig c = tiny(3);
  c.n_values = {20, 30};
  c.t_values = {2, 6};
  std::string serial = results_csv(run_grid(c, 1));
  CHECK(serial == results_csv(run_grid(c, 8)));
  CHECK(serial.rfind(
            "gen,truth,fit,N,T,K,rep,seed,alpha_hat,theta_hat,rmse_alpha,rmse_theta,rmse_beta,rmsp,sigma2_hat,aic,bic,"
            "status,wall_ms\n",
            0) == 0);
}

TEST_CASE("derived seeds are distinct over the default grid") {
  std::set<std::uint64_t> seen;
  std::size_t total = 0;
  for (Generator g : {Generator::DCSBM, Generator::DCMMSBM, Generator::RDPG, Generator::LSM})
    for (ModelKind truth : {ModelKind::NAR, ModelKind::ENAR, ModelKind::AMNAR})
      for (Index n : {40, 80, 160, 320})
        for (Index t : {2, 40, 80, 160, 320})
          for (Index k : {3, 6, 12})
            for (int rep = 0; rep < 200; ++rep) {
              seen.insert(replication_seed(20240601, DataCell{g, truth, n, t, k}, rep));
              ++total;
            }
  CHECK(seen.size() == total);
}

TEST_CASE("failures are recorded per row") {
  ExperimentConfig c = tiny(2);
  c.isolation = network::IsolationPolicy::Resample;
  c.rho = 0.001;
  auto rows = run_grid(c, 1);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.status == "IsolationRetriesExceeded");
    CHECK(std::isnan(r.theta_hat));
  }
  auto table = summarize(rows, {"fit"});
  CHECK(table.rows.at(0).failed == 2);
}

TEST_CASE("summaries") {
  ReplicationResult r;
  r.cell = Cell{DataCell{}, ModelKind::ENAR};
  r.theta_hat = 0.25;
  auto single = summarize({r}, {"fit"});
  const auto& m = single.metric({"enar"}, "theta_hat");
  CHECK(m.mean == 0.25);
  CHECK(m.median == 0.25);
  CHECK(m.sd == 0.0);

  std::vector<ReplicationResult> rows(5, r);
  auto table = summarize(rows, {"gen", "fit"});
  const auto& c = table.metric({"dcmmsbm", "enar"}, "theta_hat");
  CHECK(c.q3 - c.q1 == 0.0);
  CHECK_THROWS_AS(summarize({}, {"fit"}), Error);
  CHECK_THROWS_AS(summarize(rows, {"color"}), Error);

  MetricSummary s = summarize_values("x", {4.0, 1.0, 3.0, 2.0, std::nan("")});
  CHECK(s.count == 4);
  CHECK(s.median == 2.5);
  CHECK(s.q1 == 1.75);
  CHECK(s.q3 == 3.25);
  CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  std::string csv = summary_csv(table);
  CHECK(csv.rfind("gen,fit,metric,rows,failed,count,mean,sd,min,q1,median,q3,max\n", 0) == 0);
}

TEST_CASE("rolling forecasts favour enar under enar truth") {
  // simulated analogue of the sliding-window comparison: 200 one-step forecasts
  ExperimentConfig c;
  c.isolation = network::IsolationPolicy::Allow;
  Rng rng(2024);
  DataCell cell{Generator::DCMMSBM, ModelKind::ENAR, 40, 260, 3};
  SimulatedData data = simulate_data(cell, c, rng);
  RollingComparison cmp = rolling_forecast(data.panel, data.graph, {ModelKind::NAR, ModelKind::ENAR}, 3, 50, 200);
  int wins = 0;
  for (std::size_t w = 0; w < 200; ++w) wins += cmp.mspe[1][w] < cmp.mspe[0][w] ? 1 : 0;
  MESSAGE("ENAR wins " << wins << " of 200 windows");
  CHECK(wins > 100);
}

}  // TEST_SUITE
