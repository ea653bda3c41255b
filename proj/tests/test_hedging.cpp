#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fwph/hedging.hpp"
#include "fwph/io.hpp"
#include "fwph/oracle.hpp"
#include "oracles.hpp"

using namespace fwph;

TEST_CASE("residual: consensus means zero, single scenario is a norm") {
  std::vector<Vec> x = {{1.0, 2.0}, {1.0, 2.0}};
  Vec z = {1.0, 2.0};
  CHECK(residual(x, z, {0.5, 0.5}) == 0.0);

  std::vector<Vec> one = {{3.0, 4.0}};
  CHECK(residual(one, {0.0, 0.0}, {1.0}) == doctest::Approx(5.0));
}

TEST_CASE("residual identity holds for random data") {
  testor::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int S = static_cast<int>(rng.range(1, 4));
    const int n = static_cast<int>(rng.range(1, 5));
    Vec p(S);
    double total = 0.0;
    for (double& v : p) {
      v = static_cast<double>(rng.range(1, 5));
      total += v;
    }
    for (double& v : p) v /= total;
    std::vector<Vec> x(S, Vec(n));
    Vec z_prev(n);
    for (auto& xs : x)
      for (double& v : xs) v = rng.uniform(-3.0, 3.0);
    for (double& v : z_prev) v = rng.uniform(-3.0, 3.0);
    Vec z = consensus(x, p);

    double lhs = 0.0;
    for (int s = 0; s < S; ++s)
      lhs += p[s] * (sq_dist(x[s], z) + sq_dist(z, z_prev));
    double r = residual(x, z_prev, p);
    CHECK(std::abs(lhs - r * r) <= 1e-10 * (1.0 + std::abs(r * r)));
  }
}

TEST_CASE("dual update: zero step and re-centering") {
  Vec p = {0.5, 0.5};
  DualMultipliers omega;
  omega.omega = {{1.0, -1.0}, {-1.0, 1.0}};
  std::vector<Vec> x = {{0.5, 0.5}, {0.5, 0.5}};
  Vec z = {0.5, 0.5};
  DualMultipliers out = dual_update(omega, x, z, 10.0, p);
  CHECK(out.omega == omega.omega);

  testor::Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int S = 3, n = 3;
    Vec prob = {0.2, 0.3, 0.5};
    std::vector<Vec> xs(S, Vec(n));
    for (auto& v : xs)
      for (double& e : v) e = rng.uniform(-2.0, 2.0);
    Vec zc = consensus(xs, prob);
    DualMultipliers w0;
    w0.omega.assign(S, Vec(n, 0.0));
    DualMultipliers w1 = dual_update(w0, xs, zc, rng.uniform(0.1, 50.0), prob);
    for (int j = 0; j < n; ++j) {
      double agg = 0.0;
      for (int s = 0; s < S; ++s) agg += prob[s] * w1.omega[s][j];
      CHECK(std::abs(agg) <= 1e-12);
    }
  }
}

TEST_CASE("ph rejects non-binary first stage and infeasible omega0") {
  TwoStageProblem p = generate_instance(0);
  p.first.kind[0] = VarKind::Integer;
  p.first.ub[0] = 2.0;
  HedgingConfig cfg;
  CHECK_THROWS_AS(run_ph(p, DualMultipliers::zeros(p), cfg), PreconditionError);

  TwoStageProblem q = generate_instance(0);
  DualMultipliers bad = DualMultipliers::zeros(q);
  bad.omega[0][0] = 1.0;
  CHECK_THROWS_AS(run_ph(q, bad, cfg), PreconditionError);
}

TEST_CASE("single scenario: both algorithms collapse immediately") {
  GenShape shape;
  shape.scenarios = 1;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    TwoStageProblem p = generate_instance(seed, shape);
    OracleResult ef = solve_extensive(p);
    HedgingConfig cfg;
    cfg.rho = 4.0;
    cfg.eps = 1e-9;

    RunResult ph = run_ph(p, DualMultipliers::zeros(p), cfg);
    CHECK(ph.reason == Termination::Converged);
    CHECK(ph.trace.back().k <= 2);
    CHECK(ph.final_residual < 1e-9);
    CHECK(std::abs(ph.phi_best - ef.value) <=
          1e-9 * (1.0 + std::abs(ef.value)));

    DualMultipliers w0 = DualMultipliers::zeros(p);
    FwphInit init = fwph_initialize(p, w0);
    RunResult fw = run_fwph(p, std::move(init), w0, cfg);
    CHECK(fw.reason == Termination::Converged);
    CHECK(fw.trace.back().k <= 2);
    CHECK(fw.final_residual < 1e-9);
    CHECK(std::abs(fw.phi_best - ef.value) <=
          1e-9 * (1.0 + std::abs(ef.value)));
  }
}

TEST_CASE("fwph_initialize: shared point and upper bound") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TwoStageProblem p = generate_instance(seed);
    DualMultipliers w0 = DualMultipliers::zeros(p);
    FwphInit init = fwph_initialize(p, w0);
    REQUIRE(static_cast<int>(init.V.size()) == p.num_scenarios());
    const Vec& x1 = init.x0[0];
    for (int s = 0; s < p.num_scenarios(); ++s) {
      CHECK(init.V[s].size() <= 2);
      CHECK(sq_dist_to_proj_conv(init.V[s], x1) <= 1e-9);
    }
    OracleResult ef = solve_extensive(p);
    CHECK(init.upper_bound >= ef.value - 1e-9 * (1.0 + std::abs(ef.value)));
  }
}

TEST_CASE("recourse violation names the scenario") {
  TwoStageProblem p;
  p.name = "no-recourse";
  p.first.obj = {1.0};
  p.first.lb = {0.0};
  p.first.ub = {1.0};
  p.first.kind = {VarKind::Binary};
  for (int s = 0; s < 2; ++s) {
    ScenarioData sc;
    sc.prob = 0.5;
    sc.obj = {1.0};
    sc.y_lb = {0.0};
    sc.y_ub = {1.0};
    sc.y_kind = {VarKind::Continuous};
    // scenario 0 wants x = 1 (cheaply), scenario 1 forbids x = 1
    if (s == 0) {
      sc.T = {{-5.0}};
      sc.W = {{1.0}};
      sc.rhs = {-4.5};
      sc.row_rel = {Relation::LessEqual};  // y <= 5x - 4.5: forces x = 1
    } else {
      sc.T = {{1.0}};
      sc.W = {{0.0}};
      sc.rhs = {0.5};
      sc.row_rel = {Relation::LessEqual};  // x <= 0.5: forbids x = 1
    }
    p.scenarios.push_back(std::move(sc));
  }
  REQUIRE(validate(p).ok());
  CHECK_THROWS_WITH_AS(fwph_initialize(p, DualMultipliers::zeros(p)),
                       doctest::Contains("recourse"), PreconditionError);
}

TEST_CASE("fwph trace: valid bounds, monotone best, vertex growth") {
  TwoStageProblem p = generate_instance(17);
  OracleResult ld = enumerate_ld(p);
  DualMultipliers w0 = DualMultipliers::zeros(p);
  HedgingConfig cfg;
  cfg.rho = 10.0;
  cfg.eps = 0.0;
  cfg.k_max = 60;
  FwphInit init = fwph_initialize(p, w0);
  RunResult r = run_fwph(p, std::move(init), w0, cfg);

  double best = -kInf;
  long last_vertices = 0;
  double last_wall = 0.0;
  for (const auto& rec : r.trace) {
    CHECK(std::isfinite(rec.phi));
    CHECK(rec.phi <= ld.value + 1e-6 * (1.0 + std::abs(ld.value)));
    best = std::max(best, rec.phi);
    CHECK(rec.best_phi == best);
    CHECK(rec.vertices >= last_vertices);
    last_vertices = rec.vertices;
    CHECK(rec.wall_s >= last_wall);
    last_wall = rec.wall_s;
  }
  CHECK(std::abs(r.phi_best - ld.value) <= 1e-4 * (1.0 + std::abs(ld.value)));
}

TEST_CASE("ph bounds_every governs which iterations carry phi") {
  TwoStageProblem p = generate_instance(8);
  HedgingConfig cfg;
  cfg.rho = 2.0;
  cfg.k_max = 9;
  cfg.eps = 0.0;
  cfg.bounds_every = 3;
  RunResult r = run_ph(p, DualMultipliers::zeros(p), cfg);
  for (const auto& rec : r.trace) {
    if (rec.k == 0) continue;
    if (rec.k % 3 == 0)
      CHECK(std::isfinite(rec.phi));
    else
      CHECK(std::isnan(rec.phi));
  }
}

TEST_CASE("trace is identical across thread counts") {
  TwoStageProblem p = generate_instance(23);
  DualMultipliers w0 = DualMultipliers::zeros(p);
  HedgingConfig a;
  a.rho = 5.0;
  a.k_max = 15;
  a.eps = 0.0;
  HedgingConfig b = a;
  b.threads = 4;

  auto same = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  RunResult r1 = run_fwph(p, fwph_initialize(p, w0, 1), w0, a);
  RunResult r2 = run_fwph(p, fwph_initialize(p, w0, 4), w0, b);
  REQUIRE(r1.trace.size() == r2.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(same(r1.trace[i].phi, r2.trace[i].phi));
    CHECK(same(r1.trace[i].residual, r2.trace[i].residual));
  }

  RunResult p1 = run_ph(p, w0, a);
  RunResult p2 = run_ph(p, w0, b);
  REQUIRE(p1.trace.size() == p2.trace.size());
  for (std::size_t i = 0; i < p1.trace.size(); ++i) {
    CHECK(same(p1.trace[i].phi, p2.trace[i].phi));
    CHECK(same(p1.trace[i].residual, p2.trace[i].residual));
  }
}

TEST_CASE("positive inner gaps force vertex growth across 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TwoStageProblem p = generate_instance(seed);
    const int nx = p.num_x();
    for (int s = 0; s < p.num_scenarios(); ++s) {
      MilpModel scratch = scenario_milp(p, s, Vec(nx, 0.0));
      ScenarioMilpFn oracle = [&](const Vec& w_hat) {
        for (int j = 0; j < nx; ++j)
          scratch.lp.obj[j] = p.first.obj[j] + w_hat[j];
        return solve_milp(scratch);
      };
      VertexSet V(nx, p.scenarios[s].num_y());
      MilpSolution first = solve_milp(scenario_milp(p, s, Vec(nx, 0.0)));
      REQUIRE(first.status == MilpStatus::Optimal);
      V.add(first.x, VertexTag::MilpVertex);

      testor::Rng rng(seed * 97 + s);
      Vec omega(nx), z(nx), x0(nx);
      for (double& v : omega) v = rng.uniform(-3.0, 3.0);
      for (double& v : z) v = rng.uniform(0.0, 1.0);
      for (double& v : x0) v = rng.uniform(0.0, 1.0);
      Vec y0(p.scenarios[s].num_y(), 0.0);
      SdmResult r = run_sdm(V, x0, y0, p.first.obj, p.scenarios[s].obj, omega,
                            z, 5.0, 5, 0.0, oracle);
      for (std::size_t t = 1; t < r.gap_trace.size(); ++t)
        if (r.gap_trace[t] > 1e-8)
          CHECK_MESSAGE(r.vertex_counts[t] > r.vertex_counts[t - 1], "seed ",
                        seed, " scenario ", s, " t ", t);
    }
  }
}

TEST_CASE("fwph milp economy at t_max = 1") {
  TwoStageProblem p = generate_instance(12);
  const long S = p.num_scenarios();
  DualMultipliers w0 = DualMultipliers::zeros(p);
  HedgingConfig cfg;
  cfg.rho = 1.0;
  cfg.k_max = 10;
  cfg.eps = 0.0;
  RunResult r = run_fwph(p, fwph_initialize(p, w0), w0, cfg);
  long prev_milp = 0, prev_qp = 0;
  for (const auto& rec : r.trace) {
    CHECK(rec.milp_solves - prev_milp == S);
    CHECK(rec.qp_solves - prev_qp == S);
    prev_milp = rec.milp_solves;
    prev_qp = rec.qp_solves;
  }
}

TEST_CASE("early-stop callback halts the run") {
  TwoStageProblem p = generate_instance(3);
  HedgingConfig cfg;
  cfg.rho = 1.0;
  cfg.k_max = 100;
  cfg.eps = 0.0;
  cfg.stop = [](const IterationRecord& rec) { return rec.k >= 4; };
  DualMultipliers w0 = DualMultipliers::zeros(p);
  RunResult r = run_fwph(p, fwph_initialize(p, w0), w0, cfg);
  CHECK(r.reason == Termination::Stopped);
  CHECK(r.trace.back().k == 4);
  CHECK(termination_letter(r.reason) == 'T');
}
