#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fwph/milp.hpp"
#include "oracles.hpp"

using namespace fwph;

namespace {

MilpModel random_milp(testor::Rng& rng) {
  const int ni = static_cast<int>(rng.range(1, 5));  // integral vars
  const int nc = static_cast<int>(rng.range(0, 2));  // continuous vars
  const int n = ni + nc;
  const int m = static_cast<int>(rng.range(1, 4));
  MilpModel model;
  model.lp.obj.resize(n);
  model.lp.lb.resize(n);
  model.lp.ub.resize(n);
  model.kind.assign(n, VarKind::Continuous);
  for (int j = 0; j < n; ++j) {
    model.lp.obj[j] = static_cast<double>(rng.range(-5, 5));
    if (j < ni) {
      model.kind[j] = rng.range(0, 3) == 0 ? VarKind::Binary : VarKind::Integer;
      if (model.kind[j] == VarKind::Binary) {
        model.lp.lb[j] = 0.0;
        model.lp.ub[j] = 1.0;
      } else {
        model.lp.lb[j] = static_cast<double>(rng.range(-1, 0));
        model.lp.ub[j] = model.lp.lb[j] + static_cast<double>(rng.range(1, 3));
      }
    } else {
      model.lp.lb[j] = 0.0;
      model.lp.ub[j] = static_cast<double>(rng.range(2, 5));
    }
  }
  for (int i = 0; i < m; ++i) {
    LinearRow row;
    row.coeffs.resize(n);
    for (int j = 0; j < n; ++j)
      row.coeffs[j] = static_cast<double>(rng.range(-3, 3));
    row.rel = rng.range(0, 4) == 0 ? Relation::GreaterEqual
                                   : Relation::LessEqual;
    row.rhs = static_cast<double>(rng.range(-3, 6));
    model.lp.rows.push_back(std::move(row));
  }
  return model;
}

}  // namespace

TEST_CASE("LP-integral model solves at the root") {
  // max x (as min -x) with x integer in [0, 2]; relaxation is already integral
  MilpModel model;
  model.lp.obj = {-1.0};
  model.lp.lb = {0.0};
  model.lp.ub = {2.0};
  model.kind = {VarKind::Integer};
  MilpSolution sol = solve_milp(model);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.x[0] == 2.0);
  CHECK(sol.nodes == 1);
}

TEST_CASE("branching is required when the relaxation is fractional") {
  // min -x1 - x2 s.t. 2x1 + 2x2 <= 3, x binary: optimum -1
  MilpModel model;
  model.lp.obj = {-1.0, -1.0};
  model.lp.lb = {0.0, 0.0};
  model.lp.ub = {1.0, 1.0};
  model.kind = {VarKind::Binary, VarKind::Binary};
  model.lp.rows = {{{2.0, 2.0}, Relation::LessEqual, 3.0}};
  MilpSolution sol = solve_milp(model);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.nodes > 1);
}

TEST_CASE("random MILPs match lattice enumeration") {
  int optimal = 0, infeasible = 0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    testor::Rng rng(seed + 2000);
    MilpModel model = random_milp(rng);
    MilpSolution sol = solve_milp(model);
    auto ref = testor::enumerate_milp_min(model);
    if (sol.status == MilpStatus::Optimal) {
      ++optimal;
      REQUIRE_MESSAGE(ref.has_value(), "seed ", seed);
      CHECK_MESSAGE(std::abs(sol.objective - *ref) <=
                        1e-7 * (1.0 + std::abs(*ref)),
                    "seed ", seed, " got ", sol.objective, " want ", *ref);
      // incumbent integrality and feasibility
      for (int j = 0; j < model.lp.num_vars(); ++j)
        if (model.is_integral(j))
          CHECK(std::abs(sol.x[j] - std::round(sol.x[j])) <= 1e-6);
      CHECK(testor::point_feasible(model.lp, sol.x, 1e-6));
      CHECK(sol.dual_bound <= sol.objective + 1e-9 * (1.0 + std::abs(sol.objective)));
    } else {
      REQUIRE(sol.status == MilpStatus::Infeasible);
      ++infeasible;
      CHECK_MESSAGE(!ref.has_value(), "seed ", seed);
    }
  }
  CHECK(optimal >= 60);
  CHECK(infeasible >= 5);
}

TEST_CASE("node limit yields a valid dual bound") {
  testor::Rng rng(99);
  for (int tries = 0; tries < 50; ++tries) {
    MilpModel model = random_milp(rng);
    MilpSolution full = solve_milp(model);
    if (full.status != MilpStatus::Optimal || full.nodes < 5) continue;
    MilpLimits limits;
    limits.node_limit = 2;
    MilpSolution cut = solve_milp(model, limits);
    if (cut.status == MilpStatus::Optimal) continue;
    REQUIRE(cut.status == MilpStatus::BoundOnly);
    CHECK(cut.dual_bound <= full.objective + 1e-9 * (1.0 + std::abs(full.objective)));
    return;
  }
  FAIL("no instance required enough nodes to exercise the limit");
}

TEST_CASE("prox linearization: identity case") {
  MilpModel model;
  model.lp.obj = {1.0, 2.0};
  model.lp.lb = {0.0, 0.0};
  model.lp.ub = {1.0, 1.0};
  model.kind = {VarKind::Binary, VarKind::Binary};
  // z = 0, w = 0, rho = 2: adds +1 to each binary's cost, constant 0
  ProxLinearized pl = prox_linearize(model, {0.0, 0.0}, {0.0, 0.0}, 2.0);
  CHECK(pl.model.lp.obj[0] == doctest::Approx(2.0));
  CHECK(pl.model.lp.obj[1] == doctest::Approx(3.0));
  CHECK(pl.constant == doctest::Approx(0.0));
}

TEST_CASE("prox linearization is exact on binary points") {
  testor::Rng rng(5);
  MilpModel model;
  const int nx = 4;
  model.lp.obj.resize(nx + 2);
  model.lp.lb.assign(nx + 2, 0.0);
  model.lp.ub.assign(nx + 2, 1.0);
  model.kind.assign(nx + 2, VarKind::Continuous);
  for (int j = 0; j < nx; ++j) model.kind[j] = VarKind::Binary;
  for (int j = 0; j < nx + 2; ++j)
    model.lp.obj[j] = rng.uniform(-3.0, 3.0);

  for (int trial = 0; trial < 200; ++trial) {
    Vec z(nx), w(nx);
    for (int j = 0; j < nx; ++j) {
      z[j] = rng.uniform(-1.0, 2.0);
      w[j] = rng.uniform(-5.0, 5.0);
    }
    double rho = rng.uniform(0.1, 50.0);
    ProxLinearized pl = prox_linearize(model, z, w, rho);
    Vec pt(nx + 2);
    for (int j = 0; j < nx; ++j) pt[j] = static_cast<double>(rng.range(0, 1));
    for (int j = nx; j < nx + 2; ++j) pt[j] = rng.frac();
    // L = c'x + q'y + w'(x - z) + rho/2 ||x - z||^2
    double L = dot(model.lp.obj, pt);
    for (int j = 0; j < nx; ++j) {
      L += w[j] * (pt[j] - z[j]);
      L += 0.5 * rho * (pt[j] - z[j]) * (pt[j] - z[j]);
    }
    // the reported constant is already folded into the model's offset
    double lin = dot(pl.model.lp.obj, pt) + pl.model.lp.obj_offset;
    CHECK(std::abs(lin - L) <= 1e-10 * (1.0 + std::abs(L)));
  }
}

TEST_CASE("prox linearization rejects non-binary first stage") {
  MilpModel model;
  model.lp.obj = {1.0, 1.0};
  model.lp.lb = {0.0, 0.0};
  model.lp.ub = {3.0, 1.0};
  model.kind = {VarKind::Integer, VarKind::Binary};
  CHECK_THROWS_WITH_AS(prox_linearize(model, {0.0, 0.0}, {0.0, 0.0}, 1.0),
                       doctest::Contains("0"), PreconditionError);
}

TEST_CASE("unbounded integer model is reported") {
  MilpModel model;
  model.lp.obj = {-1.0};
  model.lp.lb = {0.0};
  model.lp.ub = {kInf};
  model.kind = {VarKind::Continuous};
  CHECK(solve_milp(model).status == MilpStatus::Unbounded);
}
