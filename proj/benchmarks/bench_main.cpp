#include <benchmark/benchmark.h>

#include <random>

#include "fwph/fwcore.hpp"
#include "fwph/hedging.hpp"
#include "fwph/io.hpp"
#include "fwph/model.hpp"

using namespace fwph;

namespace {

LinearProgram bench_lp(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto coef = [&] { return static_cast<double>(rng() % 11) - 5.0; };
  LinearProgram lp;
  lp.obj.resize(n);
  lp.lb.assign(n, 0.0);
  lp.ub.assign(n, 4.0);
  for (int j = 0; j < n; ++j) lp.obj[j] = coef();
  for (int i = 0; i < m; ++i) {
    LinearRow row;
    row.coeffs.resize(n);
    for (int j = 0; j < n; ++j) row.coeffs[j] = coef();
    row.rel = Relation::LessEqual;
    row.rhs = 5.0 + static_cast<double>(rng() % 10);
    lp.rows.push_back(std::move(row));
  }
  return lp;
}

void BM_lp_solve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  LinearProgram lp = bench_lp(n, n / 2, 7);
  SimplexSolver solver;
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(lp));
}
BENCHMARK(BM_lp_solve)->Arg(8)->Arg(16)->Arg(32);

void BM_milp_solve(benchmark::State& state) {
  MilpModel model;
  model.lp = bench_lp(static_cast<int>(state.range(0)), 4, 11);
  model.kind.assign(model.lp.num_vars(), VarKind::Integer);
  for (auto _ : state) benchmark::DoNotOptimize(solve_milp(model));
}
BENCHMARK(BM_milp_solve)->Arg(6)->Arg(10);

void BM_simplex_projection(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  Vec v(n);
  for (double& x : v) x = static_cast<double>(rng() % 1000) / 100.0 - 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(project_to_simplex(v));
}
BENCHMARK(BM_simplex_projection)->Arg(16)->Arg(256);

void BM_master_qp(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const int nx = 6, ny = 4;
  std::mt19937_64 rng(5);
  auto frac = [&] { return static_cast<double>(rng() % 1000) / 1000.0; };
  VertexSet V(nx, ny);
  for (int i = 0; i < K; ++i) {
    Vec pt(nx + ny);
    for (double& x : pt) x = frac();
    V.add(pt, VertexTag::MilpVertex, 0.0);
  }
  Vec cx(nx), cy(ny), z(nx), w(nx);
  for (double& x : cx) x = frac() * 4.0 - 2.0;
  for (double& x : cy) x = frac() * 4.0 - 2.0;
  for (double& x : z) x = frac();
  for (double& x : w) x = frac() * 4.0 - 2.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_master_qp(V, cx, cy, z, w, 5.0));
}
BENCHMARK(BM_master_qp)->Arg(4)->Arg(16)->Arg(64);

void BM_fwph_iteration(benchmark::State& state) {
  GenShape shape;
  shape.scenarios = static_cast<int>(state.range(0));
  TwoStageProblem p = generate_instance(1, shape);
  DualMultipliers w0 = DualMultipliers::zeros(p);
  HedgingConfig cfg;
  cfg.rho = 5.0;
  cfg.eps = 0.0;
  cfg.k_max = 10;
  for (auto _ : state) {
    RunResult r = run_fwph(p, fwph_initialize(p, w0), w0, cfg);
    benchmark::DoNotOptimize(r.phi_best);
  }
  state.SetItemsProcessed(state.iterations() * cfg.k_max);
}
BENCHMARK(BM_fwph_iteration)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
