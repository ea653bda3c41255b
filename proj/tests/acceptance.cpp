// Acceptance gate: one line per criterion, nonzero exit on any failure.
// Tolerances are pinned here and nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fwph/hedging.hpp"
#include "fwph/io.hpp"
#include "fwph/model.hpp"
#include "fwph/oracle.hpp"
#include "oracles.hpp"

using namespace fwph;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

struct Inst {
  TwoStageProblem p;
  double ld = kNaN;    // exact dual bound by enumeration
  double smip = kNaN;  // extensive-form optimum
  double phi0 = kNaN;  // dual value at zero multipliers
};

GenShape shape_for(std::uint64_t seed) {
  GenShape s;
  s.scenarios = 2 + static_cast<int>(seed % 3);
  s.nx = 3 + static_cast<int>((seed / 7) % 2);
  s.ny = 2 + static_cast<int>((seed / 2) % 2);
  s.y_int = 1 + static_cast<int>(seed % 2);
  return s;
}

std::vector<Inst> build_corpus() {
  std::vector<Inst> out;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Inst in;
    in.p = generate_instance(seed, shape_for(seed));
    in.ld = enumerate_ld(in.p).value;
    in.smip = solve_extensive(in.p).value;
    in.phi0 = lagrangian_value(in.p, DualMultipliers::zeros(in.p)).phi;
    out.push_back(std::move(in));
  }
  return out;
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL",
              detail.c_str());
  if (!pass) ++failures;
}

void report_skip(int id, const std::string& detail) {
  std::printf("criterion %2d: SKIP  %s\n", id, detail.c_str());
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------- criterion 1
// 50 seeds, FW-PH with one inner iteration, alpha in {0, 1}, rho in {1, 10},
// eps = 0, k_max = 500: best bound within relative 1e-4 of the exact dual,
// all 200 runs within 120 seconds combined.
void criterion_1(const std::vector<Inst>& corpus,
                 std::vector<std::vector<IterationRecord>>* fw_traces) {
  const double t_start = now_s();
  int bad = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Inst& in = corpus[i];
    const double target = in.ld - 1e-4 * (1.0 + std::abs(in.ld));
    for (double alpha : {0.0, 1.0}) {
      for (double rho : {1.0, 10.0}) {
        HedgingConfig cfg;
        cfg.rho = rho;
        cfg.alpha = alpha;
        cfg.eps = 0.0;
        cfg.k_max = 500;
        cfg.stop = [target](const IterationRecord& r) {
          return r.best_phi >= target;
        };
        DualMultipliers w0 = DualMultipliers::zeros(in.p);
        RunResult r = run_fwph(in.p, fwph_initialize(in.p, w0), w0, cfg);
        if (fw_traces) fw_traces->push_back(r.trace);
        if (!(r.phi_best >= target)) {
          ++bad;
          if (first_bad.empty())
            first_bad = " first miss: seed " + std::to_string(i) + " rho " +
                        fmt(rho) + " alpha " + fmt(alpha) + " best " +
                        fmt(r.phi_best) + " vs ld " + fmt(in.ld);
        }
      }
    }
  }
  const double elapsed = now_s() - t_start;
  report(1, bad == 0 && elapsed <= 120.0,
         "200 runs, rel tol 1e-4, " + fmt(elapsed) + " s (limit 120)" +
             first_bad);
}

// ---------------------------------------------------------------- criterion 2
// Every reported bound stays below both the exact dual and the optimum
// (relative slack 1e-6), including PH across rho in {0.1, 1, 10, 100}.
void criterion_2(const std::vector<Inst>& corpus,
                 const std::vector<std::vector<IterationRecord>>& fw_traces) {
  int checked = 0, bad = 0;
  auto scan = [&](const std::vector<IterationRecord>& trace, const Inst& in) {
    const double tol = 1e-6 * (1.0 + std::abs(in.smip));
    for (const auto& rec : trace) {
      if (std::isnan(rec.phi)) continue;
      ++checked;
      if (rec.phi > in.ld + tol || rec.phi > in.smip + tol) ++bad;
    }
  };
  for (std::size_t i = 0; i < fw_traces.size(); ++i)
    scan(fw_traces[i], corpus[i / 4]);
  for (std::size_t i = 0; i < 12; ++i) {
    const Inst& in = corpus[i * 4];
    for (double rho : {0.1, 1.0, 10.0, 100.0}) {
      HedgingConfig cfg;
      cfg.rho = rho;
      cfg.eps = 0.0;
      cfg.k_max = 30;
      RunResult r = run_ph(in.p, DualMultipliers::zeros(in.p), cfg);
      scan(r.trace, in);
    }
  }
  report(2, checked > 0 && bad == 0,
         std::to_string(checked) + " bounds checked against ld and optimum, " +
             std::to_string(bad) + " violations (slack 1e-6)");
}

// ---------------------------------------------------------------- criterion 3
// The residual decomposition identity is asserted inside every outer
// iteration (relative 1e-10); any violation throws and fails the run.
void criterion_3(const std::vector<Inst>& corpus) {
  int runs = 0;
  try {
    for (std::size_t i = 0; i < 10; ++i) {
      HedgingConfig cfg;
      cfg.rho = 5.0;
      cfg.eps = 0.0;
      cfg.k_max = 25;
      DualMultipliers w0 = DualMultipliers::zeros(corpus[i].p);
      run_ph(corpus[i].p, w0, cfg);
      run_fwph(corpus[i].p, fwph_initialize(corpus[i].p, w0), w0, cfg);
      runs += 2;
    }
  } catch (const Error& e) {
    report(3, false, std::string("identity assertion tripped: ") + e.what());
    return;
  }
  report(3, true,
         std::to_string(runs) +
             " runs completed with the in-loop identity assert at rel 1e-10");
}

// ---------------------------------------------------------------- criterion 4
// With five inner iterations, any positive inner gap (> 1e-8) forces the
// vertex set to grow, on 20 seeds.
void criterion_4() {
  int checked = 0, bad = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TwoStageProblem p = generate_instance(seed, shape_for(seed));
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
      if (first.status != MilpStatus::Optimal) continue;
      V.add(first.x, VertexTag::MilpVertex);
      testor::Rng rng(seed * 131 + s);
      Vec omega(nx), z(nx), x0(nx);
      for (double& v : omega) v = rng.uniform(-3.0, 3.0);
      for (double& v : z) v = rng.uniform(0.0, 1.0);
      for (double& v : x0) v = rng.uniform(0.0, 1.0);
      SdmResult r =
          run_sdm(V, x0, Vec(p.scenarios[s].num_y(), 0.0), p.first.obj,
                  p.scenarios[s].obj, omega, z, 5.0, 5, 0.0, oracle);
      for (std::size_t t = 1; t < r.gap_trace.size(); ++t) {
        if (r.gap_trace[t] > 1e-8) {
          ++checked;
          if (!(r.vertex_counts[t] > r.vertex_counts[t - 1])) ++bad;
        }
      }
    }
  }
  report(4, checked > 0 && bad == 0,
         std::to_string(checked) + " positive-gap inner steps, " +
             std::to_string(bad) + " without vertex growth");
}

// ---------------------------------------------------------------- criterion 5
// Work accounting: one-inner-iteration FW-PH spends exactly |S| MILP and |S|
// QP solves per outer iteration; PH with a bound solve every iteration spends
// exactly 2|S| MILP solves.
void criterion_5(const std::vector<Inst>& corpus) {
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 5; ++i) {
    const Inst& in = corpus[i];
    const long S = in.p.num_scenarios();
    HedgingConfig cfg;
    cfg.rho = 2.0;
    cfg.eps = 0.0;
    cfg.k_max = 8;
    DualMultipliers w0 = DualMultipliers::zeros(in.p);
    RunResult fw = run_fwph(in.p, fwph_initialize(in.p, w0), w0, cfg);
    long prev_m = 0, prev_q = 0;
    for (const auto& rec : fw.trace) {
      if (rec.milp_solves - prev_m != S || rec.qp_solves - prev_q != S)
        ok = false;
      prev_m = rec.milp_solves;
      prev_q = rec.qp_solves;
    }
    RunResult ph = run_ph(in.p, w0, cfg);
    prev_m = 0;
    for (const auto& rec : ph.trace) {
      if (rec.k == 0) {
        prev_m = rec.milp_solves;
        continue;
      }
      if (rec.milp_solves - prev_m != 2 * S) ok = false;
      prev_m = rec.milp_solves;
    }
  }
  report(5, ok,
         "per-iteration solve counts: |S| MILP + |S| QP (one inner step), "
         "2|S| MILP (PH with bounds every iteration)");
}

// ---------------------------------------------------------------- criterion 6
// One-scenario instances collapse for both algorithms: residual below 1e-9
// within two iterations and the bound equals the optimum at relative 1e-9.
void criterion_6() {
  int bad = 0;
  GenShape shape;
  shape.scenarios = 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TwoStageProblem p = generate_instance(seed, shape);
    const double opt = solve_extensive(p).value;
    const double tol = 1e-9 * (1.0 + std::abs(opt));
    HedgingConfig cfg;
    cfg.rho = 3.0;
    cfg.eps = 1e-9;
    DualMultipliers w0 = DualMultipliers::zeros(p);
    RunResult ph = run_ph(p, w0, cfg);
    RunResult fw = run_fwph(p, fwph_initialize(p, w0), w0, cfg);
    for (const RunResult* r : {&ph, &fw}) {
      if (!(r->final_residual < 1e-9) || r->trace.back().k > 2 ||
          std::abs(r->phi_best - opt) > tol)
        ++bad;
    }
  }
  report(6, bad == 0,
         "10 single-scenario instances, residual < 1e-9 in <= 2 iterations, "
         "bound = optimum at rel 1e-9, " +
             std::to_string(bad) + " misses");
}

// ---------------------------------------------------------------- criterion 7
// The two independent dual oracles agree at relative 1e-5 on all 50
// instances, and both land inside [phi(0) - 1e-6, optimum + 1e-6].
void criterion_7(const std::vector<Inst>& corpus) {
  int bad = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Inst& in = corpus[i];
    const double kv = kelley_ld(in.p).value;
    const double agree_tol = 1e-5 * (1.0 + std::abs(in.ld));
    const double band = 1e-6 * (1.0 + std::abs(in.smip));
    bool ok = std::abs(kv - in.ld) <= agree_tol &&
              in.ld >= in.phi0 - band && in.ld <= in.smip + band &&
              kv >= in.phi0 - band && kv <= in.smip + band;
    if (!ok) {
      ++bad;
      if (first_bad.empty())
        first_bad = " first miss: seed " + std::to_string(i) + " enum " +
                    fmt(in.ld) + " kelley " + fmt(kv);
    }
  }
  report(7, bad == 0,
         "50 instances, oracle agreement rel 1e-5, sandwich slack 1e-6" +
             first_bad);
}

// ---------------------------------------------------------------- criterion 8
// At rho = 100 with a 200-iteration cap, FW-PH closes at least as much gap
// as PH on at least 80% of 20 instances.
void criterion_8(const std::vector<Inst>& corpus) {
  int wins = 0;
  std::printf("  %-10s %14s %14s %14s %14s\n", "instance", "ld", "ph gap%",
              "fwph gap%", "winner");
  for (std::size_t i = 0; i < 20; ++i) {
    const Inst& in = corpus[i];
    HedgingConfig cfg;
    cfg.rho = 100.0;
    cfg.eps = 0.0;
    cfg.k_max = 200;
    DualMultipliers w0 = DualMultipliers::zeros(in.p);
    RunResult ph = run_ph(in.p, w0, cfg);
    RunResult fw = run_fwph(in.p, fwph_initialize(in.p, w0), w0, cfg);
    const double scale = 1.0 + std::abs(in.ld);
    const double gp = 100.0 * std::max(0.0, in.ld - ph.phi_best) / scale;
    const double gf = 100.0 * std::max(0.0, in.ld - fw.phi_best) / scale;
    const bool fw_wins = gf <= gp + 1e-10;
    if (fw_wins) ++wins;
    std::printf("  %-10s %14s %14s %14s %14s\n", in.p.name.c_str(),
                fmt(in.ld).c_str(), fmt(gp).c_str(), fmt(gf).c_str(),
                fw_wins ? "fwph" : "ph");
  }
  report(8, wins >= 16,
         "rho 100, 200-iteration cap: fwph at least ties ph on " +
             std::to_string(wins) + "/20 (need 16)");
}

// ---------------------------------------------------------------- criterion 9
// Independent-reference suites for the two embedded solvers: 120 LPs against
// vertex enumeration with strong-duality certificates and 120 MILPs against
// lattice enumeration, all within 30 seconds.
void criterion_9() {
  const double t_start = now_s();
  int lp_ok = 0, milp_ok = 0, bad = 0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    testor::Rng rng(seed + 9000);
    const int n = static_cast<int>(rng.range(2, 5));
    const int m = static_cast<int>(rng.range(1, 4));
    LinearProgram lp;
    lp.obj.resize(n);
    lp.lb.resize(n);
    lp.ub.resize(n);
    for (int j = 0; j < n; ++j) {
      lp.obj[j] = static_cast<double>(rng.range(-5, 5));
      lp.lb[j] = static_cast<double>(rng.range(-2, 0));
      lp.ub[j] = lp.lb[j] + static_cast<double>(rng.range(1, 4));
    }
    for (int i = 0; i < m; ++i) {
      LinearRow row;
      row.coeffs.resize(n);
      for (int j = 0; j < n; ++j)
        row.coeffs[j] = static_cast<double>(rng.range(-3, 3));
      row.rel = rng.range(0, 4) == 0 ? Relation::GreaterEqual
                                     : Relation::LessEqual;
      row.rhs = static_cast<double>(rng.range(-4, 6));
      lp.rows.push_back(std::move(row));
    }
    LpSolution sol = SimplexSolver().solve(lp);
    auto ref = testor::enumerate_lp_min(lp);
    if (sol.status == LpStatus::Optimal) {
      ++lp_ok;
      if (!ref || std::abs(sol.objective - *ref) > 1e-7 * (1.0 + std::abs(*ref)))
        ++bad;
      Vec rhs(lp.num_rows());
      for (int i = 0; i < lp.num_rows(); ++i) rhs[i] = lp.rows[i].rhs;
      double dual_side = dot(sol.dual, rhs) + dot(sol.reduced_cost, sol.x);
      if (std::abs(sol.objective - dual_side) >
          1e-8 * (1.0 + std::abs(sol.objective)))
        ++bad;
    } else if (ref) {
      ++bad;
    }

    MilpModel mm;
    mm.lp = lp;
    mm.kind.assign(n, VarKind::Continuous);
    for (int j = 0; j < n; ++j)
      if (rng.range(0, 2) != 0) mm.kind[j] = VarKind::Integer;
    MilpSolution ms = solve_milp(mm);
    auto mref = testor::enumerate_milp_min(mm);
    if (ms.status == MilpStatus::Optimal) {
      ++milp_ok;
      if (!mref ||
          std::abs(ms.objective - *mref) > 1e-7 * (1.0 + std::abs(*mref)))
        ++bad;
    } else if (mref) {
      ++bad;
    }
  }
  const double elapsed = now_s() - t_start;
  report(9,
         bad == 0 && lp_ok >= 50 && milp_ok >= 50 && elapsed <= 30.0,
         std::to_string(lp_ok) + " LPs + " + std::to_string(milp_ok) +
             " MILPs against independent enumeration, " +
             std::to_string(bad) + " mismatches, " + fmt(elapsed) +
             " s (limit 30)");
}

// --------------------------------------------------------------- criterion 10
// Stretch benchmark: if the SSLP-5-25-50 SMPS files are present, the FW-PH
// bound must reach -121.6 within 0.05 absolute.
void criterion_10() {
  const char* root = std::getenv("FWPH_TEST_DATA");
  std::string base = std::string(root ? root : ".") + "/sslp/sslp_5_25_50";
  auto slurp = [](const std::string& path, std::string* out) {
    std::ifstream f(path);
    if (!f.good()) return false;
    std::stringstream ss;
    ss << f.rdbuf();
    *out = ss.str();
    return true;
  };
  std::string core, tim, sto;
  if ((!slurp(base + ".cor", &core) && !slurp(base + ".mps", &core)) ||
      !slurp(base + ".tim", &tim) || !slurp(base + ".sto", &sto)) {
    report_skip(10, "SSLP-5-25-50 files not present under " + base + ".*");
    return;
  }
  try {
    TwoStageProblem p = parse_smps(core, tim, sto);
    HedgingConfig cfg;
    cfg.rho = 1.0;
    cfg.eps = 0.0;
    cfg.k_max = 300;
    cfg.time_limit = 300.0;
    DualMultipliers w0 = DualMultipliers::zeros(p);
    RunResult r = run_fwph(p, fwph_initialize(p, w0), w0, cfg);
    report(10, std::abs(r.phi_best - (-121.6)) <= 0.05,
           "sslp_5_25_50 best bound " + fmt(r.phi_best) +
               " vs -121.6 (abs tol 0.05)");
  } catch (const Error& e) {
    report(10, false, std::string("sslp run failed: ") + e.what());
  }
}

}  // namespace

int main() {
  std::printf("building 50-instance corpus with reference values...\n");
  std::vector<Inst> corpus = build_corpus();

  std::vector<std::vector<IterationRecord>> fw_traces;
  criterion_1(corpus, &fw_traces);
  criterion_2(corpus, fw_traces);
  criterion_3(corpus);
  criterion_4();
  criterion_5(corpus);
  criterion_6();
  criterion_7(corpus);
  criterion_8(corpus);
  criterion_9();
  criterion_10();

  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
