#include "fwph/hedging.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fwph/lp.hpp"
#include "fwph/parallel.hpp"

namespace fwph {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Eq-residual consistency: the summed primal+dual squared residuals must
// match ||x_s - z_prev||^2 summed; checked at every outer iteration.
void check_residual_identity(const std::vector<Vec>& x, const Vec& z,
                             const Vec& z_prev, const Vec& p) {
  KahanSum lhs, rhs;
  for (std::size_t s = 0; s < x.size(); ++s) {
    lhs.add(p[s] * (sq_dist(x[s], z) + sq_dist(z, z_prev)));
    rhs.add(p[s] * sq_dist(x[s], z_prev));
  }
  double l = lhs.value(), r = rhs.value();
  if (std::abs(l - r) > 1e-10 * (1.0 + std::abs(r)))
    throw Error("residual identity violated: " + format_double(l) +
                " vs " + format_double(r));
}

MilpLimits sub_limits(const HedgingConfig& cfg, Clock::time_point t0) {
  MilpLimits lim;
  if (cfg.time_limit >= 0.0)
    lim.time_limit = std::max(cfg.time_limit - elapsed_s(t0), 0.01);
  return lim;
}

void check_feas_cond(const std::vector<VertexSet>& V, int nx) {
  // Feasibility LP: exists z and per-scenario convex weights with matching
  // x-projections.
  const int S = static_cast<int>(V.size());
  int na = 0;
  for (const auto& vs : V) na += vs.size();
  LinearProgram lp;
  const int total = na + nx;
  lp.obj.assign(total, 0.0);
  lp.lb.assign(total, 0.0);
  lp.ub.assign(total, kInf);
  for (int j = 0; j < nx; ++j) {
    lp.lb[na + j] = -kInf;
    lp.ub[na + j] = kInf;
  }
  int off = 0;
  for (int s = 0; s < S; ++s) {
    LinearRow conv;
    conv.coeffs.assign(total, 0.0);
    for (int i = 0; i < V[s].size(); ++i) conv.coeffs[off + i] = 1.0;
    conv.rel = Relation::Equal;
    conv.rhs = 1.0;
    lp.rows.push_back(std::move(conv));
    for (int j = 0; j < nx; ++j) {
      LinearRow link;
      link.coeffs.assign(total, 0.0);
      for (int i = 0; i < V[s].size(); ++i)
        link.coeffs[off + i] = V[s].point(i)[j];
      link.coeffs[na + j] = -1.0;
      link.rel = Relation::Equal;
      link.rhs = 0.0;
      lp.rows.push_back(std::move(link));
    }
    off += V[s].size();
  }
  LpSolution sol = SimplexSolver().solve(lp);
  if (sol.status == LpStatus::Infeasible)
    throw PreconditionError(
        "fwph: t_max = 1 requires the initial vertex sets to share a common "
        "first-stage point, but their x-projections have empty intersection");
}

}  // namespace

double residual(const std::vector<Vec>& x, const Vec& z_prev, const Vec& p) {
  KahanSum s;
  for (std::size_t i = 0; i < x.size(); ++i)
    s.add(p[i] * sq_dist(x[i], z_prev));
  return std::sqrt(std::max(s.value(), 0.0));
}

Vec consensus(const std::vector<Vec>& x, const Vec& p) {
  const std::size_t n = x.empty() ? 0 : x[0].size();
  Vec z(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    KahanSum s;
    for (std::size_t i = 0; i < x.size(); ++i) s.add(p[i] * x[i][j]);
    z[j] = s.value();
  }
  return z;
}

DualMultipliers dual_update(const DualMultipliers& omega,
                            const std::vector<Vec>& x, const Vec& z, double rho,
                            const Vec& p, bool recenter) {
  DualMultipliers out = omega;
  const std::size_t S = x.size();
  const std::size_t n = z.size();
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < n; ++j)
      out.omega[s][j] += rho * (x[s][j] - z[j]);
  if (recenter) {
    for (std::size_t j = 0; j < n; ++j) {
      KahanSum avg;
      for (std::size_t s = 0; s < S; ++s) avg.add(p[s] * out.omega[s][j]);
      double a = avg.value();
      if (a != 0.0)
        for (std::size_t s = 0; s < S; ++s) out.omega[s][j] -= a;
    }
  }
  return out;
}

RunResult run_ph(const TwoStageProblem& problem, const DualMultipliers& omega0,
                 const HedgingConfig& config) {
  const int S = problem.num_scenarios();
  const int nx = problem.num_x();
  const Vec p = problem.probabilities();
  if (!problem.pure_binary_first_stage())
    throw PreconditionError(
        "ph: first stage must be pure binary (the proximal subproblem is "
        "linearized exactly via x^2 = x); use fwph for general first stages");
  if (!dual_feasible(omega0, p))
    throw PreconditionError("ph: omega0 violates sum_s p_s omega_s = 0");
  if (!(config.rho > 0.0)) throw PreconditionError("ph: rho must be > 0");
  if (config.k_max < 1) throw PreconditionError("ph: k_max must be >= 1");

  const auto t0 = Clock::now();
  RunResult out;
  out.omega = omega0;
  out.x.assign(S, Vec(nx, 0.0));
  out.y.resize(S);

  std::vector<MilpModel> base(S);
  for (int s = 0; s < S; ++s) base[s] = scenario_milp(problem, s, Vec(nx, 0.0));

  long milp_solves = 0;
  long vertices = 0;  // PH holds no vertex sets

  // Initialization: scenario argmins at omega0, initial bound phi^0.
  {
    std::vector<MilpSolution> sols(S);
    parallel_for(S, config.threads, [&](int s) {
      MilpModel m = base[s];
      for (int j = 0; j < nx; ++j) m.lp.obj[j] += omega0.omega[s][j];
      sols[s] = solve_milp(m, sub_limits(config, t0));
    });
    KahanSum phi0;
    bool exact = true;
    for (int s = 0; s < S; ++s) {
      const auto& sol = sols[s];
      if (sol.status == MilpStatus::Infeasible)
        throw SubproblemError("ph: scenario " + std::to_string(s) +
                              " infeasible");
      if (sol.status == MilpStatus::Unbounded)
        throw SubproblemError("ph: scenario " + std::to_string(s) +
                              " unbounded");
      if (sol.status == MilpStatus::BoundOnly) {
        if (!sol.has_incumbent() || !std::isfinite(sol.dual_bound))
          throw LimitError("ph: scenario " + std::to_string(s) +
                           " hit limits without a usable bound");
        exact = false;
      }
      milp_solves += 1;
      double val = sol.status == MilpStatus::Optimal ? sol.objective
                                                     : sol.dual_bound;
      phi0.add(p[s] * val);
      out.x[s].assign(sol.x.begin(), sol.x.begin() + nx);
      out.y[s].assign(sol.x.begin() + nx, sol.x.end());
    }
    out.phi_final = phi0.value();
    out.phi_best = out.phi_final;
    IterationRecord rec;
    rec.k = 0;
    rec.phi = out.phi_final;
    rec.best_phi = out.phi_best;
    rec.wall_s = elapsed_s(t0);
    rec.milp_solves = milp_solves;
    rec.vertices = vertices;
    if (!exact) rec.flags = "inexact-subproblem";
    out.trace.push_back(rec);
  }

  Vec z_prev = consensus(out.x, p);
  out.omega = dual_update(omega0, out.x, z_prev, config.rho, p, config.recenter);

  out.reason = Termination::IterationLimit;
  for (int k = 1; k <= config.k_max; ++k) {
    if (config.time_limit >= 0.0 && elapsed_s(t0) >= config.time_limit) {
      out.reason = Termination::TimeLimit;
      break;
    }
    const bool want_bound =
        config.bounds_every > 0 && (k % config.bounds_every == 0);
    std::vector<MilpSolution> bound_sols(S), prox_sols(S);
    std::vector<double> prox_const(S, 0.0);
    parallel_for(S, config.threads, [&](int s) {
      if (want_bound) {
        MilpModel m = base[s];
        for (int j = 0; j < nx; ++j) m.lp.obj[j] += out.omega.omega[s][j];
        bound_sols[s] = solve_milp(m, sub_limits(config, t0));
      }
      ProxLinearized pl =
          prox_linearize(base[s], z_prev, out.omega.omega[s], config.rho);
      prox_sols[s] = solve_milp(pl.model, sub_limits(config, t0));
      prox_const[s] = pl.constant;
    });

    std::string flags;
    if (want_bound) {
      KahanSum phik;
      bool exact = true;
      for (int s = 0; s < S; ++s) {
        const auto& sol = bound_sols[s];
        if (sol.status == MilpStatus::Infeasible ||
            sol.status == MilpStatus::Unbounded)
          throw SubproblemError("ph: scenario " + std::to_string(s) +
                                " bound subproblem failed");
        milp_solves += 1;
        if (sol.status == MilpStatus::BoundOnly) {
          if (!std::isfinite(sol.dual_bound))
            throw LimitError("ph: scenario " + std::to_string(s) +
                             " hit limits without a usable bound");
          exact = false;
          phik.add(p[s] * sol.dual_bound);
        } else {
          phik.add(p[s] * sol.objective);
        }
      }
      out.phi_final = phik.value();
      out.phi_best = std::max(out.phi_best, out.phi_final);
      if (!exact) flags = "inexact-subproblem";
    } else {
      out.phi_final = kNaN;
    }

    for (int s = 0; s < S; ++s) {
      const auto& sol = prox_sols[s];
      if (sol.status == MilpStatus::Infeasible ||
          sol.status == MilpStatus::Unbounded)
        throw SubproblemError("ph: scenario " + std::to_string(s) +
                              " proximal subproblem failed");
      milp_solves += 1;
      if (sol.status == MilpStatus::BoundOnly) {
        if (!sol.has_incumbent())
          throw LimitError("ph: scenario " + std::to_string(s) +
                           " proximal solve hit limits without incumbent");
        if (!flags.empty()) flags += ",";
        flags += "inexact-prox";
      }
      out.x[s].assign(sol.x.begin(), sol.x.begin() + nx);
      out.y[s].assign(sol.x.begin() + nx, sol.x.end());
    }

    Vec z = consensus(out.x, p);
    double res = residual(out.x, z_prev, p);
    check_residual_identity(out.x, z, z_prev, p);

    IterationRecord rec;
    rec.k = k;
    rec.phi = out.phi_final;
    rec.best_phi = out.phi_best;
    rec.residual = res;
    rec.wall_s = elapsed_s(t0);
    rec.milp_solves = milp_solves;
    rec.vertices = vertices;
    rec.flags = flags;
    out.trace.push_back(rec);
    out.final_residual = res;
    out.z = z;

    if (config.stop && config.stop(rec)) {
      out.reason = Termination::Stopped;
      return out;
    }
    if (res < config.eps) {
      out.reason = Termination::Converged;
      return out;
    }
    out.omega = dual_update(out.omega, out.x, z, config.rho, p, config.recenter);
    z_prev = std::move(z);
  }
  out.z = z_prev;
  return out;
}

FwphInit fwph_initialize(const TwoStageProblem& problem,
                         const DualMultipliers& omega0, int threads) {
  const int S = problem.num_scenarios();
  const int nx = problem.num_x();
  const Vec p = problem.probabilities();
  if (!dual_feasible(omega0, p))
    throw PreconditionError("fwph: omega0 violates sum_s p_s omega_s = 0");

  FwphInit init;
  init.x0.resize(S);
  init.y0.resize(S);
  init.V.reserve(S);
  for (int s = 0; s < S; ++s)
    init.V.emplace_back(nx, problem.scenarios[s].num_y());

  std::vector<MilpSolution> sols(S);
  parallel_for(S, threads, [&](int s) {
    MilpModel m = scenario_milp(problem, s, omega0.omega[s]);
    sols[s] = solve_milp(m);
  });
  for (int s = 0; s < S; ++s) {
    const auto& sol = sols[s];
    if (sol.status == MilpStatus::Infeasible)
      throw SubproblemError("fwph: scenario " + std::to_string(s) +
                            " infeasible");
    if (sol.status == MilpStatus::Unbounded)
      throw SubproblemError("fwph: scenario " + std::to_string(s) +
                            " unbounded");
    if (sol.status != MilpStatus::Optimal)
      throw LimitError("fwph: initialization solve truncated");
    init.x0[s].assign(sol.x.begin(), sol.x.begin() + nx);
    init.y0[s].assign(sol.x.begin() + nx, sol.x.end());
    init.V[s].add(sol.x, VertexTag::MilpVertex);
  }

  // Shared recourse point: re-solve every other scenario with x fixed to
  // scenario 0's first stage, inserting (x_0^0, ybar_s).
  const Vec& x_anchor = init.x0[0];
  std::vector<MilpSolution> rec_sols(S);
  parallel_for(S - 1, threads, [&](int i) {
    int s = i + 1;
    MilpModel m = scenario_milp(problem, s, Vec(nx, 0.0));
    for (int j = 0; j < nx; ++j) {
      m.lp.obj[j] = 0.0;
      m.lp.lb[j] = x_anchor[j];
      m.lp.ub[j] = x_anchor[j];
    }
    rec_sols[s] = solve_milp(m);
  });
  KahanSum ub;
  ub.add(dot(problem.first.obj, x_anchor));
  ub.add(p[0] * dot(problem.scenarios[0].obj, init.y0[0]));
  for (int s = 1; s < S; ++s) {
    const auto& sol = rec_sols[s];
    if (sol.status != MilpStatus::Optimal)
      throw PreconditionError(
          "fwph: recourse assumption violated: scenario " +
          std::to_string(s) +
          " admits no second-stage solution for the shared first-stage point");
    Vec point = x_anchor;
    point.insert(point.end(), sol.x.begin() + nx, sol.x.end());
    init.V[s].add(point, VertexTag::InitFeasible);
    Vec ybar(sol.x.begin() + nx, sol.x.end());
    ub.add(p[s] * dot(problem.scenarios[s].obj, ybar));
  }
  init.upper_bound = ub.value();
  return init;
}

RunResult run_fwph(const TwoStageProblem& problem, FwphInit init,
                   const DualMultipliers& omega0, const HedgingConfig& config) {
  const int S = problem.num_scenarios();
  const int nx = problem.num_x();
  const Vec p = problem.probabilities();
  if (!dual_feasible(omega0, p))
    throw PreconditionError("fwph: omega0 violates sum_s p_s omega_s = 0");
  if (!(config.rho > 0.0)) throw PreconditionError("fwph: rho must be > 0");
  if (config.k_max < 1 || config.t_max < 1)
    throw PreconditionError("fwph: k_max and t_max must be >= 1");
  if (config.t_max == 1) check_feas_cond(init.V, nx);

  const auto t0 = Clock::now();
  RunResult out;
  out.x = std::move(init.x0);
  out.y = std::move(init.y0);
  std::vector<VertexSet> V = std::move(init.V);

  std::vector<MilpModel> scratch(S);
  for (int s = 0; s < S; ++s)
    scratch[s] = scenario_milp(problem, s, Vec(nx, 0.0));

  Vec z_prev = consensus(out.x, p);
  out.omega = dual_update(omega0, out.x, z_prev, config.rho, p, config.recenter);

  long milp_solves = 0, qp_solves = 0;
  out.reason = Termination::IterationLimit;

  for (int k = 1; k <= config.k_max; ++k) {
    if (config.time_limit >= 0.0 && elapsed_s(t0) >= config.time_limit) {
      out.reason = Termination::TimeLimit;
      break;
    }
    std::vector<SdmResult> sdm(S);
    parallel_for(S, config.threads, [&](int s) {
      Vec x_tilde(nx);
      for (int j = 0; j < nx; ++j)
        x_tilde[j] =
            (1.0 - config.alpha) * z_prev[j] + config.alpha * out.x[s][j];
      MilpLimits lim = sub_limits(config, t0);
      ScenarioMilpFn oracle = [&](const Vec& w_hat) {
        for (int j = 0; j < nx; ++j)
          scratch[s].lp.obj[j] = problem.first.obj[j] + w_hat[j];
        return solve_milp(scratch[s], lim);
      };
      try {
        sdm[s] = run_sdm(V[s], x_tilde, out.y[s], problem.first.obj,
                         problem.scenarios[s].obj, out.omega.omega[s], z_prev,
                         config.rho, config.t_max, config.tau, oracle);
      } catch (const Error& e) {
        throw SubproblemError("fwph: scenario " + std::to_string(s) + ": " +
                              e.what());
      }
    });

    KahanSum phik;
    bool exact = true;
    long vertices = 0;
    for (int s = 0; s < S; ++s) {
      phik.add(p[s] * sdm[s].phi_s);
      exact = exact && sdm[s].phi_exact;
      milp_solves += sdm[s].milp_solves;
      qp_solves += sdm[s].qp_solves;
      out.x[s] = sdm[s].x;
      out.y[s] = sdm[s].y;
      vertices += V[s].size();
    }
    out.phi_final = phik.value();
    out.phi_best = std::max(out.phi_best, out.phi_final);

    Vec z = consensus(out.x, p);
    double res = residual(out.x, z_prev, p);
    check_residual_identity(out.x, z, z_prev, p);

    IterationRecord rec;
    rec.k = k;
    rec.phi = out.phi_final;
    rec.best_phi = out.phi_best;
    rec.residual = res;
    rec.wall_s = elapsed_s(t0);
    rec.milp_solves = milp_solves;
    rec.qp_solves = qp_solves;
    rec.vertices = vertices;
    if (!exact) rec.flags = "inexact-subproblem";
    out.trace.push_back(rec);
    out.final_residual = res;
    out.z = z;

    if (config.stop && config.stop(rec)) {
      out.reason = Termination::Stopped;
      return out;
    }
    if (res < config.eps) {
      out.reason = Termination::Converged;
      return out;
    }
    out.omega = dual_update(out.omega, out.x, z, config.rho, p, config.recenter);
    z_prev = std::move(z);
  }
  if (out.z.empty()) out.z = z_prev;
  return out;
}

}  // namespace fwph
