#include "fwph/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "fwph/lp.hpp"

namespace fwph {

namespace {

constexpr double kFeasTol = 1e-9;

bool row_holds(double lhs, Relation rel, double rhs, double scale) {
  double tol = kFeasTol * (1.0 + scale);
  switch (rel) {
    case Relation::LessEqual: return lhs <= rhs + tol;
    case Relation::Equal: return std::abs(lhs - rhs) <= tol;
    case Relation::GreaterEqual: return lhs >= rhs - tol;
  }
  return false;
}

struct IntGrid {
  std::vector<int> idx;      // positions of integral variables
  std::vector<long> lo, hi;  // inclusive integer ranges
  long combinations = 1;
};

IntGrid integral_grid(const std::vector<VarKind>& kind, const Vec& lb,
                      const Vec& ub, const char* what) {
  IntGrid g;
  for (std::size_t j = 0; j < kind.size(); ++j) {
    if (kind[j] == VarKind::Continuous) continue;
    if (!std::isfinite(lb[j]) || !std::isfinite(ub[j]))
      throw PreconditionError(std::string("enumerate_ld: ") + what +
                              " variable " + std::to_string(j) +
                              " is integral but unbounded");
    long lo = static_cast<long>(std::ceil(lb[j] - kFeasTol));
    long hi = static_cast<long>(std::floor(ub[j] + kFeasTol));
    if (lo > hi) g.combinations = 0;
    g.idx.push_back(static_cast<int>(j));
    g.lo.push_back(lo);
    g.hi.push_back(hi);
    if (g.combinations > 0) {
      long span = hi - lo + 1;
      if (g.combinations > (1L << 40) / std::max(span, 1L))
        throw LimitError("enumerate_ld: integral range too large");
      g.combinations *= span;
    }
  }
  return g;
}

// Visits every integral assignment; vals must be preloaded with a feasible
// continuous template (bounds already applied).
template <typename Fn>
void for_each_assignment(const IntGrid& g, Vec& vals, const Fn& fn) {
  if (g.combinations == 0) return;
  std::vector<long> cur(g.lo);
  for (;;) {
    for (std::size_t k = 0; k < g.idx.size(); ++k)
      vals[g.idx[k]] = static_cast<double>(cur[k]);
    fn();
    std::size_t k = 0;
    for (; k < cur.size(); ++k) {
      if (cur[k] < g.hi[k]) {
        ++cur[k];
        break;
      }
      cur[k] = g.lo[k];
    }
    if (k == cur.size()) break;
    if (cur.empty()) break;
  }
}

}  // namespace

OracleResult enumerate_ld(const TwoStageProblem& problem, long point_budget) {
  const int S = problem.num_scenarios();
  const int nx = problem.num_x();
  const Vec p = problem.probabilities();
  for (int j = 0; j < nx; ++j)
    if (problem.first.kind[j] == VarKind::Continuous)
      throw PreconditionError(
          "enumerate_ld: requires a purely integral first stage (variable " +
          std::to_string(j) + " is continuous)");

  IntGrid xgrid =
      integral_grid(problem.first.kind, problem.first.lb, problem.first.ub,
                    "first-stage");
  if (xgrid.combinations == 0)
    throw SubproblemError("enumerate_ld: empty first-stage lattice");

  // Feasible first-stage lattice points.
  std::vector<Vec> xs;
  {
    Vec xv(nx, 0.0);
    for_each_assignment(xgrid, xv, [&] {
      bool ok = true;
      for (int j = 0; j < nx && ok; ++j)
        ok = xv[j] >= problem.first.lb[j] - kFeasTol &&
             xv[j] <= problem.first.ub[j] + kFeasTol;
      for (const auto& row : problem.first.rows) {
        if (!ok) break;
        double lhs = dot(row.coeffs, xv);
        ok = row_holds(lhs, row.rel, row.rhs, norm_inf(row.coeffs));
      }
      if (ok) xs.push_back(xv);
    });
  }
  if (xs.empty()) throw SubproblemError("enumerate_ld: X has no lattice point");

  long points_total = 0;
  std::vector<std::vector<Vec>> pts(S);  // per scenario, (x,y) points
  for (int s = 0; s < S; ++s) {
    const ScenarioData& sc = problem.scenarios[s];
    const int ny = sc.num_y();
    IntGrid ygrid = integral_grid(sc.y_kind, sc.y_lb, sc.y_ub, "second-stage");
    std::vector<int> ycont;
    for (int j = 0; j < ny; ++j)
      if (sc.y_kind[j] == VarKind::Continuous) ycont.push_back(j);

    for (const Vec& xv : xs) {
      Vec yv(ny, 0.0);
      for (int j : ycont) {
        double v = std::isfinite(sc.y_lb[j]) ? sc.y_lb[j] : 0.0;
        yv[j] = std::clamp(v, sc.y_lb[j], sc.y_ub[j]);
      }
      for_each_assignment(ygrid, yv, [&] {
        if (++points_total > point_budget)
          throw LimitError("enumerate_ld: point budget exceeded");
        if (ycont.empty()) {
          bool ok = true;
          for (int r = 0; r < sc.num_rows() && ok; ++r) {
            double lhs = dot(sc.T[r], xv) + dot(sc.W[r], yv);
            ok = row_holds(lhs, sc.row_rel[r], sc.rhs[r],
                           norm_inf(sc.T[r]) + norm_inf(sc.W[r]));
          }
          if (ok) {
            Vec pt = xv;
            pt.insert(pt.end(), yv.begin(), yv.end());
            pts[s].push_back(std::move(pt));
          }
          return;
        }
        // Continuous completion: min q' y_cont over the induced slice.
        LinearProgram lp;
        const int nc = static_cast<int>(ycont.size());
        lp.obj.resize(nc);
        lp.lb.resize(nc);
        lp.ub.resize(nc);
        for (int k = 0; k < nc; ++k) {
          lp.obj[k] = sc.obj[ycont[k]];
          lp.lb[k] = sc.y_lb[ycont[k]];
          lp.ub[k] = sc.y_ub[ycont[k]];
        }
        for (int r = 0; r < sc.num_rows(); ++r) {
          LinearRow row;
          row.coeffs.resize(nc);
          for (int k = 0; k < nc; ++k) row.coeffs[k] = sc.W[r][ycont[k]];
          row.rel = sc.row_rel[r];
          double fixed = dot(sc.T[r], xv);
          for (int j = 0; j < ny; ++j)
            if (sc.y_kind[j] != VarKind::Continuous) fixed += sc.W[r][j] * yv[j];
          row.rhs = sc.rhs[r] - fixed;
          lp.rows.push_back(std::move(row));
        }
        LpSolution sol = SimplexSolver().solve(lp);
        if (sol.status == LpStatus::Infeasible) return;
        if (sol.status != LpStatus::Optimal)
          throw SubproblemError("enumerate_ld: scenario " + std::to_string(s) +
                                " continuous completion is unbounded");
        Vec pt = xv;
        pt.insert(pt.end(), yv.begin(), yv.end());
        for (int k = 0; k < nc; ++k) pt[nx + ycont[k]] = sol.x[k];
        pts[s].push_back(std::move(pt));
      });
    }
    if (pts[s].empty())
      throw SubproblemError("enumerate_ld: scenario " + std::to_string(s) +
                            " has no feasible point");
  }

  // LD LP over per-scenario convex weights with a shared first stage.
  long na = 0;
  for (const auto& v : pts) na += static_cast<long>(v.size());
  const int total = static_cast<int>(na) + nx;
  LinearProgram lp;
  lp.obj.assign(total, 0.0);
  lp.lb.assign(total, 0.0);
  lp.ub.assign(total, kInf);
  for (int j = 0; j < nx; ++j) {
    lp.lb[static_cast<int>(na) + j] = -kInf;
    lp.ub[static_cast<int>(na) + j] = kInf;
  }
  int off = 0;
  for (int s = 0; s < S; ++s) {
    const ScenarioData& sc = problem.scenarios[s];
    for (std::size_t i = 0; i < pts[s].size(); ++i) {
      const Vec& pt = pts[s][i];
      KahanSum v;
      for (int j = 0; j < nx; ++j) v.add(problem.first.obj[j] * pt[j]);
      for (int j = 0; j < sc.num_y(); ++j) v.add(sc.obj[j] * pt[nx + j]);
      lp.obj[off + static_cast<int>(i)] = p[s] * v.value();
    }
    LinearRow conv;
    conv.coeffs.assign(total, 0.0);
    for (std::size_t i = 0; i < pts[s].size(); ++i)
      conv.coeffs[off + static_cast<int>(i)] = 1.0;
    conv.rel = Relation::Equal;
    conv.rhs = 1.0;
    lp.rows.push_back(std::move(conv));
    for (int j = 0; j < nx; ++j) {
      LinearRow link;
      link.coeffs.assign(total, 0.0);
      for (std::size_t i = 0; i < pts[s].size(); ++i)
        link.coeffs[off + static_cast<int>(i)] = pts[s][i][j];
      link.coeffs[static_cast<int>(na) + j] = -1.0;
      link.rel = Relation::Equal;
      link.rhs = 0.0;
      lp.rows.push_back(std::move(link));
    }
    off += static_cast<int>(pts[s].size());
  }
  LpSolution sol = SimplexSolver().solve(lp);
  if (sol.status != LpStatus::Optimal)
    throw SubproblemError("enumerate_ld: dual LP did not solve to optimality");

  OracleResult out;
  out.value = sol.objective;
  out.method = OracleMethod::Enumeration;
  out.iterations = points_total;
  out.certificate = "points=" + std::to_string(na) +
                    ";lp_rows=" + std::to_string(lp.num_rows());
  return out;
}

OracleResult kelley_ld(const TwoStageProblem& problem,
                       const KelleyOptions& opts) {
  const int S = problem.num_scenarios();
  const int nx = problem.num_x();
  const Vec p = problem.probabilities();

  double box = 1e3 * (1.0 + norm_inf(problem.first.obj));
  int expansions = 0;
  double ub_before_expand = kNaN;  // detects expansions that change nothing

  // Columns: omega (S*nx), then theta (S). Cut rows accumulate.
  const int n_omega = S * nx;
  const int total = n_omega + S;
  LinearProgram lp;
  lp.obj.assign(total, 0.0);
  for (int s = 0; s < S; ++s) lp.obj[n_omega + s] = -p[s];
  lp.lb.assign(total, -box);
  lp.ub.assign(total, box);
  for (int s = 0; s < S; ++s) {
    lp.lb[n_omega + s] = -kInf;
    lp.ub[n_omega + s] = kInf;
  }
  for (int j = 0; j < nx; ++j) {
    LinearRow feas;
    feas.coeffs.assign(total, 0.0);
    for (int s = 0; s < S; ++s) feas.coeffs[s * nx + j] = p[s];
    feas.rel = Relation::Equal;
    feas.rhs = 0.0;
    lp.rows.push_back(std::move(feas));
  }

  DualMultipliers omega;
  omega.omega.assign(S, Vec(nx, 0.0));
  double best = -kInf;
  double ub = kInf;
  OracleResult out;
  out.method = OracleMethod::Kelley;

  for (int it = 0; it < opts.max_cuts; ++it) {
    LagrangianValue lv = lagrangian_value(problem, omega, {}, opts.threads);
    if (!lv.exact) throw LimitError("kelley_ld: inexact scenario solve");
    best = std::max(best, lv.phi);
    for (int s = 0; s < S; ++s) {
      // theta_s - x_hat . omega_s <= phi_s(omega_hat) - x_hat . omega_hat_s
      LinearRow cut;
      cut.coeffs.assign(total, 0.0);
      KahanSum rhs;
      rhs.add(lv.argmins[s].objective);
      for (int j = 0; j < nx; ++j) {
        double xh = lv.argmins[s].x[j];
        cut.coeffs[s * nx + j] = -xh;
        rhs.add(-xh * omega.omega[s][j]);
      }
      cut.coeffs[n_omega + s] = 1.0;
      cut.rel = Relation::LessEqual;
      cut.rhs = rhs.value();
      lp.rows.push_back(std::move(cut));
    }
    ++out.iterations;

    LpSolution sol = SimplexSolver().solve(lp);
    if (sol.status != LpStatus::Optimal)
      throw SubproblemError("kelley_ld: master LP did not solve");
    ub = -sol.objective;

    bool box_active = false;
    for (int c = 0; c < n_omega && !box_active; ++c)
      box_active = std::abs(sol.x[c]) >= box - 1e-6 * (1.0 + box);

    double gap = ub - best;
    if (gap <= opts.tol * (1.0 + std::abs(best))) {
      bool stalled = std::isfinite(ub_before_expand) &&
                     ub <= ub_before_expand + opts.tol * (1.0 + std::abs(best));
      if (!box_active || stalled || expansions >= 6) {
        out.value = best;
        out.gap = gap;
        out.certificate = "cuts=" + std::to_string(out.iterations * S) +
                          ";box=" + format_double(box);
        return out;
      }
      box *= 10.0;
      ++expansions;
      ub_before_expand = ub;
      for (int c = 0; c < n_omega; ++c) {
        lp.lb[c] = -box;
        lp.ub[c] = box;
      }
    }
    for (int s = 0; s < S; ++s)
      for (int j = 0; j < nx; ++j) omega.omega[s][j] = sol.x[s * nx + j];
  }
  throw LimitError("kelley_ld: cut budget exhausted before convergence");
}

OracleResult solve_extensive(const TwoStageProblem& problem,
                             const MilpLimits& limits) {
  MilpModel ef = build_extensive_form(problem);
  MilpSolution sol = solve_milp(ef, limits);
  if (sol.status == MilpStatus::Infeasible)
    throw SubproblemError("solve_extensive: problem infeasible");
  if (sol.status == MilpStatus::Unbounded)
    throw SubproblemError("solve_extensive: problem unbounded");
  if (sol.status != MilpStatus::Optimal)
    throw LimitError("solve_extensive: limits hit before optimality");
  OracleResult out;
  out.value = sol.objective;
  out.method = OracleMethod::ExtensiveForm;
  out.iterations = sol.nodes;
  out.certificate = "nodes=" + std::to_string(sol.nodes);
  return out;
}

}  // namespace fwph
