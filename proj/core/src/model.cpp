#include "fwph/model.hpp"

#include <algorithm>
#include <cmath>

#include "fwph/parallel.hpp"

namespace fwph {

Vec TwoStageProblem::probabilities() const {
  Vec p(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) p[s] = scenarios[s].prob;
  return p;
}

bool TwoStageProblem::pure_binary_first_stage() const {
  for (VarKind k : first.kind)
    if (k != VarKind::Binary) return false;
  return true;
}

void TwoStageProblem::normalize_relations() {
  for (auto& row : first.rows) {
    if (row.rel == Relation::GreaterEqual) {
      for (double& v : row.coeffs) v = -v;
      row.rhs = -row.rhs;
      row.rel = Relation::LessEqual;
    }
  }
  for (auto& sc : scenarios) {
    for (int i = 0; i < sc.num_rows(); ++i) {
      if (sc.row_rel[i] == Relation::GreaterEqual) {
        for (double& v : sc.T[i]) v = -v;
        for (double& v : sc.W[i]) v = -v;
        sc.rhs[i] = -sc.rhs[i];
        sc.row_rel[i] = Relation::LessEqual;
      }
    }
  }
}

ValidationReport validate(const TwoStageProblem& problem) {
  ValidationReport rep;
  auto err = [&](const std::string& m) { rep.errors.push_back(m); };
  auto warn = [&](const std::string& m) { rep.warnings.push_back(m); };

  const int nx = problem.num_x();
  if (nx < 1) err("first stage has no variables");
  const auto& fs = problem.first;
  if (static_cast<int>(fs.lb.size()) != nx ||
      static_cast<int>(fs.ub.size()) != nx ||
      static_cast<int>(fs.kind.size()) != nx)
    err("first-stage bound/integrality arrays do not match variable count");
  else {
    for (int j = 0; j < nx; ++j) {
      if (fs.lb[j] > fs.ub[j])
        err("first-stage variable " + std::to_string(j) + " has lb > ub");
      if (fs.kind[j] == VarKind::Binary &&
          (fs.lb[j] < -1e-12 || fs.ub[j] > 1.0 + 1e-12))
        err("binary first-stage variable " + std::to_string(j) +
            " has bounds outside [0,1]");
      if (fs.kind[j] != VarKind::Continuous &&
          (!std::isfinite(fs.lb[j]) || !std::isfinite(fs.ub[j])))
        err("integer first-stage variable " + std::to_string(j) +
            " lacks finite bounds (bounded K_s required)");
      if (fs.kind[j] == VarKind::Continuous &&
          (!std::isfinite(fs.lb[j]) || !std::isfinite(fs.ub[j])))
        warn("continuous first-stage variable " + std::to_string(j) +
             " is unbounded; K_s boundedness is not guaranteed");
    }
  }
  for (std::size_t i = 0; i < fs.rows.size(); ++i)
    if (static_cast<int>(fs.rows[i].coeffs.size()) != nx)
      err("first-stage row " + std::to_string(i) + " has wrong width");

  if (problem.scenarios.empty()) err("no scenarios");
  KahanSum psum;
  for (int s = 0; s < problem.num_scenarios(); ++s) {
    const auto& sc = problem.scenarios[s];
    const std::string tag = "scenario " + std::to_string(s);
    if (!(sc.prob > 0.0)) err(tag + " has non-positive probability");
    psum.add(sc.prob);
    const int ny = sc.num_y();
    const int m = sc.num_rows();
    if (static_cast<int>(sc.y_lb.size()) != ny ||
        static_cast<int>(sc.y_ub.size()) != ny ||
        static_cast<int>(sc.y_kind.size()) != ny)
      err(tag + ": second-stage bound/integrality arrays mismatch");
    if (static_cast<int>(sc.T.size()) != m ||
        static_cast<int>(sc.W.size()) != m ||
        static_cast<int>(sc.row_rel.size()) != m)
      err(tag + ": row arrays do not match rhs length");
    else {
      for (int i = 0; i < m; ++i) {
        if (static_cast<int>(sc.T[i].size()) != nx)
          err(tag + ": T row " + std::to_string(i) +
              " column count != n_x");
        if (static_cast<int>(sc.W[i].size()) != ny)
          err(tag + ": W row " + std::to_string(i) +
              " column count != n_y");
      }
    }
    for (int j = 0; j < ny && j < static_cast<int>(sc.y_lb.size()); ++j) {
      if (sc.y_lb[j] > sc.y_ub[j])
        err(tag + ": second-stage variable " + std::to_string(j) +
            " has lb > ub");
      if (sc.y_kind[j] != VarKind::Continuous &&
          (!std::isfinite(sc.y_lb[j]) || !std::isfinite(sc.y_ub[j])))
        err(tag + ": integer second-stage variable " + std::to_string(j) +
            " lacks finite bounds (bounded K_s required)");
      if (sc.y_kind[j] == VarKind::Continuous &&
          (!std::isfinite(sc.y_lb[j]) || !std::isfinite(sc.y_ub[j])))
        warn(tag + ": continuous second-stage variable " + std::to_string(j) +
             " is unbounded; K_s boundedness is not guaranteed");
      if (sc.y_kind[j] == VarKind::Binary &&
          (sc.y_lb[j] < -1e-12 || sc.y_ub[j] > 1.0 + 1e-12))
        err(tag + ": binary second-stage variable " + std::to_string(j) +
            " has bounds outside [0,1]");
    }
  }
  if (!problem.scenarios.empty() && std::abs(psum.value() - 1.0) > 1e-12)
    err("probabilities sum != 1 (got " + format_double(psum.value()) + ")");
  return rep;
}

DualMultipliers DualMultipliers::zeros(const TwoStageProblem& p) {
  DualMultipliers d;
  d.omega.assign(p.num_scenarios(), Vec(p.num_x(), 0.0));
  return d;
}

bool dual_feasible(const DualMultipliers& omega, const Vec& p, double tol) {
  if (omega.omega.size() != p.size()) return false;
  if (omega.omega.empty()) return true;
  const std::size_t nx = omega.omega[0].size();
  double max_norm = 0.0;
  Vec agg(nx, 0.0);
  for (std::size_t j = 0; j < nx; ++j) {
    KahanSum s;
    for (std::size_t k = 0; k < p.size(); ++k) s.add(p[k] * omega.omega[k][j]);
    agg[j] = s.value();
  }
  for (const auto& w : omega.omega) max_norm = std::max(max_norm, norm_inf(w));
  return norm_inf(agg) <= tol * (1.0 + max_norm);
}

MilpModel build_extensive_form(const TwoStageProblem& problem) {
  const int nx = problem.num_x();
  const int S = problem.num_scenarios();
  int total = nx;
  for (const auto& sc : problem.scenarios) total += sc.num_y();

  MilpModel ef;
  ef.lp.obj.assign(total, 0.0);
  ef.lp.lb.assign(total, 0.0);
  ef.lp.ub.assign(total, 0.0);
  ef.kind.assign(total, VarKind::Continuous);

  for (int j = 0; j < nx; ++j) {
    ef.lp.obj[j] = problem.first.obj[j];
    ef.lp.lb[j] = problem.first.lb[j];
    ef.lp.ub[j] = problem.first.ub[j];
    ef.kind[j] = problem.first.kind[j];
  }
  int off = nx;
  for (int s = 0; s < S; ++s) {
    const auto& sc = problem.scenarios[s];
    for (int j = 0; j < sc.num_y(); ++j) {
      ef.lp.obj[off + j] = sc.prob * sc.obj[j];
      ef.lp.lb[off + j] = sc.y_lb[j];
      ef.lp.ub[off + j] = sc.y_ub[j];
      ef.kind[off + j] = sc.y_kind[j];
    }
    off += sc.num_y();
  }

  for (const auto& row : problem.first.rows) {
    LinearRow r;
    r.coeffs.assign(total, 0.0);
    std::copy(row.coeffs.begin(), row.coeffs.end(), r.coeffs.begin());
    r.rel = row.rel;
    r.rhs = row.rhs;
    ef.lp.rows.push_back(std::move(r));
  }
  off = nx;
  for (int s = 0; s < S; ++s) {
    const auto& sc = problem.scenarios[s];
    for (int i = 0; i < sc.num_rows(); ++i) {
      LinearRow r;
      r.coeffs.assign(total, 0.0);
      for (int j = 0; j < nx; ++j) r.coeffs[j] = sc.T[i][j];
      for (int j = 0; j < sc.num_y(); ++j) r.coeffs[off + j] = sc.W[i][j];
      r.rel = sc.row_rel[i];
      r.rhs = sc.rhs[i];
      ef.lp.rows.push_back(std::move(r));
    }
    off += sc.num_y();
  }
  return ef;
}

MilpModel scenario_milp(const TwoStageProblem& problem, int s, const Vec& w) {
  if (s < 0 || s >= problem.num_scenarios())
    throw Error("scenario_milp: scenario index out of range");
  if (static_cast<int>(w.size()) != problem.num_x())
    throw Error("scenario_milp: w has wrong length");
  for (double v : w)
    if (!std::isfinite(v)) throw Error("scenario_milp: non-finite w");

  const auto& sc = problem.scenarios[s];
  const int nx = problem.num_x();
  const int ny = sc.num_y();

  MilpModel m;
  m.lp.obj.resize(nx + ny);
  m.lp.lb.resize(nx + ny);
  m.lp.ub.resize(nx + ny);
  m.kind.resize(nx + ny);
  for (int j = 0; j < nx; ++j) {
    m.lp.obj[j] = problem.first.obj[j] + w[j];
    m.lp.lb[j] = problem.first.lb[j];
    m.lp.ub[j] = problem.first.ub[j];
    m.kind[j] = problem.first.kind[j];
  }
  for (int j = 0; j < ny; ++j) {
    m.lp.obj[nx + j] = sc.obj[j];
    m.lp.lb[nx + j] = sc.y_lb[j];
    m.lp.ub[nx + j] = sc.y_ub[j];
    m.kind[nx + j] = sc.y_kind[j];
  }
  for (const auto& row : problem.first.rows) {
    LinearRow r;
    r.coeffs.assign(nx + ny, 0.0);
    std::copy(row.coeffs.begin(), row.coeffs.end(), r.coeffs.begin());
    r.rel = row.rel;
    r.rhs = row.rhs;
    m.lp.rows.push_back(std::move(r));
  }
  for (int i = 0; i < sc.num_rows(); ++i) {
    LinearRow r;
    r.coeffs.assign(nx + ny, 0.0);
    for (int j = 0; j < nx; ++j) r.coeffs[j] = sc.T[i][j];
    for (int j = 0; j < ny; ++j) r.coeffs[nx + j] = sc.W[i][j];
    r.rel = sc.row_rel[i];
    r.rhs = sc.rhs[i];
    m.lp.rows.push_back(std::move(r));
  }
  return m;
}

LagrangianValue lagrangian_value(const TwoStageProblem& problem,
                                 const DualMultipliers& omega,
                                 const MilpLimits& limits, int threads) {
  const int S = problem.num_scenarios();
  if (static_cast<int>(omega.omega.size()) != S)
    throw Error("lagrangian_value: omega scenario count mismatch");

  LagrangianValue out;
  out.argmins.resize(S);
  parallel_for(S, threads, [&](int s) {
    MilpModel m = scenario_milp(problem, s, omega.omega[s]);
    out.argmins[s] = solve_milp(m, limits);
  });
  KahanSum phi;
  for (int s = 0; s < S; ++s) {
    const auto& sol = out.argmins[s];
    switch (sol.status) {
      case MilpStatus::Optimal:
        phi.add(problem.scenarios[s].prob * sol.objective);
        break;
      case MilpStatus::BoundOnly:
        if (!std::isfinite(sol.dual_bound))
          throw LimitError("lagrangian_value: scenario " + std::to_string(s) +
                           " hit limits without a usable bound");
        phi.add(problem.scenarios[s].prob * sol.dual_bound);
        out.exact = false;
        break;
      case MilpStatus::Infeasible:
        throw SubproblemError("lagrangian_value: scenario " +
                              std::to_string(s) +
                              " subproblem infeasible (inconsistent instance)");
      case MilpStatus::Unbounded:
        throw SubproblemError("lagrangian_value: scenario " +
                              std::to_string(s) +
                              " subproblem unbounded (K_s must be bounded)");
    }
  }
  out.phi = phi.value();
  return out;
}

}  // namespace fwph
