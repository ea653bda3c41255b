#include "fwph/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

namespace fwph {

namespace {

struct Node {
  double bound;  // parent LP bound, valid lower bound for the subtree
  long id;
  Vec lb, ub;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

int pick_branch_var(const MilpModel& model, const Vec& x) {
  int best = -1;
  double best_score = -1.0;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (!model.is_integral(j)) continue;
    double f = x[j] - std::floor(x[j]);
    double dist = std::min(f, 1.0 - f);
    if (dist <= kIntegralityTol) continue;
    double score = 0.5 - std::abs(f - 0.5);
    if (score > best_score + 1e-12) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const MilpLimits& limits) {
  model.lp.check_shape();
  const int n = model.num_vars();
  if (static_cast<int>(model.kind.size()) != n)
    throw Error("milp: integrality flag size mismatch");

  Vec root_lb = model.lp.lb, root_ub = model.lp.ub;
  for (int j = 0; j < n; ++j) {
    if (model.kind[j] == VarKind::Binary) {
      root_lb[j] = std::max(root_lb[j], 0.0);
      root_ub[j] = std::min(root_ub[j], 1.0);
    }
    if (model.is_integral(j)) {
      if (!std::isfinite(root_lb[j]) || !std::isfinite(root_ub[j]))
        throw Error("milp: integer variable " + std::to_string(j) +
                    " lacks finite bounds");
      root_lb[j] = std::ceil(root_lb[j] - kIntegralityTol);
      root_ub[j] = std::floor(root_ub[j] + kIntegralityTol);
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto out_of_budget = [&](long nodes) {
    if (limits.node_limit >= 0 && nodes >= limits.node_limit) return true;
    if (limits.time_limit >= 0.0) {
      double el = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      if (el >= limits.time_limit) return true;
    }
    return false;
  };

  SimplexSolver lp_solver;
  MilpSolution best;
  best.status = MilpStatus::Infeasible;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> frontier;
  long next_id = 0;
  frontier.push(Node{-kInf, next_id++, std::move(root_lb), std::move(root_ub)});

  long nodes = 0;
  bool truncated = false;

  auto frontier_bound = [&]() {
    return frontier.empty() ? kInf : frontier.top().bound;
  };
  auto prune_tol = [&](double inc) { return 1e-9 * (1.0 + std::abs(inc)); };

  while (!frontier.empty()) {
    if (out_of_budget(nodes)) {
      truncated = true;
      break;
    }
    Node node = frontier.top();
    frontier.pop();
    if (best.has_incumbent() &&
        node.bound >= best.objective - prune_tol(best.objective))
      continue;

    // Plunge: follow one child chain depth-first until the node prunes or an
    // incumbent is found; siblings go back to the frontier.
    bool plunging = true;
    while (plunging) {
      ++nodes;
      LinearProgram sub = model.lp;
      sub.lb = node.lb;
      sub.ub = node.ub;
      bool crossed = false;
      for (int j = 0; j < n; ++j)
        if (sub.lb[j] > sub.ub[j]) crossed = true;
      LpSolution rel;
      if (crossed) {
        rel.status = LpStatus::Infeasible;
      } else {
        rel = lp_solver.solve(sub);
      }
      if (rel.status == LpStatus::IterLimit)
        throw Error("milp: LP iteration limit in node relaxation");
      if (rel.status == LpStatus::Infeasible) break;
      if (rel.status == LpStatus::Unbounded) {
        if (nodes == 1) {
          MilpSolution s;
          s.status = MilpStatus::Unbounded;
          s.dual_bound = -kInf;
          s.nodes = nodes;
          return s;
        }
        break;  // continuous ray under integer fixings; subtree unbounded
      }
      if (best.has_incumbent() &&
          rel.objective >= best.objective - prune_tol(best.objective))
        break;

      int branch = pick_branch_var(model, rel.x);
      if (branch < 0) {
        // integral solution
        Vec xi = rel.x;
        for (int j = 0; j < n; ++j)
          if (model.is_integral(j)) xi[j] = std::round(xi[j]);
        double obj = dot(model.lp.obj, xi) + model.lp.obj_offset;
        if (!best.has_incumbent() || obj < best.objective) {
          best.x = std::move(xi);
          best.objective = obj;
        }
        break;
      }
      double xv = rel.x[branch];
      Node down{rel.objective, next_id++, node.lb, node.ub};
      down.ub[branch] = std::floor(xv);
      Node up{rel.objective, next_id++, node.lb, node.ub};
      up.lb[branch] = std::ceil(xv);
      bool go_down = (xv - std::floor(xv)) < 0.5;
      if (best.has_incumbent()) {
        frontier.push(std::move(down));
        frontier.push(std::move(up));
        plunging = false;
      } else {
        frontier.push(go_down ? std::move(up) : std::move(down));
        node = go_down ? std::move(down) : std::move(up);
      }
    }
  }

  best.nodes = nodes;
  double open_bound = frontier_bound();
  if (truncated || !frontier.empty()) {
    best.status = MilpStatus::BoundOnly;
    best.dual_bound =
        best.has_incumbent() ? std::min(open_bound, best.objective) : open_bound;
    if (!std::isfinite(best.dual_bound) && best.dual_bound > 0)
      best.dual_bound = best.has_incumbent() ? best.objective : -kInf;
  } else if (best.has_incumbent()) {
    best.status = MilpStatus::Optimal;
    best.dual_bound = best.objective;
  } else {
    best.status = MilpStatus::Infeasible;
    best.dual_bound = kInf;
  }
  return best;
}

ProxLinearized prox_linearize(const MilpModel& model, const Vec& z, const Vec& w,
                              double rho) {
  const int nz = static_cast<int>(z.size());
  if (nz > model.num_vars()) throw Error("prox_linearize: z longer than model");
  if (w.size() != z.size()) throw Error("prox_linearize: w/z size mismatch");
  for (int j = 0; j < nz; ++j)
    if (model.kind[j] != VarKind::Binary)
      throw PreconditionError(
          "prox_linearize: first-stage variable " + std::to_string(j) +
          " is not binary; exact linearization requires a pure binary first "
          "stage");

  ProxLinearized out;
  out.model = model;
  KahanSum zsq;
  for (int j = 0; j < nz; ++j) {
    out.model.lp.obj[j] += w[j] + 0.5 * rho * (1.0 - 2.0 * z[j]);
    zsq.add(z[j] * z[j]);
  }
  out.constant = 0.5 * rho * zsq.value() - dot(w, z);
  out.model.lp.obj_offset += out.constant;
  return out;
}

}  // namespace fwph
