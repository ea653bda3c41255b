#pragma once

#include <vector>

#include "fwph/lp.hpp"
#include "fwph/util.hpp"

namespace fwph {

struct MilpModel {
  LinearProgram lp;
  std::vector<VarKind> kind;  // per variable

  int num_vars() const { return lp.num_vars(); }
  bool is_integral(int j) const { return kind[j] != VarKind::Continuous; }
};

enum class MilpStatus { Optimal, Infeasible, Unbounded, BoundOnly };

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  Vec x;                 // incumbent (empty when none)
  double objective = kInf;   // incumbent objective
  double dual_bound = -kInf; // valid global lower bound
  long nodes = 0;
  bool has_incumbent() const { return !x.empty(); }
};

struct MilpLimits {
  long node_limit = -1;      // <0: unlimited
  double time_limit = -1.0;  // seconds, <0: unlimited
};

inline constexpr double kIntegralityTol = 1e-6;

MilpSolution solve_milp(const MilpModel& model, const MilpLimits& limits = {});

// Exact linearization of the proximal term (rho/2)||x - z||^2 over a pure
// binary leading block, using x_i^2 = x_i. The returned model's objective
// (offset included) matches the augmented-Lagrangian value at every binary
// point; `constant` is the offset that was folded in.
struct ProxLinearized {
  MilpModel model;
  double constant = 0.0;
};

ProxLinearized prox_linearize(const MilpModel& model, const Vec& z, const Vec& w,
                              double rho);

}  // namespace fwph
