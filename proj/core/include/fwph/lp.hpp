#pragma once

#include <optional>
#include <vector>

#include "fwph/util.hpp"

namespace fwph {

// Dense LP in the form
//   min  obj^T x + obj_offset
//   s.t. rows (<=, =, >=), lb <= x <= ub (bounds may be infinite).
struct LinearProgram {
  Vec obj;
  double obj_offset = 0.0;
  std::vector<LinearRow> rows;
  Vec lb, ub;

  int num_vars() const { return static_cast<int>(obj.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  void check_shape() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

// Basis snapshot usable as a warm start. Column indices cover structurals
// followed by one slack per row.
struct Basis {
  std::vector<int> basic;          // one column index per row
  std::vector<std::uint8_t> at_upper;  // per column, nonbasic-at-upper flag
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec x;             // structural values
  Vec dual;          // one multiplier per row (d obj / d rhs)
  Vec reduced_cost;  // per structural variable
  double objective = 0.0;
  Basis basis;
  long pivots = 0;
};

class SimplexSolver {
 public:
  struct Options {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    long iter_limit = 200000;
    int refactor_every = 64;
  };

  SimplexSolver() = default;
  explicit SimplexSolver(Options opts) : opts_(opts) {}

  LpSolution solve(const LinearProgram& lp) const;
  LpSolution solve(const LinearProgram& lp, const Basis& warm) const;

 private:
  LpSolution solve_impl(const LinearProgram& lp, const Basis* warm) const;
  Options opts_;
};

}  // namespace fwph
