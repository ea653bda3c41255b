#pragma once

#include <string>

#include "fwph/model.hpp"
#include "fwph/util.hpp"

namespace fwph {

enum class OracleMethod { Enumeration, Kelley, ExtensiveForm };

struct OracleResult {
  double value = kNaN;
  OracleMethod method = OracleMethod::Enumeration;
  long iterations = 0;   // cuts (kelley) / enumerated points (enumeration)
  double gap = 0.0;      // certified absolute gap at termination
  std::string certificate;
};

// Exact Lagrangian dual value by enumerating the lattice points of every K_s
// and solving one LP over per-scenario convex weights coupled through a shared
// first stage. Requires all integer variables to have finite bounds and the
// first stage to be purely integral. Total enumeration budget: 1e5 points.
OracleResult enumerate_ld(const TwoStageProblem& problem,
                          long point_budget = 100000);

struct KelleyOptions {
  double tol = 1e-7;        // absolute + relative gap target
  int max_cuts = 2000;      // cut rounds
  int threads = 1;
};

// Cutting-plane outer approximation of the dual function, maximized over the
// dual-feasible multipliers inside a trust box that grows when active.
OracleResult kelley_ld(const TwoStageProblem& problem,
                       const KelleyOptions& opts = {});

// Deterministic-equivalent solve; value is the optimal SMIP objective.
OracleResult solve_extensive(const TwoStageProblem& problem,
                             const MilpLimits& limits = {});

}  // namespace fwph
