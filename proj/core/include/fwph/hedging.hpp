#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fwph/fwcore.hpp"
#include "fwph/model.hpp"
#include "fwph/util.hpp"

namespace fwph {

struct HedgingConfig {
  double rho = 1.0;
  double alpha = 0.0;       // SDM linearization-point blend, any real
  double eps = 1e-3;        // residual termination tolerance
  int k_max = 1000;
  int t_max = 1;            // inner SDM iterations per scenario (FW-PH)
  double tau = 0.0;         // inner SDM gap tolerance
  double time_limit = -1.0; // seconds, <0: unlimited
  int bounds_every = 1;     // PH bound-solve stride (0: never)
  bool recenter = true;     // re-center omega after each dual update
  int threads = 1;
  // Optional early-stop hook, polled once per outer iteration after the
  // record is appended.
  std::function<bool(const struct IterationRecord&)> stop;
};

struct IterationRecord {
  int k = 0;
  double phi = kNaN;       // NaN when the bound was not computed this iteration
  double best_phi = -kInf;
  double residual = kNaN;
  double wall_s = 0.0;
  long milp_solves = 0;    // cumulative (includes MIQP-linearized solves)
  long qp_solves = 0;      // cumulative master-QP solves
  long vertices = 0;       // total vertex count across scenarios
  std::string flags;
};

enum class Termination { Converged, IterationLimit, TimeLimit, Stopped };

inline char termination_letter(Termination t) {
  return t == Termination::Converged ? 'C' : 'T';
}

struct RunResult {
  std::vector<Vec> x, y;   // per-scenario primal points
  Vec z;                   // consensus
  DualMultipliers omega;
  double phi_final = kNaN;
  double phi_best = -kInf;
  Termination reason = Termination::IterationLimit;
  std::vector<IterationRecord> trace;
  double final_residual = kNaN;
};

// sqrt(sum_s p_s ||x_s - z_prev||^2): combined primal+dual residual.
double residual(const std::vector<Vec>& x, const Vec& z_prev, const Vec& p);

// Probability-weighted consensus average, compensated, fixed order.
Vec consensus(const std::vector<Vec>& x, const Vec& p);

DualMultipliers dual_update(const DualMultipliers& omega,
                            const std::vector<Vec>& x, const Vec& z, double rho,
                            const Vec& p, bool recenter = true);

// PH over the mixed-integer sets K_s; requires a pure binary first stage so
// the proximal MIQP can be linearized exactly.
RunResult run_ph(const TwoStageProblem& problem, const DualMultipliers& omega0,
                 const HedgingConfig& config);

struct FwphInit {
  std::vector<VertexSet> V;
  std::vector<Vec> x0, y0;
  double upper_bound = kInf;  // feasible-point objective for the original SMIP
};

// Per-scenario argmin plus a shared recourse point, guaranteeing the initial
// vertex sets' x-projections share a common point.
FwphInit fwph_initialize(const TwoStageProblem& problem,
                         const DualMultipliers& omega0, int threads = 1);

RunResult run_fwph(const TwoStageProblem& problem, FwphInit init,
                   const DualMultipliers& omega0, const HedgingConfig& config);

}  // namespace fwph
