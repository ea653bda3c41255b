#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "fwph/hedging.hpp"
#include "fwph/model.hpp"

namespace fwph {

// Native sectioned text format. Line oriented, '#' comments, tokens separated
// by blanks. Layout:
//
//   name <identifier>
//   ref-smip <value> <free-text note>      (optional)
//   ref-ld <value> <free-text note>        (optional)
//   first-stage
//     vars <n>
//     obj <n values> / lb / ub
//     kind <n letters: C I B>
//     row { <= | = | >= } <rhs> <n coeffs>
//   end
//   scenario                               (one block per scenario)
//     prob <p>
//     vars <m>
//     obj / lb / ub / kind  (second stage)
//     row { <= | = | >= } <rhs> <n+m coeffs: T then W>
//   end
//
// parse(write(p)) reproduces p exactly; numbers use shortest round-trip form.
TwoStageProblem parse_native(const std::string& text);
std::string write_native(const TwoStageProblem& problem);

// SMPS subset: free-format core, a time file with exactly two periods, and a
// stoch file limited to SCENARIOS DISCRETE and INDEP DISCRETE modifications of
// rhs, objective, or matrix entries in the second stage. Anything else fails
// with an error naming the construct.
TwoStageProblem parse_smps(const std::string& core_text,
                           const std::string& time_text,
                           const std::string& stoch_text);

struct GenShape {
  int scenarios = 2;  // capped at 4
  int nx = 4;         // binary first-stage vars, capped at 6
  int ny = 3;         // second-stage vars before recourse slacks, cap 8 total
  int y_int = 2;      // integral among the ny
  int x_rows = 2;
  int link_rows = 2;  // each adds one bounded recourse slack column
};

// Deterministic synthetic instance: binary first stage, covering-style link
// rows with bounded high-cost slack columns, so every binary x has feasible
// recourse and each K_s is bounded.
TwoStageProblem generate_instance(std::uint64_t seed, GenShape shape = {});

// Schema: iter,wall_s,phi,best_phi,residual,milp_solves,vertices,flags
void write_trace_csv(std::ostream& os,
                     const std::vector<IterationRecord>& trace);

}  // namespace fwph
