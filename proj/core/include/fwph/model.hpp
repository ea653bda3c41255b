#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fwph/milp.hpp"
#include "fwph/util.hpp"

namespace fwph {

struct FirstStageData {
  Vec obj;                      // c
  std::vector<LinearRow> rows;  // polyhedral part of X (<= and = after normalization)
  Vec lb, ub;
  std::vector<VarKind> kind;

  int num_vars() const { return static_cast<int>(obj.size()); }
};

struct ScenarioData {
  double prob = 0.0;
  Vec obj;                           // q_s
  std::vector<Relation> row_rel;     // per linking row
  std::vector<Vec> T;                // m x n_x
  std::vector<Vec> W;                // m x n_y
  Vec rhs;                           // h_s
  Vec y_lb, y_ub;
  std::vector<VarKind> y_kind;

  int num_rows() const { return static_cast<int>(rhs.size()); }
  int num_y() const { return static_cast<int>(obj.size()); }
};

struct ReferenceValue {
  double value = 0.0;
  std::string note;  // provenance
};

struct TwoStageProblem {
  std::string name;
  FirstStageData first;
  std::vector<ScenarioData> scenarios;
  std::optional<ReferenceValue> ref_smip;
  std::optional<ReferenceValue> ref_ld;

  int num_scenarios() const { return static_cast<int>(scenarios.size()); }
  int num_x() const { return first.num_vars(); }
  Vec probabilities() const;
  bool pure_binary_first_stage() const;
  // Convert every >= relation into <= / keep =; applied by the parsers.
  void normalize_relations();
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

ValidationReport validate(const TwoStageProblem& problem);

// Scaled multipliers, one vector per scenario; dual feasible iff
// sum_s p_s omega_s ~ 0.
struct DualMultipliers {
  std::vector<Vec> omega;

  static DualMultipliers zeros(const TwoStageProblem& p);
};

bool dual_feasible(const DualMultipliers& omega, const Vec& p,
                   double tol = 1e-9);

// Deterministic equivalent over (x, y_1..y_S).
MilpModel build_extensive_form(const TwoStageProblem& problem);

// min (c + w)^T x + q_s^T y over K_s.
MilpModel scenario_milp(const TwoStageProblem& problem, int s, const Vec& w);

struct LagrangianValue {
  double phi = 0.0;
  std::vector<MilpSolution> argmins;  // per scenario
  bool exact = true;                  // false when any solve was bound-only
};

LagrangianValue lagrangian_value(const TwoStageProblem& problem,
                                 const DualMultipliers& omega,
                                 const MilpLimits& limits = {},
                                 int threads = 1);

}  // namespace fwph
