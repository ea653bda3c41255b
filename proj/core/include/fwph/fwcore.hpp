#pragma once

#include <functional>
#include <vector>

#include "fwph/milp.hpp"
#include "fwph/util.hpp"

namespace fwph {

enum class VertexTag { MilpVertex, InitFeasible };

// Growing inner-approximation point set for one scenario: points (x, y) in
// K_s. Points are only ever added; dedup keeps the master QP well conditioned.
class VertexSet {
 public:
  VertexSet(int nx, int ny) : nx_(nx), ny_(ny) {}

  // Returns true when the point was new (outside the dedup tolerance of every
  // stored point).
  bool add(const Vec& xy, VertexTag tag, double dedup_tol = 1e-9);

  int size() const { return static_cast<int>(points_.size()); }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Vec& point(int i) const { return points_[i]; }
  VertexTag tag(int i) const { return tags_[i]; }

 private:
  int nx_, ny_;
  std::vector<Vec> points_;
  std::vector<VertexTag> tags_;
};

struct SimplexWeights {
  Vec a;
};

// Euclidean projection onto the unit simplex {a >= 0, sum a = 1}.
SimplexWeights project_to_simplex(const Vec& v);

struct MasterQpResult {
  SimplexWeights weights;
  Vec point;          // sum_i a_i * vertex_i, length nx + ny
  double objective;   // augmented-Lagrangian value at the point
  long iterations = 0;
  bool hit_iter_limit = false;
};

// Minimizes L_s^rho(x, y, z, w) = c^T x + q^T y + w^T (x - z)
// + (rho/2)||x - z||^2 over conv(V), parameterized by convex-combination
// weights (the x/y variables are substituted out). Accelerated projected
// gradient with restart on non-monotonicity.
MasterQpResult solve_master_qp(const VertexSet& V, const Vec& cost_x,
                               const Vec& cost_y, const Vec& z, const Vec& w,
                               double rho, const SimplexWeights* warm = nullptr,
                               double tol = 1e-10, long iter_limit = -1);

// Squared distance from x to Proj_x conv(V); 0 (to tolerance) means x is
// expressible as the x-part of a convex combination of V.
double sq_dist_to_proj_conv(const VertexSet& V, const Vec& x);

// Solves min (c + w_hat)^T x + q^T y over K_s for a given multiplier shift.
using ScenarioMilpFn = std::function<MilpSolution(const Vec& w_hat)>;

struct SdmResult {
  Vec x, y;                       // final master-QP point
  double phi_s = 0.0;             // t=1 MILP value (dual bound contribution)
  bool phi_exact = true;          // false when the t=1 solve was bound-only
  std::vector<double> gap_trace;  // Gamma^1..Gamma^t
  std::vector<int> vertex_counts; // |V| after each inner iteration
  std::vector<double> master_obj; // master objective after each iteration
  int inner_iters = 0;
  long milp_solves = 0;
  long qp_solves = 0;
};

// One scenario's inner loop: alternate a linearized MILP solve over K_s with
// an exact master QP over conv(V), stopping on the Frank-Wolfe gap.
SdmResult run_sdm(VertexSet& V, const Vec& x_init, const Vec& y_init,
                  const Vec& cost_x, const Vec& cost_y, const Vec& omega,
                  const Vec& z, double rho, int t_max, double tau,
                  const ScenarioMilpFn& milp_oracle);

}  // namespace fwph
