#include "fwph/fwcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fwph {

bool VertexSet::add(const Vec& xy, VertexTag tag, double dedup_tol) {
  if (static_cast<int>(xy.size()) != nx_ + ny_)
    throw Error("vertex set: point has wrong dimension");
  for (const auto& p : points_) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      d = std::max(d, std::abs(p[i] - xy[i]));
    if (d <= dedup_tol) return false;
  }
  points_.push_back(xy);
  tags_.push_back(tag);
  return true;
}

SimplexWeights project_to_simplex(const Vec& v) {
  if (v.empty()) throw Error("project_to_simplex: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw Error("project_to_simplex: non-finite entry");
  const int n = static_cast<int>(v.size());
  Vec u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  int support = 0;
  for (int k = 0; k < n; ++k) {
    cumsum += u[k];
    double th = (cumsum - 1.0) / (k + 1);
    if (u[k] - th > 0.0) {
      support = k + 1;
      theta = th;
    }
  }
  (void)support;
  SimplexWeights w;
  w.a.resize(n);
  KahanSum total;
  for (int i = 0; i < n; ++i) {
    w.a[i] = std::max(v[i] - theta, 0.0);
    total.add(w.a[i]);
  }
  double t = total.value();
  for (double& x : w.a) x /= t;
  return w;
}

namespace {

struct QpData {
  int K = 0;
  int nx = 0;
  Vec lin;          // per-vertex linear cost (c + w)^T x_i + q^T y_i
  std::vector<Vec> gram;  // X^T X
  Vec xz;           // x_i . z
  double rho = 0.0;
  double zz = 0.0;
  double wz = 0.0;  // w . z

  double value(const Vec& a) const {
    KahanSum s;
    for (int i = 0; i < K; ++i) {
      if (a[i] == 0.0) continue;
      double gi = 0.0;
      for (int j = 0; j < K; ++j) gi += gram[i][j] * a[j];
      s.add(a[i] * (lin[i] + 0.5 * rho * gi - rho * xz[i]));
    }
    return s.value() + 0.5 * rho * zz - wz;
  }

  Vec gradient(const Vec& a) const {
    Vec g(K);
    for (int i = 0; i < K; ++i) {
      double gi = 0.0;
      for (int j = 0; j < K; ++j) gi += gram[i][j] * a[j];
      g[i] = lin[i] + rho * (gi - xz[i]);
    }
    return g;
  }
};

}  // namespace

MasterQpResult solve_master_qp(const VertexSet& V, const Vec& cost_x,
                               const Vec& cost_y, const Vec& z, const Vec& w,
                               double rho, const SimplexWeights* warm,
                               double tol, long iter_limit) {
  const int K = V.size();
  if (K < 1) throw Error("master qp: empty vertex set");
  if (!(rho > 0.0)) throw Error("master qp: rho must be positive");
  const int nx = V.nx();
  const int ny = V.ny();

  auto assemble = [&](const Vec& a) {
    Vec pt(nx + ny, 0.0);
    for (int i = 0; i < K; ++i) {
      if (a[i] == 0.0) continue;
      const Vec& p = V.point(i);
      for (int d = 0; d < nx + ny; ++d) pt[d] += a[i] * p[d];
    }
    return pt;
  };
  auto lagrangian_at = [&](const Vec& pt) {
    KahanSum s;
    for (int d = 0; d < nx; ++d) {
      s.add((cost_x[d] + w[d]) * pt[d]);
      double dd = pt[d] - z[d];
      s.add(0.5 * rho * dd * dd);
    }
    for (int d = 0; d < ny; ++d) s.add(cost_y[d] * pt[nx + d]);
    s.add(-dot(w, z));
    return s.value();
  };

  MasterQpResult out;
  if (K == 1) {
    out.weights.a = {1.0};
    out.point = V.point(0);
    out.objective = lagrangian_at(out.point);
    return out;
  }

  QpData qp;
  qp.K = K;
  qp.nx = nx;
  qp.rho = rho;
  qp.zz = dot(z, z);
  qp.wz = dot(w, z);
  qp.lin.resize(K);
  qp.xz.resize(K);
  qp.gram.assign(K, Vec(K, 0.0));
  for (int i = 0; i < K; ++i) {
    const Vec& p = V.point(i);
    KahanSum li;
    for (int d = 0; d < nx; ++d) li.add((cost_x[d] + w[d]) * p[d]);
    for (int d = 0; d < ny; ++d) li.add(cost_y[d] * p[nx + d]);
    qp.lin[i] = li.value();
    KahanSum xz;
    for (int d = 0; d < nx; ++d) xz.add(p[d] * z[d]);
    qp.xz[i] = xz.value();
    for (int j = 0; j <= i; ++j) {
      const Vec& pj = V.point(j);
      KahanSum g;
      for (int d = 0; d < nx; ++d) g.add(p[d] * pj[d]);
      qp.gram[i][j] = qp.gram[j][i] = g.value();
    }
  }

  if (iter_limit < 0) iter_limit = 50L * K * K + 2000;

  // Pairwise Frank-Wolfe with exact line search: mass moves from the worst
  // active atom to the best atom, which keeps the tail rate linear on this
  // rank-deficient simplex QP and needs only O(K) work per step.
  Vec a(K, 1.0 / K);
  if (warm && static_cast<int>(warm->a.size()) == K)
    a = project_to_simplex(warm->a).a;
  Vec Qa(K, 0.0);  // (rho * Gram) a, updated incrementally
  auto refresh_Qa = [&] {
    for (int i = 0; i < K; ++i) {
      KahanSum s;
      for (int j = 0; j < K; ++j)
        if (a[j] != 0.0) s.add(qp.gram[i][j] * a[j]);
      Qa[i] = rho * s.value();
    }
  };
  refresh_Qa();
  Vec glin(K);
  for (int i = 0; i < K; ++i) glin[i] = qp.lin[i] - rho * qp.xz[i];

  long it = 0;
  for (; it < iter_limit; ++it) {
    if (it > 0 && it % 256 == 0) refresh_Qa();
    int s = 0, v = -1;
    double gs = kInf, gv = -kInf, ga = 0.0;
    for (int i = 0; i < K; ++i) {
      const double gi = Qa[i] + glin[i];
      ga += a[i] * gi;
      if (gi < gs) {
        gs = gi;
        s = i;
      }
      if (a[i] > 0.0 && gi > gv) {
        gv = gi;
        v = i;
      }
    }
    const double fa = 0.5 * dot(a, Qa) + dot(glin, a) + 0.5 * rho * qp.zz -
                      qp.wz;
    if (ga - gs <= tol * (1.0 + std::abs(fa)) || v < 0 || s == v) break;

    const double dqd =
        rho * (qp.gram[s][s] + qp.gram[v][v] - 2.0 * qp.gram[s][v]);
    const double slope = gs - gv;  // negative along e_s - e_v
    double gamma = a[v];
    if (dqd > 0.0) gamma = std::min(gamma, -slope / dqd);
    if (!(gamma > 0.0)) break;  // numerically stalled
    const bool drop = gamma >= a[v];
    a[s] += gamma;
    a[v] = drop ? 0.0 : a[v] - gamma;
    for (int i = 0; i < K; ++i)
      Qa[i] += gamma * rho * (qp.gram[i][s] - qp.gram[i][v]);
  }

  out.weights.a = a;
  out.point = assemble(a);
  out.objective = lagrangian_at(out.point);
  out.iterations = it;
  out.hit_iter_limit = (it >= iter_limit);
  return out;
}

double sq_dist_to_proj_conv(const VertexSet& V, const Vec& x) {
  Vec zero_x(V.nx(), 0.0), zero_y(V.ny(), 0.0), zero_w(V.nx(), 0.0);
  MasterQpResult r = solve_master_qp(V, zero_x, zero_y, x, zero_w, 2.0,
                                     nullptr, 1e-12, 20000);
  return std::max(r.objective, 0.0);
}

SdmResult run_sdm(VertexSet& V, const Vec& x_init, const Vec& y_init,
                  const Vec& cost_x, const Vec& cost_y, const Vec& omega,
                  const Vec& z, double rho, int t_max, double tau,
                  const ScenarioMilpFn& milp_oracle) {
  if (V.size() < 1) throw Error("run_sdm: empty initial vertex set");
  if (t_max < 1) throw Error("run_sdm: t_max must be >= 1");
  if (tau < 0.0) throw Error("run_sdm: tau must be >= 0");
  const int nx = V.nx();
  const int ny = V.ny();

  SdmResult out;
  Vec x_prev = x_init;
  Vec y_prev = y_init;
  SimplexWeights warm;
  bool have_warm = false;

  for (int t = 1; t <= t_max; ++t) {
    Vec w_hat(nx);
    for (int d = 0; d < nx; ++d) w_hat[d] = omega[d] + rho * (x_prev[d] - z[d]);

    MilpSolution sol = milp_oracle(w_hat);
    ++out.milp_solves;
    if (sol.status == MilpStatus::Infeasible)
      throw SubproblemError("sdm: scenario subproblem infeasible");
    if (sol.status == MilpStatus::Unbounded)
      throw SubproblemError("sdm: scenario subproblem unbounded");
    if (sol.status == MilpStatus::BoundOnly && !sol.has_incumbent())
      throw LimitError("sdm: scenario subproblem hit limits without incumbent");

    // Linearization value of the oracle point; for a bound-only return the
    // dual bound still under-estimates phi_s.
    KahanSum lin_hat;
    for (int d = 0; d < nx; ++d) lin_hat.add((cost_x[d] + w_hat[d]) * sol.x[d]);
    for (int d = 0; d < ny; ++d) lin_hat.add(cost_y[d] * sol.x[nx + d]);
    double hat_value = lin_hat.value();

    if (t == 1) {
      out.phi_s = (sol.status == MilpStatus::Optimal) ? sol.objective
                                                      : sol.dual_bound;
      out.phi_exact = (sol.status == MilpStatus::Optimal);
    }

    KahanSum lin_prev;
    for (int d = 0; d < nx; ++d)
      lin_prev.add((cost_x[d] + w_hat[d]) * x_prev[d]);
    for (int d = 0; d < ny; ++d) lin_prev.add(cost_y[d] * y_prev[d]);
    double gamma = lin_prev.value() - hat_value;
    out.gap_trace.push_back(gamma);

    bool added = V.add(sol.x, VertexTag::MilpVertex);
    if (added && have_warm) warm.a.push_back(0.0);
    out.vertex_counts.push_back(V.size());

    MasterQpResult master =
        solve_master_qp(V, cost_x, cost_y, z, omega, rho,
                        have_warm ? &warm : nullptr);
    ++out.qp_solves;
    warm = master.weights;
    have_warm = true;
    x_prev.assign(master.point.begin(), master.point.begin() + nx);
    y_prev.assign(master.point.begin() + nx, master.point.end());
    out.master_obj.push_back(master.objective);
    out.inner_iters = t;

    // The gap only certifies the master point once the linearization point is
    // itself a master solution; the t = 1 point may lie outside conv(V).
    if (t >= 2 && gamma <= tau) break;
  }

  out.x = std::move(x_prev);
  out.y = std::move(y_prev);
  return out;
}

}  // namespace fwph
