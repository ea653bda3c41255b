#include "fwph/lp.hpp"

#include <algorithm>
#include <cmath>

namespace fwph {

void LinearProgram::check_shape() const {
  const std::size_t n = obj.size();
  if (n == 0) throw Error("lp: no variables");
  if (lb.size() != n || ub.size() != n) throw Error("lp: bound size mismatch");
  for (double v : obj)
    if (!std::isfinite(v)) throw Error("lp: non-finite objective coefficient");
  for (const auto& r : rows) {
    if (r.coeffs.size() != n) throw Error("lp: row size mismatch");
    if (!std::isfinite(r.rhs)) throw Error("lp: non-finite rhs");
    for (double v : r.coeffs)
      if (!std::isfinite(v)) throw Error("lp: non-finite row coefficient");
  }
  // crossed bounds are a well-formed but infeasible model; solve() reports it
  for (std::size_t j = 0; j < n; ++j)
    if (std::isnan(lb[j]) || std::isnan(ub[j])) throw Error("lp: NaN bound");
}

namespace {

enum class VState : std::uint8_t { AtLower, AtUpper, Basic, FreeZero };

constexpr double kPivTol = 1e-10;

class Tableau {
 public:
  Tableau(const LinearProgram& lp, const SimplexSolver::Options& opts)
      : opts_(opts), m_(lp.num_rows()), n_(lp.num_vars()) {
    ncols_ = n_ + m_;
    col_.resize(ncols_);
    lo_.resize(ncols_);
    hi_.resize(ncols_);
    b_.resize(m_);
    for (int j = 0; j < n_; ++j) {
      col_[j].assign(m_, 0.0);
      for (int i = 0; i < m_; ++i) col_[j][i] = lp.rows[i].coeffs[j];
      lo_[j] = lp.lb[j];
      hi_[j] = lp.ub[j];
    }
    for (int i = 0; i < m_; ++i) {
      int j = n_ + i;
      col_[j].assign(m_, 0.0);
      col_[j][i] = 1.0;
      switch (lp.rows[i].rel) {
        case Relation::LessEqual:
          lo_[j] = 0.0;
          hi_[j] = kInf;
          break;
        case Relation::Equal:
          lo_[j] = 0.0;
          hi_[j] = 0.0;
          break;
        case Relation::GreaterEqual:
          lo_[j] = -kInf;
          hi_[j] = 0.0;
          break;
      }
      b_[i] = lp.rows[i].rhs;
    }
    state_.assign(ncols_, VState::AtLower);
    xval_.assign(ncols_, 0.0);
    basis_.assign(m_, -1);
  }

  // Default nonbasic placement for every structural and slack column.
  void place_nonbasic() {
    for (int j = 0; j < ncols_; ++j) {
      if (std::isfinite(lo_[j])) {
        state_[j] = VState::AtLower;
        xval_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        state_[j] = VState::AtUpper;
        xval_[j] = hi_[j];
      } else {
        state_[j] = VState::FreeZero;
        xval_[j] = 0.0;
      }
    }
  }

  // Crash basis: slacks where the row residual fits the slack bounds,
  // signed artificials elsewhere.
  void crash() {
    place_nonbasic();
    Vec r = b_;
    for (int j = 0; j < n_; ++j)
      if (xval_[j] != 0.0)
        for (int i = 0; i < m_; ++i) r[i] -= col_[j][i] * xval_[j];
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      int sj = n_ + i;
      double sv = std::min(std::max(r[i], lo_[sj]), hi_[sj]);
      if (sv == r[i]) {
        basis_[i] = sj;
        state_[sj] = VState::Basic;
        xval_[sj] = r[i];
        binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
      } else {
        state_[sj] = (sv == lo_[sj]) ? VState::AtLower : VState::AtUpper;
        xval_[sj] = sv;
        double rr = r[i] - sv;
        double sign = rr >= 0 ? 1.0 : -1.0;
        int aj = add_artificial(i, sign);
        basis_[i] = aj;
        state_[aj] = VState::Basic;
        xval_[aj] = std::abs(rr);
        binv_[static_cast<std::size_t>(i) * m_ + i] = sign;
      }
    }
  }

  int add_artificial(int row, double sign) {
    int j = ncols_++;
    col_.emplace_back(m_, 0.0);
    col_[j][row] = sign;
    lo_.push_back(0.0);
    hi_.push_back(kInf);
    state_.push_back(VState::AtLower);
    xval_.push_back(0.0);
    artificial_.push_back(j);
    return j;
  }

  bool is_artificial(int j) const { return j >= n_ + m_; }
  bool has_basic_artificial() const {
    for (int i = 0; i < m_; ++i)
      if (is_artificial(basis_[i])) return true;
    return false;
  }
  double artificial_sum() const {
    KahanSum s;
    for (int j : artificial_) s.add(xval_[j]);
    return s.value();
  }

  void refactorize() {
    // Dense Gauss-Jordan on [B | I] with partial pivoting.
    std::vector<double> a(static_cast<std::size_t>(m_) * m_);
    for (int k = 0; k < m_; ++k)
      for (int i = 0; i < m_; ++i)
        a[static_cast<std::size_t>(i) * m_ + k] = col_[basis_[k]][i];
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
    for (int c = 0; c < m_; ++c) {
      int piv = c;
      double best = std::abs(a[static_cast<std::size_t>(c) * m_ + c]);
      for (int i = c + 1; i < m_; ++i) {
        double v = std::abs(a[static_cast<std::size_t>(i) * m_ + c]);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best < 1e-12) throw Error("lp: numerically singular basis");
      if (piv != c) {
        for (int k = 0; k < m_; ++k) {
          std::swap(a[static_cast<std::size_t>(piv) * m_ + k],
                    a[static_cast<std::size_t>(c) * m_ + k]);
          std::swap(binv_[static_cast<std::size_t>(piv) * m_ + k],
                    binv_[static_cast<std::size_t>(c) * m_ + k]);
        }
      }
      double d = a[static_cast<std::size_t>(c) * m_ + c];
      for (int k = 0; k < m_; ++k) {
        a[static_cast<std::size_t>(c) * m_ + k] /= d;
        binv_[static_cast<std::size_t>(c) * m_ + k] /= d;
      }
      for (int i = 0; i < m_; ++i) {
        if (i == c) continue;
        double f = a[static_cast<std::size_t>(i) * m_ + c];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          a[static_cast<std::size_t>(i) * m_ + k] -=
              f * a[static_cast<std::size_t>(c) * m_ + k];
          binv_[static_cast<std::size_t>(i) * m_ + k] -=
              f * binv_[static_cast<std::size_t>(c) * m_ + k];
        }
      }
    }
  }

  void recompute_basic_values() {
    Vec r = b_;
    for (int j = 0; j < ncols_; ++j) {
      if (state_[j] == VState::Basic || xval_[j] == 0.0) continue;
      for (int i = 0; i < m_; ++i) r[i] -= col_[j][i] * xval_[j];
    }
    for (int i = 0; i < m_; ++i) {
      KahanSum s;
      for (int k = 0; k < m_; ++k)
        s.add(binv_[static_cast<std::size_t>(i) * m_ + k] * r[k]);
      xval_[basis_[i]] = s.value();
    }
  }

  Vec btran(const Vec& cost) const {
    Vec y(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (int k = 0; k < m_; ++k)
        y[k] += cb * binv_[static_cast<std::size_t>(i) * m_ + k];
    }
    return y;
  }

  Vec ftran(int j) const {
    Vec w(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      KahanSum s;
      for (int k = 0; k < m_; ++k)
        s.add(binv_[static_cast<std::size_t>(i) * m_ + k] * col_[j][k]);
      w[i] = s.value();
    }
    return w;
  }

  // One simplex phase with the given costs. Returns Optimal when priced out.
  LpStatus run(const Vec& cost, bool detect_unbounded, long& pivots) {
    const double dtol = opts_.opt_tol * (1.0 + norm_inf(cost));
    long degen = 0;
    const long bland_after = 3L * (m_ + ncols_);
    bool bland = false;
    while (true) {
      if (pivots >= opts_.iter_limit) return LpStatus::IterLimit;
      Vec y = btran(cost);
      int enter = -1;
      double enter_dir = 0.0;
      double best_viol = dtol;
      for (int j = 0; j < ncols_; ++j) {
        if (state_[j] == VState::Basic) continue;
        if (lo_[j] == hi_[j] && state_[j] != VState::FreeZero) continue;  // fixed
        double d = cost[j];
        for (int i = 0; i < m_; ++i) d -= y[i] * col_[j][i];
        double dir = 0.0;
        if ((state_[j] == VState::AtLower || state_[j] == VState::FreeZero) &&
            d < -dtol)
          dir = 1.0;
        else if ((state_[j] == VState::AtUpper || state_[j] == VState::FreeZero) &&
                 d > dtol)
          dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(d) > best_viol) {
          best_viol = std::abs(d);
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      Vec w = ftran(enter);
      double t_best = kInf;
      if (std::isfinite(lo_[enter]) && std::isfinite(hi_[enter]))
        t_best = hi_[enter] - lo_[enter];
      int leave = -1;       // -1: bound flip
      double leave_bound = 0.0;
      for (int i = 0; i < m_; ++i) {
        double wk = enter_dir * w[i];
        int bj = basis_[i];
        double lim;
        double bnd;
        if (wk > kPivTol) {
          if (!std::isfinite(lo_[bj])) continue;
          lim = (xval_[bj] - lo_[bj]) / wk;
          bnd = lo_[bj];
        } else if (wk < -kPivTol) {
          if (!std::isfinite(hi_[bj])) continue;
          lim = (hi_[bj] - xval_[bj]) / (-wk);
          bnd = hi_[bj];
        } else {
          continue;
        }
        if (lim < 0.0) lim = 0.0;
        if (lim < t_best - 1e-12 ||
            (lim < t_best + 1e-12 && leave >= 0 && bj < basis_[leave])) {
          t_best = lim;
          leave = i;
          leave_bound = bnd;
        }
      }
      if (!std::isfinite(t_best)) {
        if (detect_unbounded) return LpStatus::Unbounded;
        throw Error("lp: phase-1 ray");  // cannot happen: phase-1 cost bounded
      }
      double t = t_best;
      if (t <= 1e-12) {
        if (++degen > bland_after) bland = true;
      }
      for (int i = 0; i < m_; ++i) xval_[basis_[i]] -= t * enter_dir * w[i];
      xval_[enter] += enter_dir * t;
      if (leave < 0) {
        state_[enter] =
            (enter_dir > 0) ? VState::AtUpper : VState::AtLower;
        xval_[enter] = (enter_dir > 0) ? hi_[enter] : lo_[enter];
      } else {
        int lv = basis_[leave];
        state_[lv] = (leave_bound == lo_[lv] && !(lo_[lv] == hi_[lv]))
                         ? VState::AtLower
                         : (leave_bound == hi_[lv] ? VState::AtUpper
                                                   : VState::AtLower);
        xval_[lv] = leave_bound;
        pivot_update(leave, w);
        basis_[leave] = enter;
        state_[enter] = VState::Basic;
      }
      ++pivots;
      if (pivots % opts_.refactor_every == 0) {
        refactorize();
        recompute_basic_values();
      }
    }
  }

  void pivot_update(int r, const Vec& w) {
    double piv = w[r];
    double* br = &binv_[static_cast<std::size_t>(r) * m_];
    for (int k = 0; k < m_; ++k) br[k] /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r || w[i] == 0.0) continue;
      double f = w[i];
      double* bi = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) bi[k] -= f * br[k];
    }
  }

  // Degenerate swap pivoting artificials out of the basis where possible;
  // rows that admit no pivot are dependent and keep their artificial fixed.
  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (!is_artificial(basis_[r])) continue;
      int pick = -1;
      Vec w;
      for (int j = 0; j < n_ + m_; ++j) {
        if (state_[j] == VState::Basic) continue;
        KahanSum s;
        for (int k = 0; k < m_; ++k)
          s.add(binv_[static_cast<std::size_t>(r) * m_ + k] * col_[j][k]);
        if (std::abs(s.value()) > 1e-7) {
          pick = j;
          break;
        }
      }
      if (pick < 0) continue;
      w = ftran(pick);
      int art = basis_[r];
      pivot_update(r, w);
      basis_[r] = pick;
      xval_[basis_[r]] = xval_[pick];
      state_[art] = VState::AtLower;
      xval_[art] = 0.0;
      state_[pick] = VState::Basic;
    }
  }

  void fix_artificials() {
    for (int j : artificial_) {
      lo_[j] = 0.0;
      hi_[j] = 0.0;
    }
  }

  bool basics_within_bounds(double tol) const {
    for (int i = 0; i < m_; ++i) {
      int j = basis_[i];
      if (xval_[j] < lo_[j] - tol || xval_[j] > hi_[j] + tol) return false;
    }
    return true;
  }

  // Install a warm basis; returns false when it cannot be used.
  bool install(const Basis& warm) {
    if (static_cast<int>(warm.basic.size()) != m_) return false;
    if (static_cast<int>(warm.at_upper.size()) != n_ + m_) return false;
    std::vector<bool> used(n_ + m_, false);
    for (int j : warm.basic) {
      if (j < 0 || j >= n_ + m_ || used[j]) return false;
      used[j] = true;
    }
    place_nonbasic();
    for (int j = 0; j < n_ + m_; ++j) {
      if (used[j]) continue;
      if (warm.at_upper[j] && std::isfinite(hi_[j])) {
        state_[j] = VState::AtUpper;
        xval_[j] = hi_[j];
      }
    }
    for (int i = 0; i < m_; ++i) {
      basis_[i] = warm.basic[i];
      state_[warm.basic[i]] = VState::Basic;
    }
    try {
      refactorize();
    } catch (const Error&) {
      return false;
    }
    recompute_basic_values();
    double tol = opts_.feas_tol * (1.0 + norm_inf(b_));
    if (!basics_within_bounds(tol)) return false;
    for (int i = 0; i < m_; ++i) {
      int j = basis_[i];
      xval_[j] = std::min(std::max(xval_[j], lo_[j]), hi_[j]);
    }
    return true;
  }

  LpSolution extract(const LinearProgram& lp, LpStatus status, long pivots) const {
    LpSolution out;
    out.status = status;
    out.pivots = pivots;
    out.x.assign(xval_.begin(), xval_.begin() + n_);
    Vec cost(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) cost[j] = lp.obj[j];
    out.dual = btran(cost);
    out.reduced_cost.resize(n_);
    for (int j = 0; j < n_; ++j) {
      double d = cost[j];
      for (int i = 0; i < m_; ++i) d -= out.dual[i] * col_[j][i];
      out.reduced_cost[j] = d;
    }
    out.objective = dot(lp.obj, out.x) + lp.obj_offset;
    out.basis.basic.resize(m_);
    for (int i = 0; i < m_; ++i) {
      int j = basis_[i];
      out.basis.basic[i] = is_artificial(j) ? n_ + i : j;  // dependent row
    }
    out.basis.at_upper.assign(n_ + m_, 0);
    for (int j = 0; j < n_ + m_; ++j)
      if (state_[j] == VState::AtUpper) out.basis.at_upper[j] = 1;
    return out;
  }

  Vec phase1_cost() const {
    Vec c(ncols_, 0.0);
    for (int j : artificial_) c[j] = 1.0;
    return c;
  }
  Vec phase2_cost(const LinearProgram& lp) const {
    Vec c(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) c[j] = lp.obj[j];
    return c;
  }

  double rhs_scale() const { return 1.0 + norm_inf(b_); }
  bool any_artificial() const { return !artificial_.empty(); }

 private:
  SimplexSolver::Options opts_;
  int m_, n_, ncols_;
  std::vector<Vec> col_;
  Vec lo_, hi_, b_;
  std::vector<VState> state_;
  Vec xval_;
  std::vector<int> basis_;
  std::vector<double> binv_;
  std::vector<int> artificial_;
};

}  // namespace

LpSolution SimplexSolver::solve(const LinearProgram& lp) const {
  return solve_impl(lp, nullptr);
}

LpSolution SimplexSolver::solve(const LinearProgram& lp, const Basis& warm) const {
  return solve_impl(lp, &warm);
}

LpSolution SimplexSolver::solve_impl(const LinearProgram& lp,
                                     const Basis* warm) const {
  lp.check_shape();
  for (int j = 0; j < lp.num_vars(); ++j)
    if (lp.lb[j] > lp.ub[j]) {
      LpSolution s;
      s.status = LpStatus::Infeasible;
      return s;
    }

  Tableau tab(lp, opts_);
  long pivots = 0;
  bool warmed = warm != nullptr && tab.install(*warm);
  if (!warmed) tab.crash();

  if (tab.any_artificial()) {
    LpStatus st = tab.run(tab.phase1_cost(), false, pivots);
    if (st == LpStatus::IterLimit) return tab.extract(lp, st, pivots);
    if (tab.artificial_sum() > opts_.feas_tol * tab.rhs_scale()) {
      LpSolution s = tab.extract(lp, LpStatus::Infeasible, pivots);
      s.status = LpStatus::Infeasible;
      return s;
    }
    tab.drive_out_artificials();
    tab.fix_artificials();
  }

  LpStatus st = tab.run(tab.phase2_cost(lp), true, pivots);
  return tab.extract(lp, st, pivots);
}

}  // namespace fwph
