#include <algorithm>
#include <cmath>
#include <random>

#include "fwph/io.hpp"

namespace fwph {

namespace {

// Thin wrapper keeping all draws on the raw mt19937_64 stream; the standard
// distributions are not bit-stable across library implementations.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}

  long below(long n) { return static_cast<long>(eng() % static_cast<std::uint64_t>(n)); }
  long range(long lo, long hi) { return lo + below(hi - lo + 1); }  // inclusive
  // Dyadic fraction in [0,1): exactly representable, platform stable.
  double frac() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
};

}  // namespace

TwoStageProblem generate_instance(std::uint64_t seed, GenShape shape) {
  shape.scenarios = std::clamp(shape.scenarios, 1, 4);
  shape.nx = std::clamp(shape.nx, 1, 6);
  shape.link_rows = std::clamp(shape.link_rows, 1, 4);
  shape.ny = std::clamp(shape.ny, 1, 8 - shape.link_rows);
  shape.y_int = std::clamp(shape.y_int, 0, shape.ny);
  shape.x_rows = std::clamp(shape.x_rows, 0, 4);

  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  const int S = shape.scenarios;
  const int nx = shape.nx;
  const int ny_core = shape.ny;
  const int m = shape.link_rows;
  const int ny = ny_core + m;  // core vars plus one recourse slack per row

  TwoStageProblem p;
  p.name = "g_seed" + std::to_string(seed);

  // First stage: binary x, costs small integers; rows keep x = 0 feasible.
  p.first.obj.resize(nx);
  p.first.lb.assign(nx, 0.0);
  p.first.ub.assign(nx, 1.0);
  p.first.kind.assign(nx, VarKind::Binary);
  for (int j = 0; j < nx; ++j)
    p.first.obj[j] = static_cast<double>(rng.range(-4, 9));
  for (int r = 0; r < shape.x_rows; ++r) {
    LinearRow row;
    row.coeffs.resize(nx);
    long total = 0;
    for (int j = 0; j < nx; ++j) {
      long c = rng.range(0, 3);
      row.coeffs[j] = static_cast<double>(c);
      total += c;
    }
    row.rel = Relation::LessEqual;
    row.rhs = static_cast<double>(std::max(1L, (total * rng.range(40, 90)) / 100));
    p.first.rows.push_back(std::move(row));
  }

  // Probabilities from small integer weights.
  std::vector<long> weights(S);
  long wsum = 0;
  for (int s = 0; s < S; ++s) {
    weights[s] = rng.range(1, 5);
    wsum += weights[s];
  }

  long max_abs_q = 1;
  p.scenarios.resize(S);
  for (int s = 0; s < S; ++s) {
    ScenarioData& sc = p.scenarios[s];
    sc.prob = static_cast<double>(weights[s]) / static_cast<double>(wsum);
    sc.obj.resize(ny);
    sc.y_lb.assign(ny, 0.0);
    sc.y_ub.assign(ny, 0.0);
    sc.y_kind.assign(ny, VarKind::Continuous);
    for (int j = 0; j < ny_core; ++j) {
      long q = rng.range(-5, 9);
      sc.obj[j] = static_cast<double>(q);
      max_abs_q = std::max(max_abs_q, std::abs(q));
      if (j < shape.y_int) {
        sc.y_kind[j] = VarKind::Integer;
        sc.y_ub[j] = static_cast<double>(rng.range(1, 2));
      } else {
        sc.y_ub[j] = static_cast<double>(rng.range(2, 5));
      }
    }

    // Covering link rows T x + W y + slack >= h; the bounded slack column can
    // absorb the whole requirement, so every binary x has feasible recourse.
    for (int r = 0; r < m; ++r) {
      Vec t(nx), w(ny, 0.0);
      double worst = 0.0;  // min of T x + W y over the box
      for (int j = 0; j < nx; ++j) {
        long c = rng.range(-2, 3);
        t[j] = static_cast<double>(c);
        worst += std::min(0.0, t[j]);
      }
      for (int j = 0; j < ny_core; ++j) {
        long c = rng.range(-2, 3);
        w[j] = static_cast<double>(c);
        worst += std::min(w[j] * sc.y_lb[j], w[j] * sc.y_ub[j]);
      }
      double h = static_cast<double>(rng.range(1, 6));
      w[ny_core + r] = 1.0;
      sc.T.push_back(std::move(t));
      sc.W.push_back(std::move(w));
      sc.rhs.push_back(h);
      sc.row_rel.push_back(Relation::GreaterEqual);
      sc.y_ub[ny_core + r] = std::max(1.0, std::ceil(h - worst));
    }
  }
  // Slack cost: high enough that slack is a last resort, identical across
  // scenarios so it never drives the duality gap by itself.
  const double slack_cost = static_cast<double>(8 * max_abs_q + 20);
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < m; ++r)
      p.scenarios[s].obj[ny_core + r] = slack_cost;

  return p;
}

}  // namespace fwph
