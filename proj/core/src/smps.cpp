#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fwph/io.hpp"

namespace fwph {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool is_comment(const std::string& line) {
  return line.empty() || line[0] == '*';
}

struct Lines {
  std::vector<std::vector<std::string>> toks;
  std::vector<int> line_no;
};

Lines preprocess(const std::string& text) {
  Lines out;
  std::istringstream ss(text);
  std::string line;
  int no = 0;
  while (std::getline(ss, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_comment(line)) continue;
    auto t = split_ws(line);
    if (t.empty()) continue;
    out.toks.push_back(std::move(t));
    out.line_no.push_back(no);
  }
  return out;
}

[[noreturn]] void fail(const char* file, int line, const std::string& msg) {
  throw ParseError(std::string(file) + ": " + msg, line, 1);
}

double num(const char* file, int line, const std::string& tok) {
  double v;
  if (!parse_double(tok, v)) fail(file, line, "not a number: '" + tok + "'");
  return v;
}

struct CoreData {
  std::string name;
  std::string obj_row;
  std::vector<std::string> row_names;  // constraint rows, core order
  std::map<std::string, int> row_index;
  std::map<std::string, char> row_type;  // L, G, E
  std::vector<std::string> col_names;
  std::map<std::string, int> col_index;
  std::vector<bool> col_integer;
  std::map<std::string, std::map<std::string, double>> coef;  // col -> row -> v
  std::map<std::string, double> obj_coef;
  std::map<std::string, double> rhs;
  std::map<std::string, double> range;
  std::map<std::string, double> lb, ub;
  std::string rhs_name;  // set name used in the RHS section
};

CoreData parse_core(const std::string& text) {
  const char* F = "core";
  Lines ls = preprocess(text);
  CoreData core;
  enum Sec { None, Rows, Cols, Rhs, Ranges, Bounds, Done } sec = None;
  bool integer_mode = false;

  for (std::size_t i = 0; i < ls.toks.size(); ++i) {
    const auto& t = ls.toks[i];
    const int ln = ls.line_no[i];
    const std::string& head = t[0];
    if (head == "NAME") {
      if (t.size() > 1) core.name = t[1];
      continue;
    }
    if (head == "ROWS") { sec = Rows; continue; }
    if (head == "COLUMNS") { sec = Cols; continue; }
    if (head == "RHS") { sec = Rhs; continue; }
    if (head == "RANGES") { sec = Ranges; continue; }
    if (head == "BOUNDS") { sec = Bounds; continue; }
    if (head == "ENDATA") { sec = Done; break; }
    if (head == "OBJSENSE" || head == "OBJSENSE:" || head == "SOS")
      fail(F, ln, "unsupported construct: " + head);

    switch (sec) {
      case Rows: {
        if (t.size() < 2) fail(F, ln, "ROWS entry needs a type and a name");
        char ty = t[0].size() == 1 ? t[0][0] : '?';
        const std::string& rname = t[1];
        if (ty == 'N') {
          if (!core.obj_row.empty())
            fail(F, ln, "unsupported construct: multiple N rows");
          core.obj_row = rname;
        } else if (ty == 'L' || ty == 'G' || ty == 'E') {
          core.row_index[rname] = static_cast<int>(core.row_names.size());
          core.row_names.push_back(rname);
          core.row_type[rname] = ty;
        } else {
          fail(F, ln, "unknown row type '" + t[0] + "'");
        }
        break;
      }
      case Cols: {
        if (t.size() >= 3 && t[t.size() - 1] == "'INTORG'") {
          integer_mode = true;
          break;
        }
        if (t.size() >= 3 && t[t.size() - 1] == "'INTEND'") {
          integer_mode = false;
          break;
        }
        if (t.size() < 3 || t.size() % 2 == 0)
          fail(F, ln, "COLUMNS entry needs (row, value) pairs");
        const std::string& cname = t[0];
        if (!core.col_index.count(cname)) {
          core.col_index[cname] = static_cast<int>(core.col_names.size());
          core.col_names.push_back(cname);
          core.col_integer.push_back(integer_mode);
        }
        for (std::size_t k = 1; k + 1 < t.size(); k += 2) {
          double v = num(F, ln, t[k + 1]);
          if (t[k] == core.obj_row) {
            core.obj_coef[cname] = v;
          } else if (core.row_index.count(t[k])) {
            core.coef[cname][t[k]] = v;
          } else {
            fail(F, ln, "unknown row '" + t[k] + "' in COLUMNS");
          }
        }
        break;
      }
      case Rhs: {
        if (t.size() < 3 || t.size() % 2 == 0)
          fail(F, ln, "RHS entry needs (row, value) pairs");
        core.rhs_name = t[0];
        for (std::size_t k = 1; k + 1 < t.size(); k += 2) {
          if (!core.row_index.count(t[k]) && t[k] != core.obj_row)
            fail(F, ln, "unknown row '" + t[k] + "' in RHS");
          if (t[k] != core.obj_row)
            core.rhs[t[k]] = num(F, ln, t[k + 1]);
        }
        break;
      }
      case Ranges: {
        if (t.size() < 3 || t.size() % 2 == 0)
          fail(F, ln, "RANGES entry needs (row, value) pairs");
        for (std::size_t k = 1; k + 1 < t.size(); k += 2) {
          if (!core.row_index.count(t[k]))
            fail(F, ln, "unknown row '" + t[k] + "' in RANGES");
          core.range[t[k]] = num(F, ln, t[k + 1]);
        }
        break;
      }
      case Bounds: {
        if (t.size() < 3) fail(F, ln, "BOUNDS entry too short");
        const std::string& bt = t[0];
        const std::string& cname = t[2];
        if (!core.col_index.count(cname))
          fail(F, ln, "unknown column '" + cname + "' in BOUNDS");
        double v = t.size() > 3 ? num(F, ln, t[3]) : 0.0;
        if (bt == "UP") core.ub[cname] = v;
        else if (bt == "LO") core.lb[cname] = v;
        else if (bt == "FX") { core.lb[cname] = v; core.ub[cname] = v; }
        else if (bt == "FR") { core.lb[cname] = -kInf; core.ub[cname] = kInf; }
        else if (bt == "MI") core.lb[cname] = -kInf;
        else if (bt == "PL") core.ub[cname] = kInf;
        else if (bt == "BV") { core.lb[cname] = 0.0; core.ub[cname] = 1.0; }
        else if (bt == "UI") core.ub[cname] = v;
        else if (bt == "LI") core.lb[cname] = v;
        else fail(F, ln, "unsupported bound type '" + bt + "'");
        break;
      }
      case None:
        fail(F, ln, "data before any section header");
      case Done:
        break;
    }
  }
  if (core.obj_row.empty()) fail(F, 1, "core file has no objective (N) row");
  if (core.col_names.empty()) fail(F, 1, "core file has no columns");
  return core;
}

struct TimeSplit {
  int first_stage2_col = 0;  // index into core column order
  int first_stage2_row = 0;  // index into constraint row order
};

TimeSplit parse_time(const std::string& text, const CoreData& core) {
  const char* F = "time";
  Lines ls = preprocess(text);
  bool in_periods = false;
  std::vector<std::pair<std::string, std::string>> periods;  // (col, row)
  for (std::size_t i = 0; i < ls.toks.size(); ++i) {
    const auto& t = ls.toks[i];
    const int ln = ls.line_no[i];
    if (t[0] == "TIME") continue;
    if (t[0] == "PERIODS") {
      if (t.size() > 1 && t[1] != "LP" && t[1] != "MIP" && t[1] != "IMPLICIT")
        fail(F, ln, "unsupported construct: PERIODS " + t[1]);
      in_periods = true;
      continue;
    }
    if (t[0] == "ENDATA") break;
    if (t[0] == "ROWS" || t[0] == "COLUMNS")
      fail(F, ln, "unsupported construct: explicit " + t[0] + " time section");
    if (!in_periods) fail(F, ln, "data before PERIODS section");
    if (t.size() < 3) fail(F, ln, "PERIODS entry needs column, row, period");
    periods.emplace_back(t[0], t[1]);
  }
  if (periods.size() != 2)
    fail(F, 1, "expected exactly two periods, got " +
                   std::to_string(periods.size()));
  TimeSplit ts;
  auto cit = core.col_index.find(periods[1].first);
  if (cit == core.col_index.end())
    fail(F, 1, "unknown period-2 start column '" + periods[1].first + "'");
  ts.first_stage2_col = cit->second;
  auto rit = core.row_index.find(periods[1].second);
  if (rit == core.row_index.end())
    fail(F, 1, "unknown period-2 start row '" + periods[1].second + "'");
  ts.first_stage2_row = rit->second;
  return ts;
}

struct Modification {
  // target: rhs (col empty), objective (row empty), or matrix entry
  std::string col, row;
  double value = 0.0;
};

struct ScenarioDef {
  double prob = 0.0;
  std::vector<Modification> mods;
};

bool is_rhs_token(const std::string& tok, const CoreData& core) {
  return tok == core.rhs_name || tok == "RHS" || tok == "rhs";
}

std::vector<ScenarioDef> parse_stoch(const std::string& text,
                                     const CoreData& core) {
  const char* F = "stoch";
  Lines ls = preprocess(text);
  enum Mode { None, Scen, Indep } mode = None;

  std::vector<ScenarioDef> scen_defs;
  std::map<std::string, int> scen_by_name;

  // INDEP groups keyed by (col,row) in order of first appearance.
  std::vector<std::pair<std::string, std::string>> group_keys;
  std::map<std::pair<std::string, std::string>,
           std::vector<std::pair<double, double>>>
      groups;  // (value, prob)

  for (std::size_t i = 0; i < ls.toks.size(); ++i) {
    const auto& t = ls.toks[i];
    const int ln = ls.line_no[i];
    if (t[0] == "STOCH") continue;
    if (t[0] == "ENDATA") break;
    if (t[0] == "SCENARIOS" || t[0] == "INDEP") {
      if (t.size() > 1 && t[1] != "DISCRETE")
        fail(F, ln, "unsupported construct: " + t[0] + " " + t[1]);
      if (mode != None)
        fail(F, ln, "unsupported construct: mixing stoch sections");
      mode = t[0] == "SCENARIOS" ? Scen : Indep;
      continue;
    }
    if (t[0] == "BLOCKS" || t[0] == "NODES" || t[0] == "DISTRIB")
      fail(F, ln, "unsupported construct: " + t[0]);
    if (mode == Scen) {
      if (t[0] == "SC") {
        if (t.size() < 4) fail(F, ln, "SC entry needs name, parent, prob");
        ScenarioDef def;
        def.prob = num(F, ln, t[3]);
        const std::string& parent = t[2];
        if (parent != "ROOT" && parent != "'ROOT'") {
          auto it = scen_by_name.find(parent);
          if (it == scen_by_name.end())
            fail(F, ln, "unknown parent scenario '" + parent + "'");
          def.mods = scen_defs[it->second].mods;
        }
        scen_by_name[t[1]] = static_cast<int>(scen_defs.size());
        scen_defs.push_back(std::move(def));
        continue;
      }
      if (scen_defs.empty()) fail(F, ln, "scenario data before any SC line");
      if (t.size() < 3) fail(F, ln, "modification needs column, row, value");
      Modification m;
      double v = num(F, ln, t[2]);
      if (is_rhs_token(t[0], core)) {
        m.row = t[1];
      } else if (t[1] == core.obj_row) {
        m.col = t[0];
      } else {
        m.col = t[0];
        m.row = t[1];
      }
      m.value = v;
      scen_defs.back().mods.push_back(std::move(m));
      continue;
    }
    if (mode == Indep) {
      if (t.size() < 4) fail(F, ln, "INDEP entry needs column, row, value, prob");
      // Optional period token between value and probability.
      double prob = num(F, ln, t.back());
      double value = num(F, ln, t[2]);
      auto key = std::make_pair(t[0], t[1]);
      if (!groups.count(key)) group_keys.push_back(key);
      groups[key].emplace_back(value, prob);
      continue;
    }
    fail(F, ln, "data before SCENARIOS or INDEP section");
  }

  if (mode == Scen) {
    if (scen_defs.empty()) fail(F, 1, "no scenarios defined");
    return scen_defs;
  }
  if (mode == Indep) {
    long count = 1;
    for (const auto& key : group_keys) {
      KahanSum ps;
      for (auto& vp : groups[key]) ps.add(vp.second);
      if (std::abs(ps.value() - 1.0) > 1e-9)
        fail(F, 1, "INDEP probabilities for (" + key.first + ", " + key.second +
                       ") sum to " + format_double(ps.value()));
      count *= static_cast<long>(groups[key].size());
      if (count > 10000) fail(F, 1, "INDEP cross product exceeds 10000 scenarios");
    }
    // Cross product, last group varying fastest.
    std::vector<ScenarioDef> out;
    std::vector<std::size_t> idx(group_keys.size(), 0);
    for (;;) {
      ScenarioDef def;
      def.prob = 1.0;
      for (std::size_t g = 0; g < group_keys.size(); ++g) {
        const auto& [value, prob] = groups[group_keys[g]][idx[g]];
        Modification m;
        const auto& key = group_keys[g];
        if (is_rhs_token(key.first, core)) {
          m.row = key.second;
        } else if (key.second == core.obj_row) {
          m.col = key.first;
        } else {
          m.col = key.first;
          m.row = key.second;
        }
        m.value = value;
        def.prob *= prob;
        def.mods.push_back(std::move(m));
      }
      out.push_back(std::move(def));
      std::size_t g = group_keys.size();
      while (g > 0) {
        --g;
        if (++idx[g] < groups[group_keys[g]].size()) break;
        idx[g] = 0;
        if (g == 0) return out;
      }
      if (group_keys.empty()) return out;
    }
  }
  fail(F, 1, "stoch file has no SCENARIOS or INDEP section");
}

}  // namespace

TwoStageProblem parse_smps(const std::string& core_text,
                           const std::string& time_text,
                           const std::string& stoch_text) {
  const CoreData core = parse_core(core_text);
  const TimeSplit ts = parse_time(time_text, core);
  const std::vector<ScenarioDef> defs = parse_stoch(stoch_text, core);

  const int ncols = static_cast<int>(core.col_names.size());
  const int nrows = static_cast<int>(core.row_names.size());
  const int nx = ts.first_stage2_col;
  const int ny = ncols - nx;
  if (nx < 1) throw ParseError("time: no first-stage columns", 1, 1);
  if (ny < 1) throw ParseError("time: no second-stage columns", 1, 1);

  auto col_stage2 = [&](const std::string& c) {
    auto it = core.col_index.find(c);
    return it != core.col_index.end() && it->second >= ts.first_stage2_col;
  };
  auto row_stage2 = [&](const std::string& r) {
    auto it = core.row_index.find(r);
    return it != core.row_index.end() && it->second >= ts.first_stage2_row;
  };

  auto bounds_of = [&](const std::string& c, bool integral) {
    double lo = 0.0, hi = integral ? 1.0 : kInf;
    auto lit = core.lb.find(c);
    if (lit != core.lb.end()) lo = lit->second;
    auto uit = core.ub.find(c);
    if (uit != core.ub.end()) hi = uit->second;
    return std::make_pair(lo, hi);
  };
  auto kind_of = [&](int ci, double lo, double hi) {
    if (!core.col_integer[ci]) return VarKind::Continuous;
    return (lo == 0.0 && hi == 1.0) ? VarKind::Binary : VarKind::Integer;
  };

  TwoStageProblem p;
  p.name = core.name.empty() ? "smps" : core.name;
  p.first.obj.assign(nx, 0.0);
  p.first.lb.assign(nx, 0.0);
  p.first.ub.assign(nx, 0.0);
  p.first.kind.assign(nx, VarKind::Continuous);
  for (int j = 0; j < nx; ++j) {
    const std::string& c = core.col_names[j];
    auto [lo, hi] = bounds_of(c, core.col_integer[j]);
    p.first.lb[j] = lo;
    p.first.ub[j] = hi;
    p.first.kind[j] = kind_of(j, lo, hi);
    auto it = core.obj_coef.find(c);
    if (it != core.obj_coef.end()) p.first.obj[j] = it->second;
  }

  // Dense constraint matrix in core row order.
  std::vector<Vec> A(nrows, Vec(ncols, 0.0));
  for (const auto& [c, rowmap] : core.coef) {
    int ci = core.col_index.at(c);
    for (const auto& [r, v] : rowmap) A[core.row_index.at(r)][ci] = v;
  }

  // First-stage rows must not touch second-stage columns.
  auto append_with_range = [&](std::vector<LinearRow>& out, const Vec& coeffs,
                               char ty, double rhs, double rng, bool has_rng) {
    LinearRow row;
    row.coeffs = coeffs;
    row.rhs = rhs;
    row.rel = ty == 'L'   ? Relation::LessEqual
              : ty == 'G' ? Relation::GreaterEqual
                          : Relation::Equal;
    out.push_back(row);
    if (!has_rng) return;
    LinearRow extra;
    extra.coeffs = coeffs;
    if (ty == 'L') {
      extra.rel = Relation::GreaterEqual;
      extra.rhs = rhs - std::abs(rng);
    } else if (ty == 'G') {
      extra.rel = Relation::LessEqual;
      extra.rhs = rhs + std::abs(rng);
    } else {
      out.back().rel = Relation::GreaterEqual;
      out.back().rhs = rng >= 0.0 ? rhs : rhs + rng;
      extra.rel = Relation::LessEqual;
      extra.rhs = rng >= 0.0 ? rhs + rng : rhs;
    }
    out.push_back(std::move(extra));
  };

  for (int r = 0; r < ts.first_stage2_row; ++r) {
    const std::string& rname = core.row_names[r];
    for (int cjl = nx; cjl < ncols; ++cjl)
      if (A[r][cjl] != 0.0)
        throw ParseError("core: first-stage row '" + rname +
                             "' references second-stage column '" +
                             core.col_names[cjl] + "'",
                         1, 1);
    Vec coeffs(A[r].begin(), A[r].begin() + nx);
    auto rhs_it = core.rhs.find(rname);
    double rhs = rhs_it != core.rhs.end() ? rhs_it->second : 0.0;
    auto rg = core.range.find(rname);
    append_with_range(p.first.rows, coeffs, core.row_type.at(rname), rhs,
                      rg != core.range.end() ? rg->second : 0.0,
                      rg != core.range.end());
  }

  // Second-stage template, cloned and patched per scenario.
  Vec q_base(ny, 0.0);
  Vec y_lb(ny), y_ub(ny);
  std::vector<VarKind> y_kind(ny);
  for (int j = 0; j < ny; ++j) {
    const std::string& c = core.col_names[nx + j];
    auto [lo, hi] = bounds_of(c, core.col_integer[nx + j]);
    y_lb[j] = lo;
    y_ub[j] = hi;
    y_kind[j] = kind_of(nx + j, lo, hi);
    auto it = core.obj_coef.find(c);
    if (it != core.obj_coef.end()) q_base[j] = it->second;
  }

  KahanSum psum;
  for (const auto& def : defs) {
    if (!(def.prob > 0.0))
      throw ParseError("stoch: non-positive scenario probability", 1, 1);
    psum.add(def.prob);

    std::vector<Vec> Amod(A.begin() + ts.first_stage2_row, A.end());
    std::map<std::string, double> rhs_mod = core.rhs;
    Vec q = q_base;
    for (const auto& m : def.mods) {
      if (m.col.empty()) {
        if (!row_stage2(m.row))
          throw ParseError("stoch: modification targets first-stage row '" +
                               m.row + "'",
                           1, 1);
        rhs_mod[m.row] = m.value;
      } else if (m.row.empty()) {
        if (!col_stage2(m.col))
          throw ParseError(
              "stoch: objective modification targets first-stage column '" +
                  m.col + "'",
              1, 1);
        q[core.col_index.at(m.col) - nx] = m.value;
      } else {
        if (!core.col_index.count(m.col))
          throw ParseError("stoch: unknown column '" + m.col + "'", 1, 1);
        if (!row_stage2(m.row))
          throw ParseError("stoch: matrix modification targets first-stage "
                           "row '" + m.row + "'", 1, 1);
        Amod[core.row_index.at(m.row) - ts.first_stage2_row]
            [core.col_index.at(m.col)] = m.value;
      }
    }

    ScenarioData sc;
    sc.prob = def.prob;
    sc.obj = q;
    sc.y_lb = y_lb;
    sc.y_ub = y_ub;
    sc.y_kind = y_kind;
    std::vector<LinearRow> rows;
    for (int r = ts.first_stage2_row; r < nrows; ++r) {
      const std::string& rname = core.row_names[r];
      auto rhs_it = rhs_mod.find(rname);
      double rhs = rhs_it != rhs_mod.end() ? rhs_it->second : 0.0;
      auto rg = core.range.find(rname);
      append_with_range(rows, Amod[r - ts.first_stage2_row],
                        core.row_type.at(rname), rhs,
                        rg != core.range.end() ? rg->second : 0.0,
                        rg != core.range.end());
    }
    for (auto& row : rows) {
      sc.row_rel.push_back(row.rel);
      sc.T.emplace_back(row.coeffs.begin(), row.coeffs.begin() + nx);
      sc.W.emplace_back(row.coeffs.begin() + nx, row.coeffs.end());
      sc.rhs.push_back(row.rhs);
    }
    p.scenarios.push_back(std::move(sc));
  }
  if (std::abs(psum.value() - 1.0) > 1e-9)
    throw ParseError("stoch: scenario probabilities sum to " +
                         format_double(psum.value()),
                     1, 1);
  // Tiny drift within the 1e-9 contract is renormalized so downstream
  // validation (1e-12) accepts the problem.
  double total = psum.value();
  if (total != 1.0)
    for (auto& sc : p.scenarios) sc.prob /= total;

  ValidationReport rep = validate(p);
  if (!rep.ok()) throw ParseError("smps: " + rep.errors[0], 1, 1);
  return p;
}

}  // namespace fwph
