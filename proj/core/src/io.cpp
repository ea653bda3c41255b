#include "fwph/io.hpp"

#include <ostream>
#include <sstream>

namespace fwph {

namespace {

struct Tok {
  std::string s;
  int col = 0;  // 1-based
};

std::vector<Tok> lex_line(const std::string& line) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r' && line[j] != '#')
      ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

class NativeParser {
 public:
  explicit NativeParser(const std::string& text) : in_(text) {}

  TwoStageProblem run() {
    TwoStageProblem p;
    int first_stage_line = 0;
    int scenario_line = 0;
    bool have_first = false;
    while (next_line()) {
      if (toks_.empty()) continue;
      const Tok& head = toks_[0];
      if (head.s == "name") {
        p.name = rest_as_text(1);
      } else if (head.s == "ref-smip") {
        p.ref_smip = parse_ref();
      } else if (head.s == "ref-ld") {
        p.ref_ld = parse_ref();
      } else if (head.s == "first-stage") {
        if (have_first) fail(head, "duplicate first-stage section");
        first_stage_line = line_no_;
        p.first = parse_first_stage();
        have_first = true;
      } else if (head.s == "scenario") {
        if (!have_first) fail(head, "scenario section before first-stage");
        if (scenario_line == 0) scenario_line = line_no_;
        p.scenarios.push_back(parse_scenario(p.first.num_vars()));
      } else {
        fail(head, "unknown directive '" + head.s + "'");
      }
    }
    if (!have_first)
      throw ParseError("missing first-stage section", line_no_, 1);
    if (p.scenarios.empty())
      throw ParseError("no scenario sections", line_no_, 1);

    ValidationReport rep = validate(p);
    if (!rep.ok()) {
      int at = rep.errors[0].find("probab") != std::string::npos ||
                       rep.errors[0].find("scenario") != std::string::npos
                   ? scenario_line
                   : first_stage_line;
      throw ParseError(rep.errors[0], at, 1);
    }
    return p;
  }

 private:
  std::istringstream in_;
  std::string line_;
  std::vector<Tok> toks_;
  int line_no_ = 0;
  bool eof_ = false;

  bool next_line() {
    if (!std::getline(in_, line_)) {
      eof_ = true;
      return false;
    }
    ++line_no_;
    toks_ = lex_line(line_);
    return true;
  }

  [[noreturn]] void fail(const Tok& t, const std::string& msg) {
    throw ParseError(msg, line_no_, t.col);
  }
  [[noreturn]] void fail_line(const std::string& msg) {
    throw ParseError(msg, line_no_, 1);
  }

  std::string rest_as_text(std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < toks_.size(); ++i) {
      if (!out.empty()) out += ' ';
      out += toks_[i].s;
    }
    return out;
  }

  double number_at(std::size_t i) {
    if (i >= toks_.size()) fail_line("expected a number");
    double v;
    if (!parse_double(toks_[i].s, v))
      fail(toks_[i], "not a number: '" + toks_[i].s + "'");
    return v;
  }

  ReferenceValue parse_ref() {
    ReferenceValue r;
    r.value = number_at(1);
    r.note = rest_as_text(2);
    return r;
  }

  int parse_vars() {
    double v = number_at(1);
    int n = static_cast<int>(v);
    if (v != n || n < 1) fail(toks_[1], "vars must be a positive integer");
    if (toks_.size() != 2) fail(toks_[2], "trailing tokens after vars");
    return n;
  }

  Vec parse_vec(int n) {
    if (static_cast<int>(toks_.size()) != n + 1)
      fail_line("expected " + std::to_string(n) + " values after '" +
                toks_[0].s + "', got " + std::to_string(toks_.size() - 1));
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = number_at(i + 1);
    return out;
  }

  std::vector<VarKind> parse_kinds(int n) {
    if (static_cast<int>(toks_.size()) != n + 1)
      fail_line("expected " + std::to_string(n) + " kind letters");
    std::vector<VarKind> out(n);
    for (int i = 0; i < n; ++i) {
      const Tok& t = toks_[i + 1];
      if (t.s == "C")
        out[i] = VarKind::Continuous;
      else if (t.s == "I")
        out[i] = VarKind::Integer;
      else if (t.s == "B")
        out[i] = VarKind::Binary;
      else
        fail(t, "kind must be C, I, or B");
    }
    return out;
  }

  // row <rel> <rhs> <coeffs...>
  LinearRow parse_row(int width) {
    if (toks_.size() < 3) fail_line("row needs a relation and rhs");
    LinearRow row;
    const Tok& rel = toks_[1];
    if (rel.s == "<=")
      row.rel = Relation::LessEqual;
    else if (rel.s == "=")
      row.rel = Relation::Equal;
    else if (rel.s == ">=")
      row.rel = Relation::GreaterEqual;
    else
      fail(rel, "relation must be <=, =, or >=");
    row.rhs = number_at(2);
    if (static_cast<int>(toks_.size()) != width + 3)
      fail_line("row expects " + std::to_string(width) + " coefficients");
    row.coeffs.resize(width);
    for (int i = 0; i < width; ++i) row.coeffs[i] = number_at(i + 3);
    return row;
  }

  FirstStageData parse_first_stage() {
    FirstStageData fs;
    int n = -1;
    bool have_obj = false, have_lb = false, have_ub = false, have_kind = false;
    while (next_line()) {
      if (toks_.empty()) continue;
      const Tok& head = toks_[0];
      if (head.s == "end") {
        if (n < 0) fail(head, "first-stage: missing vars");
        if (!have_obj || !have_lb || !have_ub || !have_kind)
          fail(head, "first-stage: needs obj, lb, ub, and kind");
        return fs;
      }
      if (head.s == "vars") {
        n = parse_vars();
        continue;
      }
      if (n < 0) fail(head, "first-stage: vars must come first");
      if (head.s == "obj") {
        fs.obj = parse_vec(n);
        have_obj = true;
      } else if (head.s == "lb") {
        fs.lb = parse_vec(n);
        have_lb = true;
      } else if (head.s == "ub") {
        fs.ub = parse_vec(n);
        have_ub = true;
      } else if (head.s == "kind") {
        fs.kind = parse_kinds(n);
        have_kind = true;
      } else if (head.s == "row") {
        fs.rows.push_back(parse_row(n));
      } else {
        fail(head, "unknown first-stage directive '" + head.s + "'");
      }
    }
    throw ParseError("unterminated first-stage section", line_no_, 1);
  }

  ScenarioData parse_scenario(int nx) {
    ScenarioData sc;
    int ny = -1;
    bool have_prob = false, have_obj = false, have_lb = false, have_ub = false,
         have_kind = false;
    while (next_line()) {
      if (toks_.empty()) continue;
      const Tok& head = toks_[0];
      if (head.s == "end") {
        if (!have_prob) fail(head, "scenario: missing prob");
        if (ny < 0) fail(head, "scenario: missing vars");
        if (!have_obj || !have_lb || !have_ub || !have_kind)
          fail(head, "scenario: needs obj, lb, ub, and kind");
        return sc;
      }
      if (head.s == "prob") {
        sc.prob = number_at(1);
        have_prob = true;
        continue;
      }
      if (head.s == "vars") {
        ny = parse_vars();
        continue;
      }
      if (ny < 0 && head.s != "prob")
        fail(head, "scenario: vars must precede '" + head.s + "'");
      if (head.s == "obj") {
        sc.obj = parse_vec(ny);
        have_obj = true;
      } else if (head.s == "lb") {
        sc.y_lb = parse_vec(ny);
        have_lb = true;
      } else if (head.s == "ub") {
        sc.y_ub = parse_vec(ny);
        have_ub = true;
      } else if (head.s == "kind") {
        sc.y_kind = parse_kinds(ny);
        have_kind = true;
      } else if (head.s == "row") {
        LinearRow row = parse_row(nx + ny);
        sc.row_rel.push_back(row.rel);
        sc.T.emplace_back(row.coeffs.begin(), row.coeffs.begin() + nx);
        sc.W.emplace_back(row.coeffs.begin() + nx, row.coeffs.end());
        sc.rhs.push_back(row.rhs);
      } else {
        fail(head, "unknown scenario directive '" + head.s + "'");
      }
    }
    throw ParseError("unterminated scenario section", line_no_, 1);
  }
};

const char* kind_letter(VarKind k) {
  switch (k) {
    case VarKind::Continuous: return "C";
    case VarKind::Integer: return "I";
    case VarKind::Binary: return "B";
  }
  return "?";
}

const char* rel_token(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "=";
    case Relation::GreaterEqual: return ">=";
  }
  return "?";
}

void write_vec(std::string& out, const char* key, const Vec& v) {
  out += key;
  for (double x : v) {
    out += ' ';
    out += format_double(x);
  }
  out += '\n';
}

void write_kinds(std::string& out, const std::vector<VarKind>& k) {
  out += "kind";
  for (VarKind x : k) {
    out += ' ';
    out += kind_letter(x);
  }
  out += '\n';
}

}  // namespace

TwoStageProblem parse_native(const std::string& text) {
  return NativeParser(text).run();
}

std::string write_native(const TwoStageProblem& problem) {
  std::string out;
  out += "name " + (problem.name.empty() ? std::string("unnamed")
                                         : problem.name) + "\n";
  if (problem.ref_smip) {
    out += "ref-smip " + format_double(problem.ref_smip->value);
    if (!problem.ref_smip->note.empty()) out += " " + problem.ref_smip->note;
    out += '\n';
  }
  if (problem.ref_ld) {
    out += "ref-ld " + format_double(problem.ref_ld->value);
    if (!problem.ref_ld->note.empty()) out += " " + problem.ref_ld->note;
    out += '\n';
  }
  out += "first-stage\n";
  out += "vars " + std::to_string(problem.num_x()) + "\n";
  write_vec(out, "obj", problem.first.obj);
  write_vec(out, "lb", problem.first.lb);
  write_vec(out, "ub", problem.first.ub);
  write_kinds(out, problem.first.kind);
  for (const auto& row : problem.first.rows) {
    out += std::string("row ") + rel_token(row.rel) + ' ' +
           format_double(row.rhs);
    for (double c : row.coeffs) out += ' ' + format_double(c);
    out += '\n';
  }
  out += "end\n";
  for (const auto& sc : problem.scenarios) {
    out += "scenario\n";
    out += "prob " + format_double(sc.prob) + "\n";
    out += "vars " + std::to_string(sc.num_y()) + "\n";
    write_vec(out, "obj", sc.obj);
    write_vec(out, "lb", sc.y_lb);
    write_vec(out, "ub", sc.y_ub);
    write_kinds(out, sc.y_kind);
    for (int i = 0; i < sc.num_rows(); ++i) {
      out += std::string("row ") + rel_token(sc.row_rel[i]) + ' ' +
             format_double(sc.rhs[i]);
      for (double c : sc.T[i]) out += ' ' + format_double(c);
      for (double c : sc.W[i]) out += ' ' + format_double(c);
      out += '\n';
    }
    out += "end\n";
  }
  return out;
}

void write_trace_csv(std::ostream& os,
                     const std::vector<IterationRecord>& trace) {
  os << "iter,wall_s,phi,best_phi,residual,milp_solves,vertices,flags\n";
  for (const auto& r : trace) {
    os << r.k << ',' << format_double(r.wall_s) << ',' << format_double(r.phi)
       << ',' << format_double(r.best_phi) << ',' << format_double(r.residual)
       << ',' << r.milp_solves << ',' << r.vertices << ',' << r.flags << '\n';
  }
}

}  // namespace fwph
