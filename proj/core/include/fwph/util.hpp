#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwph {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class VarKind { Continuous, Integer, Binary };

struct LinearRow {
  Vec coeffs;
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
};

// Base error for everything raised by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int line_, int column_)
      : Error("parse error at " + std::to_string(line_) + ":" +
              std::to_string(column_) + ": " + msg),
        line(line_),
        column(column_) {}
};

struct PreconditionError : Error {
  using Error::Error;
};

struct SubproblemError : Error {
  using Error::Error;
};

struct LimitError : Error {
  using Error::Error;
};

// Neumaier-compensated accumulator. Reductions over scenarios always run
// through this in a fixed order so traces are bit-reproducible.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

inline double dot(const Vec& a, const Vec& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

inline double norm_inf(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double sq_dist(const Vec& a, const Vec& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s.add(d * d);
  }
  return s.value();
}

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& tok, double& out) {
  if (tok == "inf" || tok == "+inf") {
    out = kInf;
    return true;
  }
  if (tok == "-inf") {
    out = -kInf;
    return true;
  }
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace fwph
