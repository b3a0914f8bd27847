#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace clab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

enum class ErrorKind {
  InvalidArgument,
  InvalidMetric,
  InvalidCurve,
  TubeTooWide,
  ConvergenceFailure,
  EmptyCone,
  TruncationError,
  EpsilonTooLarge,
  AssemblyError,
  NumericalFailure,
  ResolutionError,
  DegenerateEndpoint,
  InvalidProfile,
  PreconditionViolation,
  ParseError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidMetric: return "invalid-metric";
    case ErrorKind::InvalidCurve: return "invalid-curve";
    case ErrorKind::TubeTooWide: return "tube-too-wide";
    case ErrorKind::ConvergenceFailure: return "convergence-failure";
    case ErrorKind::EmptyCone: return "empty-cone";
    case ErrorKind::TruncationError: return "truncation-error";
    case ErrorKind::EpsilonTooLarge: return "epsilon-too-large";
    case ErrorKind::AssemblyError: return "assembly-error";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::ResolutionError: return "resolution-error";
    case ErrorKind::DegenerateEndpoint: return "degenerate-endpoint";
    case ErrorKind::InvalidProfile: return "invalid-profile";
    case ErrorKind::PreconditionViolation: return "precondition-violation";
    case ErrorKind::ParseError: return "parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

constexpr double kPi = 3.14159265358979323846;

// Quintic smoothstep on [0,1] and its first two derivatives.
inline double smoothstep5(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * t * (t * (6 * t - 15) + 10);
}
inline double smoothstep5_d(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 30 * t * t * (t - 1) * (t - 1);
}
inline double smoothstep5_dd(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 60 * t * (t - 1) * (2 * t - 1);
}

// Monotone 0 -> 1 ramp on [a, b]. The slope is a plateau with C1 cubic
// shoulders of width w at both ends, so the peak slope is 1/(b - a - w).
struct Ramp {
  double a = 0, b = 1, w = 0.1;

  double slope_max() const { return 1.0 / (b - a - w); }

  double value(double x) const {
    if (x <= a) return 0;
    if (x >= b) return 1;
    const double s = slope_max();
    const double L = b - a;
    const double u = x - a;
    auto shoulder = [&](double d) {  // integral of s*(3t^2-2t^3) over [0,d], t = d/w
      const double t = d / w;
      return s * w * (t * t * t - 0.5 * t * t * t * t);
    };
    if (u < w) return shoulder(u);
    if (u > L - w) return 1.0 - shoulder(L - u);
    return shoulder(w) + s * (u - w);
  }

  double deriv(double x) const {
    if (x <= a || x >= b) return 0;
    const double s = slope_max();
    const double L = b - a;
    const double u = x - a;
    auto sh = [&](double d) {
      const double t = d / w;
      return s * t * t * (3 - 2 * t);
    };
    if (u < w) return sh(u);
    if (u > L - w) return sh(L - u);
    return s;
  }
};

inline double wrap01(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y -= 1.0;
  return y;
}

}  // namespace clab
