#pragma once

#include "clab/riemannian.hpp"

#include <ceres/ceres.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace clab {

struct CohomologyClass {
  IVec a;
  FourierSeries f;  // exact part; may be empty
};

struct MinGeodesicOptions {
  int points = 48;          // samples per unit of |beta|_inf, at least 16
  int restarts = 4;
  std::uint64_t seed = 20240611;
  int max_iterations = 3000;
  double perturbation = 0.02;
  std::vector<ClosedCurve> warm_starts;  // extra starting loops
};

struct LengthSpectrumSlice {
  IVec beta;
  std::vector<double> lengths;       // distinct, ascending
  std::vector<ClosedCurve> curves;   // one representative per entry of lengths
  double min_length = 0;
  ClosedCurve minimizer;
  bool partial = false;
  bool converged = true;
  int iterations = 0;
  std::uint64_t seed = 0;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, ClosedCurve best)
      : Error(ErrorKind::ConvergenceFailure, what), best_(std::move(best)) {}
  const ClosedCurve& best() const { return best_; }

 private:
  ClosedCurve best_;
};

namespace detail {

// N * sum_i d_i^T g(mid_i) d_i over the lifted polyline.
class LoopEnergy final : public ceres::FirstOrderFunction {
 public:
  LoopEnergy(MetricField m, IVec beta, int N) : m_(std::move(m)), beta_(beta.cast<double>()), N_(N) {}

  bool Evaluate(const double* x, double* cost, double* grad) const override {
    const int n = m_.dim;
    Eigen::Map<const Mat> X(x, n, N_);
    double E = 0;
    Mat G;
    if (grad) G = Mat::Zero(n, N_);
    for (int i = 0; i < N_; ++i) {
      const Vec a = X.col(i);
      const Vec b = (i + 1 < N_) ? Vec(X.col(i + 1)) : Vec(X.col(0) + beta_);
      const Vec d = b - a;
      const Vec mid = 0.5 * (a + b);
      const MetricJet j = m_.jet(mid, grad ? 1 : 0);
      const Vec gd = j.g * d;
      E += d.dot(gd);
      if (grad) {
        Vec dm(n);
        for (int k = 0; k < n; ++k) dm(k) = d.dot(j.dg[k] * d);
        G.col(i) += -2 * gd + 0.5 * dm;
        G.col((i + 1) % N_) += 2 * gd + 0.5 * dm;
      }
    }
    *cost = N_ * E;
    if (grad) Eigen::Map<Mat>(grad, n, N_) = N_ * G;
    return std::isfinite(*cost);
  }
  int NumParameters() const override { return m_.dim * N_; }

 private:
  MetricField m_;
  Vec beta_;
  int N_;
};

// Resample a closed polyline at equal g-arclength.
inline Mat constant_speed(const MetricField& m, const ClosedCurve& c) {
  const int N = c.size();
  std::vector<double> cum(N + 1, 0.0);
  for (int i = 0; i < N; ++i) {
    const Vec a = c.point(i), b = c.point(i + 1), d = b - a;
    cum[i + 1] = cum[i] + std::sqrt(d.dot(m.eval(0.5 * (a + b)) * d));
  }
  Mat out(c.dim(), N);
  int seg = 0;
  for (int k = 0; k < N; ++k) {
    const double target = cum[N] * k / N;
    while (seg < N - 1 && cum[seg + 1] < target) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double w = span > 0 ? (target - cum[seg]) / span : 0.0;
    out.col(k) = (1 - w) * c.point(seg) + w * c.point(seg + 1);
  }
  return out;
}

inline bool primitive(const IVec& v) {
  int g = 0;
  for (int i = 0; i < v.size(); ++i) g = std::gcd(g, std::abs(v(i)));
  return g == 1;
}

// Integer w with det(beta, w) = 1 (n = 2, primitive beta).
inline IVec bezout_partner(const IVec& b) {
  // extended Euclid on (b0, b1): find x, y with b0*y - b1*x = 1
  long long a = b(0), c = b(1);
  long long x0 = 1, y0 = 0, x1 = 0, y1 = 1;
  while (c != 0) {
    const long long q = a / c;
    std::tie(a, c) = std::make_pair(c, a - q * c);
    std::tie(x0, x1) = std::make_pair(x1, x0 - q * x1);
    std::tie(y0, y1) = std::make_pair(y1, y0 - q * y1);
  }
  // x0*b0 + y0*b1 = a = +-1 ; want b0*w1 - b1*w0 = 1 -> w = (-y0, x0) * a
  IVec w(2);
  w << static_cast<int>(-y0 * a), static_cast<int>(x0 * a);
  return w;
}

}  // namespace detail

inline int default_points(const IVec& beta, int per_unit) {
  return std::max(16, per_unit * std::max(1, beta.cwiseAbs().maxCoeff()));
}

// Multi-start energy minimization. Returns every converged critical loop, clustered by length.
inline LengthSpectrumSlice loop_search(const MetricField& m, const IVec& beta, const MinGeodesicOptions& opt) {
  require(beta.size() == m.dim, ErrorKind::InvalidArgument, "class dimension mismatch");
  require(beta.cwiseAbs().maxCoeff() > 0, ErrorKind::InvalidArgument, "class must be nonzero");
  require(opt.restarts >= 1, ErrorKind::InvalidArgument, "restarts must be >= 1");
  const int n = m.dim;
  const int N = default_points(beta, opt.points);
  LengthSpectrumSlice out;
  out.beta = beta;
  out.seed = opt.seed;

  if (m.constant) {
    const ClosedCurve c = straight_curve(m, Vec::Zero(n), beta, N);
    out.lengths = {c.length};
    out.curves = {c};
    out.min_length = c.length;
    out.minimizer = c;
    return out;
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Vec bd = beta.cast<double>();
  std::vector<Mat> starts;
  for (const auto& w : opt.warm_starts) starts.push_back(detail::constant_speed(m, w));
  const bool stratify = n == 2 && detail::primitive(beta);
  const IVec partner = stratify ? detail::bezout_partner(beta) : IVec();
  for (int r = 0; r < opt.restarts; ++r) {
    Vec q0(n);
    if (stratify) {
      q0 = (static_cast<double>(r) / opt.restarts + 0.1 * (U(rng) - 0.5) / opt.restarts) * partner.cast<double>();
    } else {
      for (int i = 0; i < n; ++i) q0(i) = r == 0 ? 0.0 : U(rng);
    }
    Mat X(n, N);
    std::vector<double> amp(n * 3), ph(n * 3);
    for (auto& a : amp) a = opt.perturbation * (2 * U(rng) - 1);
    for (auto& p : ph) p = 2 * kPi * U(rng);
    for (int i = 0; i < N; ++i) {
      const double t = static_cast<double>(i) / N;
      X.col(i) = q0 + t * bd;
      for (int a = 0; a < n; ++a)
        for (int h = 0; h < 3; ++h) X(a, i) += amp[a * 3 + h] * std::sin(2 * kPi * (h + 1) * t + ph[a * 3 + h]);
    }
    starts.push_back(X);
  }

  struct Found {
    double length;
    ClosedCurve curve;
    bool converged;
  };
  std::vector<Found> found;
  bool any_converged = false;
  for (const Mat& X0 : starts) {
    Mat X = X0;
    if (X.cols() != N) {
      ClosedCurve tmp;
      tmp.pts = X;
      tmp.beta = beta;
      ClosedCurve rs;
      rs.beta = beta;
      rs.pts.resize(n, N);
      for (int i = 0; i < N; ++i) {
        const double u = static_cast<double>(i) * X.cols() / N;
        const int k = static_cast<int>(std::floor(u));
        const double w = u - k;
        rs.pts.col(i) = (1 - w) * tmp.point(k) + w * tmp.point(k + 1);
      }
      X = rs.pts;
    }
    ceres::GradientProblem problem(new detail::LoopEnergy(m, beta, N));
    ceres::GradientProblemSolver::Options so;
    so.line_search_direction_type = ceres::LBFGS;
    so.max_num_iterations = opt.max_iterations;
    so.function_tolerance = 1e-15;
    so.gradient_tolerance = 1e-11;
    so.parameter_tolerance = 1e-15;
    so.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary sum;
    ceres::Solve(so, problem, X.data(), &sum);
    const bool conv = sum.termination_type == ceres::CONVERGENCE;
    any_converged = any_converged || conv;
    out.iterations += static_cast<int>(sum.iterations.size());
    ClosedCurve c = make_curve(m, X, beta);
    for (int pass = 0; pass < 4; ++pass) c.pts = detail::constant_speed(m, c);
    c.length = polyline_length(m, c);
    found.push_back({c.length, c, conv});
  }
  std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
    if (a.length != b.length) return a.length < b.length;
    return std::lexicographical_compare(a.curve.pts.data(), a.curve.pts.data() + a.curve.pts.size(),
                                        b.curve.pts.data(), b.curve.pts.data() + b.curve.pts.size());
  });
  out.converged = any_converged;
  const double lmin = found.front().length;
  for (const auto& f : found) {
    if (!f.converged && any_converged) continue;
    if (out.lengths.empty() || f.length - out.lengths.back() > 1e-4 * lmin) {
      out.lengths.push_back(f.length);
      out.curves.push_back(f.curve);
    }
  }
  if (out.lengths.empty()) {
    out.lengths.push_back(found.front().length);
    out.curves.push_back(found.front().curve);
  }
  out.min_length = out.lengths.front();
  out.minimizer = out.curves.front();
  if (!any_converged) throw ConvergenceError("no restart converged", out.minimizer);
  return out;
}

inline LengthSpectrumSlice min_geodesic(const MetricField& m, const IVec& beta, int restarts,
                                        MinGeodesicOptions opt = {}) {
  opt.restarts = restarts;
  return loop_search(m, beta, opt);
}

inline LengthSpectrumSlice length_gap(const MetricField& m, const IVec& beta, int count, MinGeodesicOptions opt = {}) {
  require(count >= 2, ErrorKind::InvalidArgument, "count must be >= 2");
  if (opt.restarts < 4 * count) opt.restarts = 4 * count;
  LengthSpectrumSlice s = loop_search(m, beta, opt);
  if (static_cast<int>(s.lengths.size()) < count) {
    s.partial = true;
  } else {
    s.lengths.resize(count);
    s.curves.resize(count);
  }
  return s;
}

inline double gap(const LengthSpectrumSlice& s) {
  return s.lengths.size() >= 2 ? s.lengths[1] - s.lengths[0] : 0.0;
}

struct StableNormResult {
  double value = 0;
  IVec argmax;
  double last_increment = 0;  // value(B) - value(B-1)
  int classes = 0;
};

// Max of a(beta)/l_min(beta) over 0 < |beta|_inf <= B with a(beta) > 0.
// Visited classes are appended to `visited` when it is non-null.
inline StableNormResult stable_norm_full(const MetricField& m, const Vec& a, int B, MinGeodesicOptions opt = {},
                                         std::vector<LengthSpectrumSlice>* visited = nullptr) {
  require(B >= 1, ErrorKind::InvalidArgument, "lattice radius must be >= 1");
  require(a.size() == m.dim, ErrorKind::InvalidArgument, "class dimension mismatch");
  const int n = m.dim;
  StableNormResult R;
  double best_inner = 0;  // over |beta|_inf <= B-1
  bool any = false;
  IVec beta = IVec::Constant(n, -B);
  for (;;) {
    const int radius = beta.cwiseAbs().maxCoeff();
    const double ab = a.dot(beta.cast<double>());
    if (radius > 0 && ab > 1e-12) {
      LengthSpectrumSlice slice = loop_search(m, beta, opt);
      const double len = slice.min_length;
      if (visited) visited->push_back(std::move(slice));
      const double v = ab / len;
      ++R.classes;
      if (!any || v > R.value) {
        R.value = v;
        R.argmax = beta;
      }
      if (radius <= B - 1) best_inner = std::max(best_inner, v);
      any = true;
    }
    int i = 0;
    while (i < n && beta(i) == B) beta(i++) = -B;
    if (i == n) break;
    ++beta(i);
  }
  if (!any) throw Error(ErrorKind::EmptyCone, "no class with a(beta) > 0 inside the lattice ball");
  R.last_increment = B > 1 ? R.value - best_inner : R.value;
  return R;
}

inline double stable_norm(const MetricField& m, const CohomologyClass& a, int B = 5, MinGeodesicOptions opt = {}) {
  return stable_norm_full(m, a.a.cast<double>(), B, std::move(opt)).value;
}

}  // namespace clab
