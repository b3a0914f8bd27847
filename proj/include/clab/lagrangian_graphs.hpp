#pragma once

#include "clab/homology.hpp"
#include "clab/index.hpp"

#include <cstdint>
#include <random>

namespace clab {

// Graph of the closed one-form theta = a + df, q -> (q, theta(q)).
struct GraphLagrangian {
  Vec a;  // cohomology class; real so that small graphs are representable
  FourierSeries f;

  int dim() const { return static_cast<int>(a.size()); }
  Vec form(const Vec& q) const {
    Vec th = a;
    if (!f.terms.empty()) th += f.grad(q);
    return th;
  }
  Mat dform(const Vec& q) const { return f.terms.empty() ? Mat(Mat::Zero(dim(), dim())) : f.hess(q); }
  Vec embed(const Vec& q) const {
    Vec x(2 * dim());
    x << q, form(q);
    return x;
  }
  GraphLagrangian scaled(double c) const {
    GraphLagrangian G{c * a, f.scaled(c)};
    G.f.dim = f.dim;
    return G;
  }
};

inline GraphLagrangian graph_of(const Vec& a, FourierSeries f = {}) {
  if (f.dim == 0) f.dim = static_cast<int>(a.size());
  return {a, std::move(f)};
}

// max over a res^n grid of |theta|_g = sqrt(theta^T g^{-1} theta)
inline double sup_norm(const GraphLagrangian& G, const MetricField& m, int res = 64) {
  require(res >= 2, ErrorKind::InvalidArgument, "grid resolution must be >= 2");
  require(m.dim == G.dim(), ErrorKind::InvalidArgument, "metric dimension mismatch");
  const int n = G.dim();
  double best = 0;
  IVec idx = IVec::Zero(n);
  for (;;) {
    const Vec q = idx.cast<double>() / res;
    const Vec th = G.form(q);
    best = std::max(best, std::sqrt(th.dot(m.eval(q).ldlt().solve(th))));
    int i = 0;
    while (i < n && ++idx(i) >= res) idx(i++) = 0;
    if (i == n) break;
  }
  return best;
}

struct PeriodResult {
  double quadrature = 0;
  double algebraic = 0;  // a . beta
  double discrepancy = 0;
};

// Integral of theta along t -> x0 + t beta by the periodic trapezoid rule.
inline PeriodResult liouville_period_full(const GraphLagrangian& G, const IVec& beta, int samples = 256,
                                          const Vec& x0 = Vec()) {
  require(beta.size() == G.dim(), ErrorKind::InvalidArgument, "class dimension mismatch");
  require(samples >= 8, ErrorKind::InvalidArgument, "need at least 8 samples");
  const Vec b = beta.cast<double>();
  const Vec base = x0.size() ? x0 : Vec(Vec::Zero(G.dim()));
  PeriodResult R;
  for (int i = 0; i < samples; ++i) R.quadrature += G.form(base + (static_cast<double>(i) / samples) * b).dot(b);
  R.quadrature /= samples;
  R.algebraic = G.a.dot(b);
  R.discrepancy = std::abs(R.quadrature - R.algebraic);
  return R;
}

inline double liouville_period(const GraphLagrangian& G, const IVec& beta) {
  return liouville_period_full(G, beta).quadrature;
}

// A closed curve in T*T^n: q lifted to R^n with q(1) = q(0) + beta, and p periodic.
struct PhaseCurve {
  std::function<Vec(double)> q;
  std::function<Vec(double)> p;
};

// Cylinder X(s, t) = (q(s, t), p(s, t)) in T*T^n, with q lifted so that
// q(s, 1) = q(s, 0) + beta. The ends are s = 0 (bottom) and s = 1 (top).
struct CylinderChain {
  std::function<Vec(double, double)> q;
  std::function<Vec(double, double)> p;
  int samples = 512;
  int panels = 4;  // Gauss panels in s
};

// Straight fiber homotopy (1 - s) p_bottom + s p_top over a fixed base loop.
inline CylinderChain straight_chain(std::function<Vec(double)> base, std::function<Vec(double)> bottom,
                                    std::function<Vec(double)> top) {
  CylinderChain C;
  C.q = [base](double, double t) { return base(t); };
  C.p = [bottom, top](double s, double t) { return Vec((1 - s) * bottom(t) + s * top(t)); };
  return C;
}

namespace detail {

inline Vec d_dt(const std::function<Vec(double)>& c, double t, double h = 1e-3) {
  return (8 * (c(t + h) - c(t - h)) - (c(t + 2 * h) - c(t - 2 * h))) / (12 * h);
}

}  // namespace detail

// Lambda = p dq period of a phase curve, trapezoid in t.
inline double lambda_period(const PhaseCurve& c, int samples = 512) {
  double sum = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    sum += c.p(t).dot(detail::d_dt(c.q, t));
  }
  return sum / samples;
}

struct CylinderAreaResult {
  double area = 0;
  double period_top = 0;
  double period_bottom = 0;
  double stokes_defect = 0;
};

// Integral of omega = dp ^ dq over the cylinder: composite 8-point Gauss-Legendre in s,
// trapezoid in t, fourth-order differences for X_s and X_t.
inline CylinderAreaResult cylinder_area_full(const CylinderChain& C) {
  require(C.samples >= 8 && C.panels >= 1 && C.q && C.p, ErrorKind::InvalidArgument, "cylinder chain is incomplete");
  static const double node[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double weight[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  CylinderAreaResult R;
  for (int i = 0; i < C.samples; ++i) {
    const double t = static_cast<double>(i) / C.samples;
    for (int k = 0; k < 8 * C.panels; ++k) {
      const int j = k % 8;
      const double h = 1.0 / C.panels;
      const double s = h * (k / 8 + 0.5 + 0.5 * (j < 4 ? -node[j] : node[j - 4]));
      const double w = 0.5 * h * weight[j % 4];
      const auto in_s = [&](const std::function<Vec(double, double)>& F) {
        return detail::d_dt([&](double x) { return F(x, t); }, s);
      };
      const auto in_t = [&](const std::function<Vec(double, double)>& F) {
        return detail::d_dt([&](double x) { return F(s, x); }, t);
      };
      R.area += w * (in_s(C.p).dot(in_t(C.q)) - in_t(C.p).dot(in_s(C.q)));
    }
  }
  R.area /= C.samples;
  const auto end = [&](double s) {
    return PhaseCurve{[&C, s](double t) { return C.q(s, t); }, [&C, s](double t) { return C.p(s, t); }};
  };
  R.period_top = lambda_period(end(1), C.samples);
  R.period_bottom = lambda_period(end(0), C.samples);
  R.stokes_defect = std::abs(R.area - (R.period_top - R.period_bottom));
  return R;
}

inline double cylinder_area(const CylinderChain& C) { return cylinder_area_full(C).area; }

// Cylinder from the zero section to the graph of G over the straight loop in class beta.
inline CylinderChain graph_cylinder(const GraphLagrangian& G, const IVec& beta, const Vec& x0 = Vec()) {
  const Vec b = beta.cast<double>();
  const Vec base = x0.size() ? x0 : Vec(Vec::Zero(G.dim()));
  const int n = G.dim();
  return straight_chain([base, b](double t) { return Vec(base + t * b); }, [n](double) { return Vec(Vec::Zero(n)); },
                        [G, base, b](double t) { return G.form(base + t * b); });
}

// Maslov index of the loop of tangent planes span[I; d theta] over the straight beta-loop.
inline int maslov_of_graph(const GraphLagrangian& G, const IVec& beta, int samples = 0, const Vec& x0 = Vec()) {
  require(beta.size() == G.dim(), ErrorKind::InvalidArgument, "class dimension mismatch");
  const int n = G.dim();
  const Vec b = beta.cast<double>();
  const Vec base = x0.size() ? x0 : Vec(Vec::Zero(n));
  if (samples <= 0) {
    double hmax = 0;
    for (int i = 0; i < 64; ++i) hmax = std::max(hmax, G.dform(base + (i / 64.0) * b).norm());
    samples = static_cast<int>(std::max(400.0, 400 * (1 + hmax) * std::max(1.0, b.lpNorm<1>())));
  }
  LagrangianLoop L;
  for (int i = 0; i <= samples; ++i) {
    const Vec q = base + (static_cast<double>(i) / samples) * b;
    Mat F(2 * n, n);
    F << Mat::Identity(n, n), G.dform(q);
    L.frames.push_back(F);
  }
  return maslov_loop(L);
}

struct OrderMargin {
  IVec beta;
  double length_small = 0;  // under g
  double length_large = 0;  // under g'
  double margin = 0;        // length_large - length_small
  bool ok = true;
};

struct OrderReport {
  double min_eigen_gap = 0;  // min over the grid of the smallest eigenvalue of g' - g
  std::vector<OrderMargin> margins;
  bool all_ok = true;
};

// Checks l_g(beta) <= l_g'(beta) when g <= g' pointwise. Each search is warm-started
// from the other metric's minimizer, so both lengths are upper bounds of the same kind.
inline OrderReport symplectic_order_check(const MetricField& g, const MetricField& gp, const std::vector<IVec>& classes,
                                          int grid = 32, MinGeodesicOptions opt = {}) {
  require(g.dim == gp.dim, ErrorKind::InvalidArgument, "metric dimensions differ");
  const int n = g.dim;
  OrderReport R;
  R.min_eigen_gap = std::numeric_limits<double>::infinity();
  IVec idx = IVec::Zero(n);
  for (;;) {
    const Vec q = idx.cast<double>() / grid;
    const Eigen::SelfAdjointEigenSolver<Mat> es(gp.eval(q) - g.eval(q));
    R.min_eigen_gap = std::min(R.min_eigen_gap, es.eigenvalues().minCoeff());
    int i = 0;
    while (i < n && ++idx(i) >= grid) idx(i++) = 0;
    if (i == n) break;
  }
  require(R.min_eigen_gap >= -1e-12, ErrorKind::PreconditionViolation, "g <= g' fails on the comparison grid");
  for (const IVec& beta : classes) {
    OrderMargin M;
    M.beta = beta;
    const LengthSpectrumSlice large = loop_search(gp, beta, opt);
    MinGeodesicOptions o = opt;
    o.warm_starts.push_back(large.minimizer);
    const LengthSpectrumSlice small = loop_search(g, beta, o);
    M.length_small = small.min_length;
    M.length_large = large.min_length;
    M.margin = M.length_large - M.length_small;
    M.ok = M.margin >= -1e-8;
    R.all_ok = R.all_ok && M.ok;
    R.margins.push_back(M);
  }
  return R;
}

namespace detail {

inline std::vector<IVec> lattice_ball(int n, int radius) {
  std::vector<IVec> out;
  IVec b = IVec::Constant(n, -radius);
  for (;;) {
    if (b.cwiseAbs().maxCoeff() > 0) out.push_back(b);
    int i = 0;
    while (i < n && b(i) == radius) b(i++) = -radius;
    if (i == n) break;
    ++b(i);
  }
  return out;
}

inline FourierSeries random_series(int n, int modes, int kmax, double amp, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> K(-kmax, kmax);
  std::uniform_real_distribution<double> A(-amp, amp);
  FourierSeries f;
  f.dim = n;
  for (int m = 0; m < modes; ++m) {
    IVec k(n);
    do {
      for (int i = 0; i < n; ++i) k(i) = K(rng);
    } while (k.cwiseAbs().sum() == 0);
    const double c = A(rng), s = A(rng);
    f.terms.push_back({k, c, s});
  }
  return f;
}

}  // namespace detail

struct ClosenessCheck {
  int trials = 0;
  int classes = 0;
  int period_violations = 0;
  int maslov_nonzero = 0;
  double worst_ratio = 0;  // max |period| / (eps l_min)
};

// Random graphs with sup |theta|_g < eps: checks |a . beta| <= eps l_min(beta) over the
// lattice ball and that the Maslov index vanishes on e_1, ..., e_n and their sum.
inline ClosenessCheck closeness_family_check(const MetricField& m, double eps, int trials, int ball,
                                             std::uint64_t seed, MinGeodesicOptions opt = {}) {
  require(eps > 0 && trials >= 1 && ball >= 1, ErrorKind::InvalidArgument, "eps, trials and ball must be positive");
  const int n = m.dim;
  const std::vector<IVec> classes = detail::lattice_ball(n, ball);
  std::vector<double> lmin;
  for (const IVec& b : classes) lmin.push_back(loop_search(m, b, opt).min_length);
  std::vector<IVec> maslov_classes;
  for (int i = 0; i < n; ++i) maslov_classes.push_back(IVec::Unit(n, i));
  maslov_classes.push_back(IVec::Ones(n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1), V(0.3, 0.95);
  ClosenessCheck R;
  R.trials = trials;
  R.classes = static_cast<int>(classes.size());
  for (int t = 0; t < trials; ++t) {
    Vec a(n);
    for (int i = 0; i < n; ++i) a(i) = U(rng);
    GraphLagrangian G = graph_of(a, detail::random_series(n, 3, 2, 0.08, rng));
    G = G.scaled(eps * V(rng) / sup_norm(G, m, 96));
    for (size_t i = 0; i < classes.size(); ++i) {
      const double ratio = std::abs(liouville_period(G, classes[i])) / (eps * lmin[i]);
      R.worst_ratio = std::max(R.worst_ratio, ratio);
      if (ratio > 1 + 1e-12) ++R.period_violations;
    }
    for (const IVec& b : maslov_classes)
      if (maslov_of_graph(G, b) != 0) ++R.maslov_nonzero;
  }
  return R;
}

struct OrderFamilyCheck {
  int pairs = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
};

// Random conformal pairs g = e^{2 phi} delta <= g' = e^{2 (phi + psi)} delta with psi >= 0.
inline OrderFamilyCheck order_family_check(int n, int pairs, const std::vector<IVec>& classes, std::uint64_t seed,
                                           MinGeodesicOptions opt = {}) {
  require(pairs >= 1, ErrorKind::InvalidArgument, "pairs must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  OrderFamilyCheck R;
  R.pairs = pairs;
  for (int p = 0; p < pairs; ++p) {
    const FourierSeries phi = detail::random_series(n, 2, 1, 0.1, rng);
    FourierSeries psi = detail::random_series(n, 2, 1, 0.05, rng);
    double amp = 0;
    for (const auto& t : psi.terms) amp += std::abs(t.cos_coef) + std::abs(t.sin_coef);
    psi.terms.push_back({IVec::Zero(n), amp + 0.1 * U(rng), 0.0});  // constant mode keeps psi >= 0
    FourierSeries sum = phi;
    for (const auto& t : psi.terms) sum.terms.push_back(t);
    const OrderReport rep = symplectic_order_check(conformal_metric(phi), conformal_metric(sum), classes, 16, opt);
    for (const auto& mg : rep.margins) {
      R.worst_margin = std::min(R.worst_margin, mg.margin);
      if (!mg.ok) ++R.violations;
    }
  }
  return R;
}

}  // namespace clab
