#pragma once

#include "clab/homology.hpp"

#include <numeric>

namespace clab {

// Theta(q) = (a.q + f(q) - a.x0 - f(x0)) mod 1, with differential theta = a + df.
struct CircleValuedPrimitive {
  IVec a;
  FourierSeries f;
  Vec x0;

  double raw(const Vec& q) const {
    double v = a.cast<double>().dot(q);
    if (!f.terms.empty()) v += f.value(q);
    return v;
  }
  double value(const Vec& q) const { return wrap01(raw(q) - raw(x0)); }
  Vec form(const Vec& q) const {
    Vec th = a.cast<double>();
    if (!f.terms.empty()) th += f.grad(q);
    return th;
  }
};

// Periodic profile on R/Z: base + sum of signed ramps.
struct CircleProfile {
  double base = 0;
  std::vector<std::pair<double, Ramp>> ramps;

  double value(double x) const {
    x = wrap01(x);
    double v = base;
    for (const auto& [s, r] : ramps) v += s * r.value(x);
    return v;
  }
  double deriv(double x) const {
    x = wrap01(x);
    double v = 0;
    for (const auto& [s, r] : ramps) v += s * r.deriv(x);
    return v;
  }
};

enum class Partition { Quartered, Refined };

inline const char* to_string(Partition p) { return p == Partition::Quartered ? "quartered" : "refined"; }

struct PairWidths {
  double eps = 0.02;      // refined partition parameter
  double margin = 0.002;  // gap between a plateau interval and the adjacent ramp
  double width = 0.01;    // ramp shoulder width on the circle
  double cutoff_delta = 0.001;  // as a fraction of r: plateau of the cutoff near 0 and r
  double cutoff_width = 0.01;   // as a fraction of r: shoulder width of the cutoff
};

// chi_c^2 = 1 - ramp on [delta, r - delta]; only chi_c^2 and (chi_c^2)' are needed.
struct Cutoff {
  double r = 1;
  Ramp ramp;

  double chi_sq(double rho) const { return 1 - ramp.value(rho); }
  double chi(double rho) const { return std::sqrt(std::max(0.0, chi_sq(rho))); }
  // chi chi' = (chi^2)' / 2
  double chi_chi_d(double rho) const { return -0.5 * ramp.deriv(rho); }
  double chi_d(double rho) const {
    const double c = chi(rho);
    return c > 0 ? chi_chi_d(rho) / c : 0.0;
  }
};

// A function on T*T^n with value and gradient (dq, dp). The gradient may be empty.
struct PhaseField {
  std::function<double(const Vec&, const Vec&)> value;
  std::function<std::pair<Vec, Vec>(const Vec&, const Vec&)> grad;
};

// {H, K} = sum_i dH/dq_i dK/dp_i - dH/dp_i dK/dq_i
inline double poisson_bracket(const PhaseField& H, const PhaseField& K, const Vec& q, const Vec& p,
                              double step = 1e-5) {
  require(step > 0, ErrorKind::InvalidArgument, "finite-difference step must be positive");
  auto gradient = [&](const PhaseField& F) -> std::pair<Vec, Vec> {
    if (F.grad) return F.grad(q, p);
    const int n = static_cast<int>(q.size());
    Vec gq(n), gp(n);
    for (int i = 0; i < n; ++i) {
      Vec e = Vec::Zero(n);
      e(i) = step;
      gq(i) = (F.value(q + e, p) - F.value(q - e, p)) / (2 * step);
      gp(i) = (F.value(q, p + e) - F.value(q, p - e)) / (2 * step);
    }
    return {gq, gp};
  };
  const auto [hq, hp] = gradient(H);
  const auto [kq, kp] = gradient(K);
  return hq.dot(kp) - hp.dot(kq);
}

struct BracketPair {
  MetricField metric;
  CircleValuedPrimitive theta;
  Cutoff cutoff;
  CircleProfile h, k;
  Partition partition = Partition::Refined;
  PairWidths widths;
  double r = 1;

  double rho(const Vec& q, const Vec& p) const { return std::sqrt(p.dot(metric.eval(q).ldlt().solve(p))); }

  double H(const Vec& q, const Vec& p) const {
    const double s = rho(q, p);
    return s >= r ? 0.0 : cutoff.chi(s) * h.value(theta.value(q));
  }
  double K(const Vec& q, const Vec& p) const {
    const double s = rho(q, p);
    return s >= r ? 0.0 : cutoff.chi(s) * k.value(theta.value(q));
  }

  // chi chi' (h'k - hk')(Theta) theta(g^{-1} p) / rho, zero off the support
  double bracket(const Vec& q, const Vec& p) const {
    const double s = rho(q, p);
    if (s <= 0 || s >= r) return 0.0;
    const double x = theta.value(q);
    const double w = h.deriv(x) * k.value(x) - h.value(x) * k.deriv(x);
    if (w == 0) return 0.0;
    const Vec gp = metric.eval(q).ldlt().solve(p);
    return cutoff.chi_chi_d(s) * w * theta.form(q).dot(gp) / s;
  }

  PhaseField field(bool is_h) const {
    const BracketPair self = *this;
    const CircleProfile prof = is_h ? h : k;
    PhaseField F;
    F.value = [self, is_h](const Vec& q, const Vec& p) { return is_h ? self.H(q, p) : self.K(q, p); };
    F.grad = [self, prof](const Vec& q, const Vec& p) {
      const int n = static_cast<int>(q.size());
      const double s = self.rho(q, p);
      if (s <= 0 || s >= self.r) return std::pair<Vec, Vec>{Vec::Zero(n), Vec::Zero(n)};
      const MetricJet J = self.metric.jet(q, 1);
      const Mat gi = J.g.inverse();
      const Vec gp = gi * p;
      Vec drho_q(n);
      for (int i = 0; i < n; ++i) drho_q(i) = -0.5 * gp.dot(J.dg[i] * gp) / s;
      const Vec drho_p = gp / s;
      const double c = self.cutoff.chi(s), cd = self.cutoff.chi_d(s);
      const double x = self.theta.value(q);
      const double pv = prof.value(x), pd = prof.deriv(x);
      return std::pair<Vec, Vec>{cd * pv * drho_q + c * pd * self.theta.form(q), cd * pv * drho_p};
    };
    return F;
  }
};

namespace detail {

inline int gcd_of(const IVec& a) {
  int g = 0;
  for (int i = 0; i < a.size(); ++i) g = std::gcd(g, std::abs(a(i)));
  return g;
}

inline Ramp checked_ramp(double a, double b, double w) {
  require(b - a + 1e-12 >= 2 * w && w > 0, ErrorKind::InvalidProfile, "ramp does not fit between its plateaus");
  return Ramp{a, b, w};
}

}  // namespace detail

inline BracketPair build_pair(const MetricField& metric, const CohomologyClass& a, const Vec& x0, double r,
                              Partition partition, const PairWidths& W) {
  const int n = metric.dim;
  require(a.a.size() == n, ErrorKind::InvalidArgument, "class has the wrong dimension");
  require(detail::gcd_of(a.a) == 1, ErrorKind::InvalidArgument, "class must be primitive");
  require(r > 0, ErrorKind::InvalidArgument, "r must be positive");
  require(W.margin > 0 && W.width > 0 && W.cutoff_delta > 0 && W.cutoff_width > 0, ErrorKind::InvalidArgument,
          "widths must be positive");
  BracketPair P;
  P.metric = metric;
  P.theta.a = a.a;
  P.theta.f = a.f;
  P.theta.x0 = x0.size() ? x0 : Vec(Vec::Zero(n));
  P.r = r;
  P.partition = partition;
  P.widths = W;
  const double m = W.margin, w = W.width;
  if (partition == Partition::Quartered) {
    // h: 0 on [0,1/4], 1 on [1/2,3/4]; k: 0 on [1/4,1/2], 1 on [3/4,1]
    P.h.base = 0;
    P.h.ramps = {{1.0, detail::checked_ramp(0.25 + m, 0.5 - m, w)}, {-1.0, detail::checked_ramp(0.75 + m, 1 - m, w)}};
    P.k.base = 1;
    P.k.ramps = {{-1.0, detail::checked_ramp(m, 0.25 - m, w)}, {1.0, detail::checked_ramp(0.5 + m, 0.75 - m, w)}};
  } else {
    const double e = W.eps;
    require(e > 0 && e < 0.25, ErrorKind::InvalidProfile, "refined partition needs 0 < eps < 1/4");
    // h: 0 on [0,e], 1 on [2e,1/2]; k: 0 on [e,2e], 1 on [1/2,1]. Short ramps use
    // the shoulder width capped to fit.
    const double ws = std::min(w, 0.5 * (e - 2 * m));
    P.h.base = 0;
    P.h.ramps = {{1.0, detail::checked_ramp(e + m, 2 * e - m, ws)}, {-1.0, detail::checked_ramp(0.5 + m, 1 - m, w)}};
    P.k.base = 1;
    P.k.ramps = {{-1.0, detail::checked_ramp(m, e - m, ws)}, {1.0, detail::checked_ramp(2 * e + m, 0.5 - m, w)}};
  }
  const double d = W.cutoff_delta * r, cw = W.cutoff_width * r;
  P.cutoff.r = r;
  P.cutoff.ramp = detail::checked_ramp(d, r - d, cw);
  return P;
}

struct SupGrid {
  int torus = 100;
  int radial = 50;
};

namespace detail {

template <class F>
double golden_max(F f, double a, double b, int iters = 60) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - gr * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + gr * (b - a), fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

struct SupResult {
  double value = 0;
  Vec q, p;
};

// Max of {H, K} over a torus grid x radial grid with p = +-rho theta^sharp / |theta|,
// then a golden-section polish in rho and in each coordinate of q.
inline SupResult sup_bracket_full(const BracketPair& P, const SupGrid& G = {}) {
  require(G.torus >= 100 && G.radial >= 50, ErrorKind::InvalidArgument, "sup grid needs >= 100 per torus axis and >= 50 radial");
  const int n = P.metric.dim;
  auto momentum = [&](const Vec& q, double rho, double sign) {
    const Vec th = P.theta.form(q);
    const double dual = std::sqrt(th.dot(P.metric.eval(q).ldlt().solve(th)));
    if (dual == 0) return Vec(Vec::Zero(n));
    return Vec(sign * rho * th / dual);
  };
  SupResult best;
  best.value = -std::numeric_limits<double>::infinity();
  double best_rho = 0, best_sign = 1;
  IVec idx = IVec::Zero(n);
  for (;;) {
    const Vec q = idx.cast<double>() / G.torus;
    for (int j = 1; j < G.radial; ++j) {
      const double rho = P.r * j / G.radial;
      for (double sign : {1.0, -1.0}) {
        const Vec p = momentum(q, rho, sign);
        const double v = P.bracket(q, p);
        if (v > best.value) best.value = v, best.q = q, best_rho = rho, best_sign = sign;
      }
    }
    int i = 0;
    while (i < n && ++idx(i) >= G.torus) idx(i++) = 0;
    if (i == n) break;
  }
  // polish
  Vec q = best.q;
  double rho = best_rho;
  const double hq = 1.0 / G.torus, hr = P.r / G.radial;
  for (int round = 0; round < 2; ++round) {
    rho = detail::golden_max([&](double s) { return P.bracket(q, momentum(q, s, best_sign)); }, std::max(0.0, rho - hr),
                             std::min(P.r, rho + hr));
    for (int i = 0; i < n; ++i) {
      auto along = [&](double x) {
        Vec y = q;
        y(i) = x;
        return P.bracket(y, momentum(y, rho, best_sign));
      };
      q(i) = detail::golden_max(along, q(i) - hq, q(i) + hq);
    }
  }
  const double polished = P.bracket(q, momentum(q, rho, best_sign));
  if (polished > best.value) {
    best.value = polished;
    best.q = q;
    best_rho = rho;
  }
  best.p = momentum(best.q, best_rho, best_sign);
  return best;
}

inline double sup_bracket(const BracketPair& P, const SupGrid& G = {}) { return sup_bracket_full(P, G).value; }

struct BpBudget {
  int evaluations = 40;
  SupGrid grid;
  int fourier_modes = 1;  // |k|_inf bound for the exact part
  int lattice = 5;        // lattice radius for the stable norm
  PairWidths start = {0.004, 0.0005, 0.004, 0.0005, 0.004};
};

struct BpEstimate {
  double r = 0;
  IVec a;
  double sup = 0;
  double bound = 0;   // 1 / sup
  double target = 0;  // r / |a|_st
  double slack = 0;   // bound / target - 1
  double stable_norm = 0;
  bool budget_exhausted = false;
  int evaluations = 0;
  PairWidths widths;
  FourierSeries potential;
};

// Coordinate descent on the widths and on the Fourier coefficients of the exact part.
inline BpEstimate bp_estimate(const MetricField& metric, const CohomologyClass& a, double r, const BpBudget& B = {},
                              Partition partition = Partition::Refined) {
  const int n = metric.dim;
  require(a.a.size() == n && a.a.cwiseAbs().sum() > 0, ErrorKind::InvalidArgument, "class must be nonzero");
  require(detail::gcd_of(a.a) == 1, ErrorKind::InvalidArgument, "class must be primitive");
  BpEstimate E;
  E.r = r;
  E.a = a.a;
  E.stable_norm = stable_norm(metric, a, B.lattice);
  E.target = r / E.stable_norm;

  // exact part: cos and sin coefficients for each mode with |k|_inf <= fourier_modes, half-space only
  FourierSeries f;
  f.dim = n;
  if (!metric.constant) {
    IVec kk = IVec::Constant(n, -B.fourier_modes);
    for (;;) {
      bool positive = false;
      for (int i = n - 1; i >= 0; --i)
        if (kk(i) != 0) {
          positive = kk(i) > 0;
          break;
        }
      if (positive) f.terms.push_back({kk, 0.0, 0.0});
      int i = 0;
      while (i < n && ++kk(i) > B.fourier_modes) kk(i++) = -B.fourier_modes;
      if (i == n) break;
    }
  }
  PairWidths W = B.start;

  int evals = 0;
  auto evaluate = [&](const PairWidths& w, const FourierSeries& pot) {
    ++evals;
    CohomologyClass c{a.a, pot};
    try {
      return sup_bracket(build_pair(metric, c, Vec(), r, partition, w), B.grid);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidProfile) return std::numeric_limits<double>::infinity();
      throw;
    }
  };
  double best = evaluate(W, f);
  // lower bounds keep the ramps resolvable by the sup grid
  struct Knob {
    double PairWidths::*field;
    double lo;
  };
  std::vector<Knob> knobs = {{&PairWidths::width, 0.002},
                             {&PairWidths::margin, 0.0002},
                             {&PairWidths::cutoff_width, 0.002},
                             {&PairWidths::cutoff_delta, 0.0002}};
  if (partition == Partition::Refined) knobs.push_back({&PairWidths::eps, 0.002});
  double step = 0.05;
  bool improved = true;
  while (improved && evals < B.evaluations) {
    improved = false;
    for (const Knob& kb : knobs) {
      if (evals >= B.evaluations) break;
      PairWidths t = W;
      t.*(kb.field) = std::max(kb.lo, 0.5 * (W.*(kb.field)));
      if (t.*(kb.field) == W.*(kb.field)) continue;
      const double v = evaluate(t, f);
      if (v < best) best = v, W = t, improved = true;
    }
    for (size_t i = 0; i < f.terms.size() && evals < B.evaluations; ++i)
      for (int which = 0; which < 2 && evals < B.evaluations; ++which)
        for (double s : {step, -step}) {
          if (evals >= B.evaluations) break;
          FourierSeries t = f;
          (which ? t.terms[i].sin_coef : t.terms[i].cos_coef) += s;
          const double v = evaluate(W, t);
          if (v < best) {
            best = v, f = t, improved = true;
            break;
          }
        }
    if (!improved && step > 1e-3 && !f.terms.empty()) step *= 0.5, improved = true;
  }
  E.budget_exhausted = evals >= B.evaluations;
  E.evaluations = evals;
  E.sup = best;
  E.bound = 1 / best;
  E.slack = E.bound / E.target - 1;
  E.widths = W;
  E.potential = f;
  return E;
}

struct CliffordResult {
  int n = 0;
  Vec barycenter;
  std::vector<double> facet_distances;
  double distance = 0;
  double r_max = 0;
  double product = 0;  // (1 / (n (n+1))) sqrt(n)
  bool consistent = false;
};

// Simplex {x_i >= 0, sum x_i <= 1} and its barycenter (1/(n+1), ...).
inline CliffordResult clifford(int n) {
  require(n >= 1, ErrorKind::InvalidArgument, "n must be at least 1");
  CliffordResult R;
  R.n = n;
  R.barycenter = Vec::Constant(n, 1.0 / (n + 1));
  // facets nu . x = c with inward normals
  for (int i = 0; i < n; ++i) R.facet_distances.push_back(R.barycenter(i));
  const Vec ones = Vec::Ones(n);
  R.facet_distances.push_back((1 - ones.dot(R.barycenter)) / ones.norm());
  R.distance = *std::min_element(R.facet_distances.begin(), R.facet_distances.end());
  R.r_max = 1 / (std::sqrt(static_cast<double>(n)) * (n + 1));
  R.product = std::sqrt(static_cast<double>(n)) / (n * (n + 1.0));
  R.consistent = std::abs(R.distance - R.r_max) < 1e-9 && std::abs(R.product - R.r_max) < 1e-12;
  return R;
}

}  // namespace clab
