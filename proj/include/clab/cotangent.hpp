#pragma once

#include "clab/riemannian.hpp"

#include <ostream>

namespace clab {

// chi = 1 on [0, r0], chi(r) = r on [r1, inf). On [r0, r1], chi' is a quintic
// smoothstep plus a multiple of tau^3 (1 - tau)^3 fixed so that chi(r1) = r1.
class RadialProfile {
 public:
  RadialProfile() : RadialProfile(0.5, 2.0) {}
  RadialProfile(double r0, double r1) : r0_(r0), r1_(r1) {
    require(r0 > 0 && r0 < r1, ErrorKind::InvalidArgument, "radial profile needs 0 < r0 < r1");
    require(r1 > 1, ErrorKind::InvalidArgument, "radial profile needs r1 > 1");
    L_ = r1 - r0;
    c_ = (r1 - 1) / L_ - 0.5;
    for (int i = 0; i <= 200; ++i)
      require(chi_d(r0 + L_ * i / 200.0) >= -1e-14, ErrorKind::InvalidArgument, "radial profile would decrease");
    G1_ = r0_ + blend_integral(r1_);
  }

  double r0() const { return r0_; }
  double r1() const { return r1_; }

  double chi(double r) const {
    if (r <= r0_) return 1;
    if (r >= r1_) return r;
    const double t = (r - r0_) / L_;
    const double iS = t * t * t * t * (2.5 + t * (-3 + t));
    const double iB = 140 * t * t * t * t * (0.25 + t * (-0.6 + t * (0.5 - t / 7)));
    return 1 + L_ * (iS + c_ * iB);
  }
  double chi_d(double r) const {
    if (r <= r0_) return 0;
    if (r >= r1_) return 1;
    const double t = (r - r0_) / L_;
    const double u = t * (1 - t);
    return smoothstep5(t) + 140 * c_ * u * u * u;
  }
  double chi_dd(double r) const {
    if (r <= r0_ || r >= r1_) return 0;
    const double t = (r - r0_) / L_;
    const double u = t * (1 - t);
    return (smoothstep5_d(t) + 420 * c_ * u * u * (1 - 2 * t)) / L_;
  }

  // G(u) = int_0^u dr / chi(r)
  double G(double u) const {
    if (u <= r0_) return u;
    if (u >= r1_) return G1_ + std::log(u / r1_);
    return r0_ + blend_integral(u);
  }

  // f = G^{-1}, so that f' = chi(f), f(0) = 0.
  double f(double s) const {
    if (s <= r0_) return s;
    if (s >= G1_) return r1_ * std::exp(s - G1_);
    double u = r0_ + (s - r0_) / (G1_ - r0_) * L_;
    for (int it = 0; it < 60; ++it) {
      const double du = (G(u) - s) * chi(u);
      u -= du;
      u = std::clamp(u, r0_, r1_);
      if (std::abs(du) < 1e-15 * (1 + u)) break;
    }
    return u;
  }
  double f_d(double s) const { return chi(f(s)); }

 private:
  // int_{r0}^{u} dr / chi(r), u in [r0, r1], composite 10-point Gauss-Legendre.
  double blend_integral(double u) const {
    static const double x[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244, 0.8650633666889845,
                                0.9739065285171717};
    static const double w[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
                                0.0666713443086881};
    const int panels = 16;
    const double h = (u - r0_) / panels;
    double sum = 0;
    for (int p = 0; p < panels; ++p) {
      const double mid = r0_ + (p + 0.5) * h;
      for (int k = 0; k < 5; ++k)
        sum += w[k] * 0.5 * h * (1 / chi(mid + 0.5 * h * x[k]) + 1 / chi(mid - 0.5 * h * x[k]));
    }
    return sum;
  }

  double r0_, r1_, L_, c_, G1_;
};

inline RadialProfile radial_profile(double r0 = 0.5, double r1 = 2.0) { return RadialProfile(r0, r1); }

// omega(X, Y) = X^T Omega Y with omega = sum dp_i ^ dq_i in (q, p) coordinates.
inline Mat omega_matrix(int n) {
  Mat W = Mat::Zero(2 * n, 2 * n);
  W.topRightCorner(n, n) = -Mat::Identity(n, n);
  W.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return W;
}

struct CotangentPoint {
  Vec q, p;
};

struct CotangentFrame {
  Mat H;       // 2n x n horizontal lifts of the coordinate vectors
  Mat F;       // 2n x n vertical vectors
  Vec R;       // Reeb vector (zero on the zero section)
  Vec radial;  // d/dr (zero on the zero section)
  Vec alpha;   // row of the contact form lambda / r
  Mat J;       // 2n x 2n
  double r = 0;
};

inline CotangentFrame frame_at(const MetricField& m, const RadialProfile& prof, const CotangentPoint& pt) {
  const int n = m.dim;
  const Mat g = m.eval(pt.q);
  check_spd(g);
  const Mat gi = g.inverse();
  const Christoffel Gam = christoffel(m, pt.q);
  Mat Gp(n, n);  // (Gp)_{l,i} = Gamma^k_{il} p_k
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += Gam[k](i, l) * pt.p(k);
      Gp(l, i) = s;
    }
  CotangentFrame fr;
  fr.r = std::sqrt(pt.p.dot(gi * pt.p));
  Mat M = Mat::Identity(2 * n, 2 * n);
  M.bottomLeftCorner(n, n) = Gp;
  Mat Minv = Mat::Identity(2 * n, 2 * n);
  Minv.bottomLeftCorner(n, n) = -Gp;
  fr.H = M.leftCols(n);
  fr.F = M.rightCols(n);

  Mat Jhv = gi, Jvh = -g;
  fr.R = Vec::Zero(2 * n);
  fr.radial = Vec::Zero(2 * n);
  fr.alpha = Vec::Zero(2 * n);
  if (fr.r > 0) {
    const double chi = prof.chi(fr.r);
    const Vec gp = gi * pt.p;
    Jhv += (1 / chi - 1) * gp * gp.transpose() / (fr.r * fr.r);
    Jvh -= (chi - 1) * pt.p * pt.p.transpose() / (fr.r * fr.r);
    fr.R = fr.H * (gp / fr.r);
    fr.radial.tail(n) = pt.p / fr.r;
    fr.alpha.head(n) = pt.p / fr.r;
  }
  Mat JB = Mat::Zero(2 * n, 2 * n);
  JB.topRightCorner(n, n) = Jhv;
  JB.bottomLeftCorner(n, n) = Jvh;
  fr.J = M * JB * Minv;
  return fr;
}

inline Mat J_at(const MetricField& m, const RadialProfile& prof, const Vec& q, const Vec& p) {
  return frame_at(m, prof, {q, p}).J;
}

struct DiscreteCylinder {
  int n = 0;
  Vec s, t;              // Ns+1 and Nt nodes
  double ell = 0;
  IVec beta;
  std::vector<Mat> Q, P;  // per s-row, n x Nt; q is lifted so that column Nt would be column 0 + beta

  int Ns() const { return static_cast<int>(s.size()) - 1; }
  int Nt() const { return static_cast<int>(t.size()); }
  Vec q(int i, int j) const {
    const int N = Nt();
    const int w = ((j % N) + N) % N;
    return Q[i].col(w) + static_cast<double>((j - w) / N) * beta.cast<double>();
  }
  Vec p(int i, int j) const {
    const int N = Nt();
    return P[i].col(((j % N) + N) % N);
  }
};

// Samples a unit-speed closed geodesic at Nt equally spaced times, integrating from its first sample.
inline std::pair<Mat, Mat> sample_geodesic(const MetricField& m, const ClosedCurve& geo, int Nt, int substeps = 16) {
  const int n = m.dim;
  Vec q = geo.point(0);
  Vec v = geo.vel.size() ? Vec(geo.vel.col(0)) : Vec(geo.point(1) - geo.point(0));
  v /= m.norm(q, v);
  const double h = geo.length / Nt;
  GeodesicFrameState st{q, v, Mat::Zero(n, 0)};
  Mat Qs(n, Nt), Vs(n, Nt);
  for (int j = 0; j < Nt; ++j) {
    Qs.col(j) = st.q;
    Vs.col(j) = st.v;
    for (int k = 0; k < substeps; ++k) st = detail::frame_flow_step(m, st, h / substeps);
  }
  return {Qs, Vs};
}

inline DiscreteCylinder build_cylinder(const MetricField& m, const RadialProfile& prof, const ClosedCurve& geo,
                                       double S, int Ns, int Nt) {
  require(Ns >= 8 && Nt >= 8, ErrorKind::InvalidArgument, "cylinder grid sizes must be >= 8");
  require(S > 0, ErrorKind::InvalidArgument, "truncation must be positive");
  DiscreteCylinder c;
  c.n = m.dim;
  c.ell = geo.length;
  c.beta = geo.beta;
  c.s = Vec::LinSpaced(Ns + 1, 0.0, S);
  c.t.resize(Nt);
  for (int j = 0; j < Nt; ++j) c.t(j) = c.ell * j / Nt;
  const auto [Qs, Vs] = sample_geodesic(m, geo, Nt);
  Mat flat(c.n, Nt);  // lowered velocities
  for (int j = 0; j < Nt; ++j) flat.col(j) = m.eval(Qs.col(j)) * Vs.col(j);
  for (int i = 0; i <= Ns; ++i) {
    c.Q.push_back(Qs);
    c.P.push_back(prof.f(c.s(i)) * flat);
  }
  return c;
}

// max over interior nodes of |d_s u + J(u) d_t u| with centered differences.
inline double holomorphicity_residual(const DiscreteCylinder& c, const MetricField& m, const RadialProfile& prof) {
  const int n = c.n;
  const double hs = c.s(1) - c.s(0), ht = c.ell / c.Nt();
  double worst = 0;
  for (int i = 1; i < c.Ns(); ++i)
    for (int j = 0; j < c.Nt(); ++j) {
      Vec ds(2 * n), dt(2 * n);
      ds << (c.q(i + 1, j) - c.q(i - 1, j)) / (2 * hs), (c.p(i + 1, j) - c.p(i - 1, j)) / (2 * hs);
      dt << (c.q(i, j + 1) - c.q(i, j - 1)) / (2 * ht), (c.p(i, j + 1) - c.p(i, j - 1)) / (2 * ht);
      const Mat J = J_at(m, prof, c.q(i, j), c.p(i, j));
      worst = std::max(worst, (ds + J * dt).norm());
    }
  return worst;
}

struct EnergyReport {
  double E_omega = 0;
  double E_alpha = 0;
  double E = 0;
  double best_center = 0, best_width = 0;
};

namespace detail {

// Normalized cosine bump on [c - w, c + w] and its primitive from -inf.
struct Bump {
  double c, w;
  double primitive(double r) const {
    if (r <= c - w) return 0;
    if (r >= c + w) return 1;
    const double x = (r - c) / w;
    return 0.5 * (x + 1) + std::sin(kPi * x) / (2 * kPi);
  }
};

}  // namespace detail

inline EnergyReport energy(const DiscreteCylinder& c, const MetricField& m) {
  const int Ns = c.Ns(), Nt = c.Nt();
  std::vector<std::vector<double>> r(Ns + 1, std::vector<double>(Nt));
  double rmax_all = 0;
  for (int i = 0; i <= Ns; ++i)
    for (int j = 0; j < Nt; ++j) {
      r[i][j] = m.conorm(c.q(i, j), c.p(i, j));
      rmax_all = std::max(rmax_all, r[i][j]);
    }
  EnergyReport E;
  if (rmax_all == 0) return E;
  for (int j = 0; j < Nt; ++j)
    if (r[Ns][j] <= 1) throw Error(ErrorKind::TruncationError, "the s = S circle is not inside {r > 1}");

  // line integral of a 1-form w(q,p) . dq along an edge, trapezoid
  auto edge = [&](int i0, int j0, int i1, int j1, const auto& form) {
    const Vec dq = c.q(i1, j1) - c.q(i0, j0);
    return 0.5 * (form(i0, j0) + form(i1, j1)).dot(dq);
  };
  auto circulation = [&](int i, int j, const auto& form) {
    return edge(i, j, i + 1, j, form) + edge(i + 1, j, i + 1, j + 1, form) - edge(i, j + 1, i + 1, j + 1, form) -
           edge(i, j, i, j + 1, form);
  };
  auto lambda = [&](int i, int j) { return Vec(c.p(i, j)); };
  auto alpha = [&](int i, int j) {
    const double rr = r[i][((j % Nt) + Nt) % Nt];
    return rr > 0 ? Vec(c.p(i, j) / rr) : Vec(Vec::Zero(c.n));
  };
  double Ew = 0;
  std::vector<std::vector<double>> circ_alpha(Ns, std::vector<double>(Nt));
  std::vector<std::vector<double>> frac_out(Ns, std::vector<double>(Nt));
  for (int i = 0; i < Ns; ++i)
    for (int j = 0; j < Nt; ++j) {
      auto frac_below = [&](double a, double b) {  // fraction of [a,b] segment with r < 1
        if (a < 1 && b < 1) return 1.0;
        if (a >= 1 && b >= 1) return 0.0;
        const double th = (1 - a) / (b - a);
        return a < 1 ? th : 1 - th;
      };
      const int j1 = (j + 1) % Nt;
      const double inside = 0.5 * (frac_below(r[i][j], r[i + 1][j]) + frac_below(r[i][j1], r[i + 1][j1]));
      const double cw = circulation(i, j, lambda);
      const double ca = circulation(i, j, alpha);
      circ_alpha[i][j] = ca;
      frac_out[i][j] = 1 - inside;
      Ew += inside * cw + (1 - inside) * ca;
    }
  E.E_omega = Ew;

  // sup over bumps of int phi(r) dr ^ alpha = int d(Phi alpha) - Phi d alpha
  const double rtop = [&] {
    double v = 1e300;
    for (int j = 0; j < Nt; ++j) v = std::min(v, r[Ns][j]);
    return v;
  }();
  double best = -1e300;
  for (int wi = 1; wi <= 6; ++wi) {
    const double w = (rtop - 1) * wi / 16.0;
    for (int ci = 0; ci <= 24; ++ci) {
      const double cc = 1 + w + (rtop - 1 - 2 * w) * ci / 24.0;
      const detail::Bump b{cc, w};
      auto phialpha = [&](int i, int j) { return Vec(b.primitive(r[i][((j % Nt) + Nt) % Nt]) * alpha(i, j)); };
      double val = 0;
      for (int i = 0; i < Ns; ++i)
        for (int j = 0; j < Nt; ++j) {
          if (frac_out[i][j] == 0) continue;
          const int j1 = (j + 1) % Nt;
          const double Phi = 0.25 * (b.primitive(r[i][j]) + b.primitive(r[i + 1][j]) + b.primitive(r[i][j1]) +
                                     b.primitive(r[i + 1][j1]));
          val += frac_out[i][j] * (circulation(i, j, phialpha) - Phi * circ_alpha[i][j]);
        }
      if (val > best) {
        best = val;
        E.best_center = cc;
        E.best_width = w;
      }
    }
  }
  E.E_alpha = best;
  E.E = E.E_omega + E.E_alpha;
  return E;
}

inline void write_cylinder_csv(std::ostream& os, const DiscreteCylinder& c) {
  os << "s,t";
  for (int k = 0; k < c.n; ++k) os << ",q_" << k + 1;
  for (int k = 0; k < c.n; ++k) os << ",p_" << k + 1;
  os << "\n";
  os.precision(17);
  for (int i = 0; i <= c.Ns(); ++i)
    for (int j = 0; j < c.Nt(); ++j) {
      os << c.s(i) << "," << c.t(j);
      for (int k = 0; k < c.n; ++k) os << "," << c.Q[i](k, j);
      for (int k = 0; k < c.n; ++k) os << "," << c.P[i](k, j);
      os << "\n";
    }
}

}  // namespace clab
