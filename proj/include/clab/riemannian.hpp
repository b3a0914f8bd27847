#pragma once

#include "clab/metric.hpp"

namespace clab {

// G[k](i,j) = Gamma^k_ij.
using Christoffel = std::vector<Mat>;

inline Christoffel christoffel(const MetricField& m, const Vec& q) {
  const int n = m.dim;
  const MetricJet j = m.jet(q, 1);
  check_spd(j.g);
  const Mat gi = j.g.inverse();
  // lower[l](i,j) = d_i g_jl + d_j g_il - d_l g_ij
  Christoffel G(n, Mat::Zero(n, n));
  for (int l = 0; l < n; ++l) {
    Mat lower(n, n);
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj) lower(i, jj) = j.dg[i](jj, l) + j.dg[jj](i, l) - j.dg[l](i, jj);
    for (int k = 0; k < n; ++k) G[k] += 0.5 * gi(k, l) * lower;
  }
  return G;
}

// dG[m][k](i,j) = d_m Gamma^k_ij.
inline std::vector<Christoffel> christoffel_derivative(const MetricField& metric, const Vec& q) {
  const int n = metric.dim;
  const MetricJet j = metric.jet(q, 2);
  const Mat gi = j.g.inverse();
  std::vector<Mat> lower(n, Mat(n, n));
  for (int l = 0; l < n; ++l)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) lower[l](a, b) = j.dg[a](b, l) + j.dg[b](a, l) - j.dg[l](a, b);
  std::vector<Christoffel> dG(n, Christoffel(n, Mat::Zero(n, n)));
  for (int m = 0; m < n; ++m) {
    const Mat dgi = -gi * j.dg[m] * gi;
    for (int l = 0; l < n; ++l) {
      Mat dlower(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          dlower(a, b) = j.d2g[m][a](b, l) + j.d2g[m][b](a, l) - j.d2g[m][l](a, b);
      for (int k = 0; k < n; ++k) dG[m][k] += 0.5 * (dgi(k, l) * lower[l] + gi(k, l) * dlower);
    }
  }
  return dG;
}

// Gamma^k(u, v).
inline Vec contract(const Christoffel& G, const Vec& u, const Vec& v) {
  Vec out(static_cast<int>(G.size()));
  for (std::size_t k = 0; k < G.size(); ++k) out(static_cast<int>(k)) = u.dot(G[k] * v);
  return out;
}

struct ClosedCurve {
  Mat pts;      // n x N lifted samples; the sample after the last is pts.col(0) + beta
  IVec beta;
  double period = 1;  // parameter length
  Mat vel;      // optional n x N velocities w.r.t. the parameter
  double length = 0;

  int dim() const { return static_cast<int>(pts.rows()); }
  int size() const { return static_cast<int>(pts.cols()); }
  Vec point(int i) const {
    const int N = size();
    const int w = ((i % N) + N) % N;
    const int lap = (i - w) / N;
    return pts.col(w) + static_cast<double>(lap) * beta.cast<double>();
  }
};

inline double polyline_length(const MetricField& m, const ClosedCurve& c) {
  double L = 0;
  for (int i = 0; i < c.size(); ++i) {
    const Vec a = c.point(i), b = c.point(i + 1);
    const Vec d = b - a;
    L += std::sqrt(d.dot(m.eval(0.5 * (a + b)) * d));
  }
  return L;
}

inline ClosedCurve make_curve(const MetricField& m, Mat pts, IVec beta, double period = 1) {
  ClosedCurve c;
  c.pts = std::move(pts);
  c.beta = std::move(beta);
  c.period = period;
  c.length = polyline_length(m, c);
  return c;
}

inline ClosedCurve straight_curve(const MetricField& m, const Vec& q0, const IVec& beta, int N) {
  Mat pts(q0.size(), N);
  for (int i = 0; i < N; ++i) pts.col(i) = q0 + (static_cast<double>(i) / N) * beta.cast<double>();
  return make_curve(m, pts, beta);
}

struct GeodesicPath {
  Vec t;
  Mat q;  // n x (steps+1)
  Mat v;
  double max_speed_drift = 0;
};

inline Vec geodesic_accel(const MetricField& m, const Vec& q, const Vec& v) {
  return -contract(christoffel(m, q), v, v);
}

inline GeodesicPath geodesic_shoot(const MetricField& m, const Vec& q0, const Vec& v0, double T, int steps) {
  require(steps > 0, ErrorKind::InvalidArgument, "step count must be positive");
  require(v0.norm() > 0, ErrorKind::InvalidArgument, "initial velocity must be nonzero");
  const int n = m.dim;
  const double h = T / steps;
  GeodesicPath P;
  P.t.resize(steps + 1);
  P.q.resize(n, steps + 1);
  P.v.resize(n, steps + 1);
  Vec q = q0, v = v0;
  const double s0 = m.norm(q0, v0);
  P.t(0) = 0;
  P.q.col(0) = q;
  P.v.col(0) = v;
  for (int s = 1; s <= steps; ++s) {
    const Vec k1q = v, k1v = geodesic_accel(m, q, v);
    const Vec k2q = v + 0.5 * h * k1v, k2v = geodesic_accel(m, q + 0.5 * h * k1q, k2q);
    const Vec k3q = v + 0.5 * h * k2v, k3v = geodesic_accel(m, q + 0.5 * h * k2q, k3q);
    const Vec k4q = v + h * k3v, k4v = geodesic_accel(m, q + h * k3q, k4q);
    q += h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    P.t(s) = s * h;
    P.q.col(s) = q;
    P.v.col(s) = v;
    P.max_speed_drift = std::max(P.max_speed_drift, std::abs(m.norm(q, v) - s0));
  }
  return P;
}

// Gram-Schmidt in the g inner product, starting from `first` and then the coordinate frame.
inline Mat gram_schmidt_frame(const Mat& g, const Vec& first) {
  const int n = static_cast<int>(g.rows());
  Mat E(n, n);
  int filled = 0;
  auto push = [&](Vec v) {
    for (int j = 0; j < filled; ++j) v -= E.col(j).dot(g * v) * E.col(j);
    for (int j = 0; j < filled; ++j) v -= E.col(j).dot(g * v) * E.col(j);
    const double nv = std::sqrt(v.dot(g * v));
    if (nv < 1e-8) return;
    E.col(filled++) = v / nv;
  };
  push(first);
  for (int i = 0; i < n && filled < n; ++i) push(Vec::Unit(n, i));
  return E;
}

namespace detail {

// dV/dt = -Gamma(qdot, V) over a linear segment, RK4 with `sub` substeps.
inline Mat transport_segment(const MetricField& m, const Vec& a, const Vec& b, Mat V, int sub) {
  const Vec d = b - a;
  const double h = 1.0 / sub;
  auto rhs = [&](double t, const Mat& W) {
    const Christoffel G = christoffel(m, a + t * d);
    Mat out(W.rows(), W.cols());
    for (int c = 0; c < W.cols(); ++c) out.col(c) = -contract(G, d, W.col(c));
    return out;
  };
  for (int s = 0; s < sub; ++s) {
    const double t = s * h;
    const Mat k1 = rhs(t, V);
    const Mat k2 = rhs(t + 0.5 * h, V + 0.5 * h * k1);
    const Mat k3 = rhs(t + 0.5 * h, V + 0.5 * h * k2);
    const Mat k4 = rhs(t + h, V + h * k3);
    V += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return V;
}

}  // namespace detail

struct TransportResult {
  Mat O;           // E(end) = E(0) O in the g-orthonormal start frame
  Mat start_frame;
  double max_inner_drift = 0;
};

inline TransportResult parallel_transport_full(const MetricField& m, const ClosedCurve& c, int substeps = 8) {
  const int N = c.size();
  require(N >= 2, ErrorKind::InvalidCurve, "curve needs at least two samples");
  for (int i = 0; i < N; ++i)
    require((c.point(i + 1) - c.point(i)).norm() > 1e-14, ErrorKind::InvalidCurve, "zero-speed segment");
  const Vec q0 = c.point(0);
  const Mat g0 = m.eval(q0);
  TransportResult R;
  R.start_frame = gram_schmidt_frame(g0, c.point(1) - q0);
  Mat V = R.start_frame;
  for (int i = 0; i < N; ++i) {
    V = detail::transport_segment(m, c.point(i), c.point(i + 1), V, substeps);
    const Mat gram = V.transpose() * m.eval(c.point(i + 1)) * V;
    R.max_inner_drift = std::max(R.max_inner_drift, (gram - Mat::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff());
  }
  R.O = R.start_frame.transpose() * g0 * V;
  return R;
}

inline Mat parallel_transport(const MetricField& m, const ClosedCurve& c) { return parallel_transport_full(m, c).O; }

// State carried along a unit-speed geodesic: position, velocity and a parallel normal frame.
struct GeodesicFrameState {
  Vec q, v;
  Mat V;  // n x (n-1)
};

namespace detail {

inline GeodesicFrameState frame_flow_step(const MetricField& m, const GeodesicFrameState& s, double h) {
  auto rhs = [&](const GeodesicFrameState& x) {
    const Christoffel G = christoffel(m, x.q);
    GeodesicFrameState d;
    d.q = x.v;
    d.v = -contract(G, x.v, x.v);
    d.V.resize(x.V.rows(), x.V.cols());
    for (int c = 0; c < x.V.cols(); ++c) d.V.col(c) = -contract(G, x.v, x.V.col(c));
    return d;
  };
  auto axpy = [](const GeodesicFrameState& x, double a, const GeodesicFrameState& d) {
    return GeodesicFrameState{x.q + a * d.q, x.v + a * d.v, x.V + a * d.V};
  };
  const auto k1 = rhs(s);
  const auto k2 = rhs(axpy(s, 0.5 * h, k1));
  const auto k3 = rhs(axpy(s, 0.5 * h, k2));
  const auto k4 = rhs(axpy(s, h, k3));
  GeodesicFrameState out = s;
  out.q += h / 6 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q);
  out.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
  out.V += h / 6 * (k1.V + 2 * k2.V + 2 * k3.V + k4.V);
  return out;
}

inline double torus_distance(const Vec& a, const Vec& b) {
  Vec d = a - b;
  for (int i = 0; i < d.size(); ++i) d(i) -= std::round(d(i));
  return d.norm();
}

}  // namespace detail

struct FermiChart {
  MetricField metric;
  ClosedCurve center;          // unit-speed samples, period = length
  std::vector<GeodesicFrameState> samples;  // at t_i = i * length / N
  Mat O;
  double half_width = 0;

  double length() const { return center.period; }

  GeodesicFrameState state_at(double xn) const {
    const int N = static_cast<int>(samples.size());
    const double h = length() / N;
    double u = xn / h;
    int i = static_cast<int>(std::llround(u));
    const double dt = xn - i * h;
    int w = ((i % N) + N) % N;
    int lap = (i - w) / N;
    GeodesicFrameState s = samples[w];
    // shift by whole laps: position by beta, frame by O
    if (lap != 0) {
      s.q += static_cast<double>(lap) * center.beta.cast<double>();
      Mat Ok = Mat::Identity(O.rows(), O.cols());
      for (int k = 0; k < std::abs(lap); ++k) Ok = (lap > 0 ? O : Mat(O.transpose())) * Ok;
      s.V = s.V * Ok;
    }
    if (std::abs(dt) > 0) {
      const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(dt) / (h / 4))));
      for (int k = 0; k < sub; ++k) s = detail::frame_flow_step(metric, s, dt / sub);
    }
    return s;
  }

  // phi(x_n, x') = exp_{gamma(x_n)}(sum x'_i V_i(x_n))
  Vec map(double xn, const Vec& xp, int exp_steps = 16) const {
    const GeodesicFrameState s = state_at(xn);
    const Vec w = s.V * xp;
    if (w.norm() == 0) return s.q;
    const GeodesicPath P = geodesic_shoot(metric, s.q, w, 1.0, exp_steps);
    return P.q.col(exp_steps);
  }

  Mat jacobian(double xn, const Vec& xp, double h = 1e-4) const {
    const int n = metric.dim;
    Mat D(n, n);
    for (int i = 0; i < n - 1; ++i) {
      Vec e = Vec::Zero(n - 1);
      e(i) = h;
      D.col(i) = (map(xn, xp + e) - map(xn, xp - e)) / (2 * h);
    }
    D.col(n - 1) = (map(xn + h, xp) - map(xn - h, xp)) / (2 * h);
    return D;
  }

  // Metric in chart coordinates ordered (x_1..x_{n-1}, x_n).
  Mat pullback(double xn, const Vec& xp) const {
    const Mat D = jacobian(xn, xp);
    return D.transpose() * metric.eval(map(xn, xp)) * D;
  }
};

inline FermiChart fermi_chart(const MetricField& m, const ClosedCurve& geodesic, double half_width,
                              int samples = 64, int substeps = 8) {
  const int n = m.dim;
  require(n >= 2, ErrorKind::InvalidArgument, "Fermi chart needs n >= 2");
  require(half_width > 0, ErrorKind::InvalidArgument, "half_width must be positive");
  const double L = geodesic.length;
  require(L > 0, ErrorKind::InvalidCurve, "geodesic has zero length");
  FermiChart F;
  F.metric = m;
  F.half_width = half_width;

  GeodesicFrameState s;
  s.q = geodesic.point(0);
  Vec v0 = geodesic.vel.size() ? Vec(geodesic.vel.col(0)) : Vec(geodesic.point(1) - geodesic.point(0));
  v0 /= m.norm(s.q, v0);
  s.v = v0;
  const Mat E = gram_schmidt_frame(m.eval(s.q), v0);
  s.V = E.rightCols(n - 1);

  const double h = L / samples;
  F.center.pts.resize(n, samples);
  F.center.vel.resize(n, samples);
  F.center.beta = geodesic.beta;
  F.center.period = L;
  for (int i = 0; i < samples; ++i) {
    F.samples.push_back(s);
    F.center.pts.col(i) = s.q;
    F.center.vel.col(i) = s.v;
    for (int k = 0; k < substeps; ++k) s = detail::frame_flow_step(m, s, h / substeps);
  }
  F.center.length = polyline_length(m, F.center);
  const Mat g0 = m.eval(F.samples[0].q);
  F.O = F.samples[0].V.transpose() * g0 * s.V;

  // fold-over check on a coarse sample grid
  const int nx = std::min(samples, n == 2 ? 48 : 24);
  const int kw = 5;
  std::vector<std::pair<Vec, Vec>> pts;  // (params, image)
  int count_normal = 1;
  for (int i = 0; i < n - 1; ++i) count_normal *= kw;
  for (int a = 0; a < nx; ++a) {
    const double xn = L * a / nx;
    for (int c = 0; c < count_normal; ++c) {
      Vec xp(n - 1);
      int r = c;
      for (int i = 0; i < n - 1; ++i) {
        xp(i) = -half_width + 2 * half_width * (r % kw) / (kw - 1);
        r /= kw;
      }
      Vec par(n);
      par << xp, xn;
      pts.emplace_back(par, F.map(xn, xp, 8));
    }
  }
  auto param_dist = [&](const Vec& a, const Vec& b) {
    double best = 1e300;
    for (int k = -1; k <= 1; ++k) {
      Vec xa = a.head(n - 1);
      if (k == 1) xa = F.O.transpose() * xa;
      if (k == -1) xa = F.O * xa;
      const double dn = a(n - 1) + k * L - b(n - 1);
      best = std::min(best, std::sqrt(dn * dn + (xa - b.head(n - 1)).squaredNorm()));
    }
    return best;
  };
  const double spacing = std::min(L / nx, 2 * half_width / (kw - 1));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (param_dist(pts[i].first, pts[j].first) < 1e-12) continue;
      Vec d = pts[i].second - pts[j].second;
      for (int a = 0; a < n; ++a) d(a) -= std::round(d(a));
      const double td = std::sqrt(d.dot(m.eval(pts[i].second) * d));
      if (td < 0.25 * spacing) throw Error(ErrorKind::TubeTooWide, "normal exponential map folds over on the sample grid");
    }
  return F;
}

}  // namespace clab
