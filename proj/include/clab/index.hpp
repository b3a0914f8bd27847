#pragma once

#include "clab/riemannian.hpp"

#include <Eigen/Eigenvalues>

#include <complex>
#include <istream>
#include <numeric>

namespace clab {

using CMat = Eigen::MatrixXcd;
using cdouble = std::complex<double>;

// J0 in (x, y) order, J0 = [[0, -I], [I, 0]].
inline Mat j0(int n) {
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = -Mat::Identity(n, n);
  J.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return J;
}

struct LagrangianLoop {
  std::vector<Mat> frames;  // 2n x n, rows in (x, y) order
};

struct SymplecticPath {
  std::vector<double> t;
  std::vector<Mat> samples;  // 2n x 2n, samples[0] = Id
  int n() const { return samples.empty() ? 0 : static_cast<int>(samples[0].rows()) / 2; }
};

struct IndexData {
  int n = 1;
  int euler = 0;  // Euler characteristic of the punctured surface
  int c1 = 0;
  int maslov = 0;
  std::vector<int> cz_plus, cz_minus;
  int punctures = 0;
};

namespace detail {

inline double wrap_pi(double a) { return a - 2 * kPi * std::round(a / (2 * kPi)); }

// X + iY for an orthonormal basis of the plane spanned by F.
inline CMat unitary_frame(const Mat& F) {
  const int n = static_cast<int>(F.cols());
  Eigen::HouseholderQR<Mat> qr(F);
  const Mat Q = qr.householderQ() * Mat::Identity(F.rows(), n);
  const int h = static_cast<int>(F.rows()) / 2;
  CMat U(h, n);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < n; ++j) U(i, j) = cdouble(Q(i, j), Q(h + i, j));
  return U;
}

inline double lagrangian_defect(const Mat& F) {
  const int n = static_cast<int>(F.rows()) / 2;
  const double s = std::max(F.squaredNorm(), 1e-300);
  return (F.transpose() * j0(n) * F).cwiseAbs().maxCoeff() / s;
}

}  // namespace detail

// Winding number of det^2 of the unitary representative.
inline int maslov_loop(const LagrangianLoop& loop) {
  require(loop.frames.size() >= 2, ErrorKind::InvalidArgument, "loop needs at least two samples");
  const int rows = static_cast<int>(loop.frames[0].rows()), n = static_cast<int>(loop.frames[0].cols());
  require(rows == 2 * n, ErrorKind::InvalidArgument, "loop frames must be 2n x n");
  double total = 0, prev = 0;
  for (size_t i = 0; i < loop.frames.size(); ++i) {
    const Mat& F = loop.frames[i];
    require(F.rows() == rows && F.cols() == n, ErrorKind::InvalidArgument, "loop frames change size");
    require(detail::lagrangian_defect(F) < 1e-10, ErrorKind::InvalidArgument, "loop frame is not Lagrangian");
    const cdouble d = detail::unitary_frame(F).determinant();
    const double ang = std::arg(d * d);
    if (i > 0) {
      const double step = detail::wrap_pi(ang - prev);
      require(std::abs(step) < kPi / 4, ErrorKind::ResolutionError, "loop sampled too coarsely for the Maslov winding");
      total += step;
    }
    prev = ang;
  }
  const CMat U0 = detail::unitary_frame(loop.frames.front()), U1 = detail::unitary_frame(loop.frames.back());
  // closure: the two planes coincide iff U0^* U1 is real orthogonal up to round-off
  const CMat A = U0.adjoint() * U1;
  require(A.imag().norm() < 1e-6, ErrorKind::InvalidArgument, "loop does not close up");
  return static_cast<int>(std::lround(total / (2 * kPi)));
}

namespace detail {

// Eigen-angles of the unitary symmetric W = A A^T with A = U_D^* U_L, where
// L = {(sigma z, Psi z)} and D = {(sigma z, z)} in R^{2n} x R^{2n}, sigma = diag(I, -I).
inline std::vector<double> graph_angles(const Mat& Psi) {
  const int n = static_cast<int>(Psi.rows()) / 2;
  Mat sigma = Mat::Identity(2 * n, 2 * n);
  sigma.bottomRightCorner(n, n) *= -1;
  // coordinates of R^{4n} ordered (x1, x2, y1, y2) so that frames are (x; y)
  auto frame = [&](const Mat& B) {
    Mat F(4 * n, 2 * n);
    F.block(0, 0, n, 2 * n) = sigma.topRows(n);
    F.block(n, 0, n, 2 * n) = B.topRows(n);
    F.block(2 * n, 0, n, 2 * n) = sigma.bottomRows(n);
    F.block(3 * n, 0, n, 2 * n) = B.bottomRows(n);
    return F;
  };
  const CMat UL = unitary_frame(frame(Psi));
  const CMat UD = unitary_frame(frame(Mat::Identity(2 * n, 2 * n)));
  const CMat A = UD.adjoint() * UL;
  const CMat W = A * A.transpose();
  Eigen::ComplexEigenSolver<CMat> es(W);
  std::vector<double> out;
  for (int i = 0; i < W.rows(); ++i) out.push_back(std::arg(es.eigenvalues()(i)));
  return out;
}

// Assigns new angles to tracked ones by minimal total wrapped change.
inline std::vector<double> track(const std::vector<double>& prev, const std::vector<double>& next) {
  const int m = static_cast<int>(prev.size());
  std::vector<int> perm(m), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  auto cost_of = [&](const std::vector<int>& p) {
    double c = 0;
    for (int i = 0; i < m; ++i) c += std::abs(wrap_pi(next[p[i]] - prev[i]));
    return c;
  };
  if (m <= 8) {
    do {
      const double c = cost_of(perm);
      if (c < best_cost) best_cost = c, best = perm;
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> used(m, false);
    best.assign(m, 0);
    for (int i = 0; i < m; ++i) {
      int bj = -1;
      double bc = 1e300;
      for (int j = 0; j < m; ++j)
        if (!used[j] && std::abs(wrap_pi(next[j] - prev[i])) < bc) bc = std::abs(wrap_pi(next[j] - prev[i])), bj = j;
      used[bj] = true;
      best[i] = bj;
    }
  }
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) {
    const double step = wrap_pi(next[best[i]] - prev[i]);
    require(std::abs(step) < kPi / 4, ErrorKind::ResolutionError, "symplectic path sampled too coarsely");
    out[i] = prev[i] + step;
  }
  return out;
}

// Half-integer count of crossings of 2 pi Z, with endpoints on 2 pi Z counted as 1/2.
inline double crossing_count(double a) {
  double u = a / (2 * kPi);
  if (std::abs(u - std::round(u)) < 1e-9) u = std::round(u);
  return 0.5 * (std::floor(u) + std::ceil(u));
}

inline void check_symplectic(const Mat& P, double tol) {
  const int n = static_cast<int>(P.rows()) / 2;
  require(P.rows() == 2 * n && P.cols() == 2 * n, ErrorKind::InvalidArgument, "symplectic samples must be 2n x 2n");
  const Mat J = j0(n);
  require((P.transpose() * J * P - J).cwiseAbs().maxCoeff() < tol * std::max(1.0, P.squaredNorm()),
          ErrorKind::InvalidArgument, "sample is not symplectic");
}

}  // namespace detail

// Robbin-Salamon index of the graph of Psi relative to the diagonal, read off
// from continuously tracked eigen-angles of W. The sign is fixed so that the
// rotation by pi in R^2 has index 1.
inline int conley_zehnder(const SymplecticPath& path) {
  require(path.samples.size() >= 2, ErrorKind::InvalidArgument, "path needs at least two samples");
  const int n = path.n();
  require(n >= 1, ErrorKind::InvalidArgument, "empty symplectic path");
  for (const Mat& P : path.samples) detail::check_symplectic(P, 1e-8);
  require((path.samples[0] - Mat::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff() < 1e-10, ErrorKind::InvalidArgument,
          "path must start at the identity");
  Eigen::JacobiSVD<Mat> svd(path.samples.back() - Mat::Identity(2 * n, 2 * n));
  require(svd.singularValues().minCoeff() > 1e-8, ErrorKind::DegenerateEndpoint, "det(Psi(1) - Id) = 0");
  std::vector<double> a = detail::graph_angles(path.samples[0]);
  for (double& x : a) x = detail::wrap_pi(x);
  const std::vector<double> a0 = a;
  for (size_t i = 1; i < path.samples.size(); ++i) a = detail::track(a, detail::graph_angles(path.samples[i]));
  double mu = 0;
  for (size_t j = 0; j < a.size(); ++j) mu += detail::crossing_count(a[j]) - detail::crossing_count(a0[j]);
  return static_cast<int>(std::lround(mu));
}

inline int fredholm_index(const IndexData& d) {
  const int plus = std::accumulate(d.cz_plus.begin(), d.cz_plus.end(), 0);
  const int minus = std::accumulate(d.cz_minus.begin(), d.cz_minus.end(), 0);
  return d.n * d.euler + 2 * d.c1 + d.maslov + plus - minus + d.punctures;
}

inline int maslov_transfer(int mu_tau, int transfer) { return mu_tau + transfer; }

// Direct sum of symplectic paths sampled at the same times; coordinates (x1, x2, y1, y2).
inline SymplecticPath direct_sum(const SymplecticPath& A, const SymplecticPath& B) {
  require(A.samples.size() == B.samples.size(), ErrorKind::InvalidArgument, "paths must share their sampling");
  const int a = A.n(), b = B.n(), n = a + b;
  SymplecticPath out;
  out.t = A.t;
  for (size_t i = 0; i < A.samples.size(); ++i) {
    const Mat& P = A.samples[i];
    const Mat& Q = B.samples[i];
    Mat M = Mat::Zero(2 * n, 2 * n);
    M.block(0, 0, a, a) = P.block(0, 0, a, a);
    M.block(0, n, a, a) = P.block(0, a, a, a);
    M.block(n, 0, a, a) = P.block(a, 0, a, a);
    M.block(n, n, a, a) = P.block(a, a, a, a);
    M.block(a, a, b, b) = Q.block(0, 0, b, b);
    M.block(a, n + a, b, b) = Q.block(0, b, b, b);
    M.block(n + a, a, b, b) = Q.block(b, 0, b, b);
    M.block(n + a, n + a, b, b) = Q.block(b, b, b, b);
    out.samples.push_back(M);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linearized cogeodesic flow

// Returns R(X, v) v with R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb.
inline Vec curvature_operator(const MetricField& m, const Vec& q, const Vec& X, const Vec& v) {
  const Christoffel G = christoffel(m, q);
  const std::vector<Christoffel> dG = christoffel_derivative(m, q);
  const int n = m.dim;
  Vec out = Vec::Zero(n);
  const Vec Gvv = contract(G, v, v), GXv = contract(G, X, v);
  for (int a = 0; a < n; ++a) {
    double s = 0;
    for (int c = 0; c < n; ++c) s += X(c) * v.dot(dG[c][a] * v) - v(c) * X.dot(dG[c][a] * v);
    s += X.dot(G[a] * Gvv) - v.dot(G[a] * GXv);
    out(a) = s;
  }
  return out;
}

// Jacobi-type flow along a unit-speed geodesic in a parallel orthonormal frame
// (first vector tangent). State (eta, xi) with xi' = eta, eta' = -K xi, i.e.
// Psi' = J0 diag(I, K) Psi.
inline SymplecticPath linearized_cogeodesic_path(const MetricField& m, const ClosedCurve& geodesic, int steps = 400) {
  const int n = m.dim;
  require(n >= 2, ErrorKind::InvalidArgument, "linearized flow needs n >= 2");
  require(steps >= 2, ErrorKind::InvalidArgument, "need at least two steps");
  const double L = geodesic.length;
  require(L > 0, ErrorKind::InvalidCurve, "geodesic has zero length");
  GeodesicFrameState s;
  s.q = geodesic.point(0);
  Vec v0 = geodesic.vel.size() ? Vec(geodesic.vel.col(0)) : Vec(geodesic.point(1) - geodesic.point(0));
  v0 /= m.norm(s.q, v0);
  s.v = v0;
  const Mat E = gram_schmidt_frame(m.eval(s.q), v0);
  s.V = E;  // all n vectors transported, column 0 stays tangent
  const double accel = geodesic_accel(m, s.q, s.v).norm();
  require(accel < 1e3, ErrorKind::InvalidCurve, "curve is not a geodesic");

  auto Kmat = [&](const GeodesicFrameState& st) {
    const Mat g = m.eval(st.q);
    Mat K(n, n);
    for (int j = 0; j < n; ++j) {
      const Vec R = curvature_operator(m, st.q, st.V.col(j), st.v);
      for (int i = 0; i < n; ++i) K(i, j) = st.V.col(i).dot(g * R);
    }
    return Mat(0.5 * (K + K.transpose()));
  };
  const Mat J = j0(n);
  auto S_of = [&](const Mat& K) {
    Mat S = Mat::Zero(2 * n, 2 * n);
    S.topLeftCorner(n, n) = Mat::Identity(n, n);
    S.bottomRightCorner(n, n) = K;
    return S;
  };
  SymplecticPath P;
  Mat Psi = Mat::Identity(2 * n, 2 * n);
  const double h = L / steps;
  P.t.push_back(0);
  P.samples.push_back(Psi);
  for (int i = 0; i < steps; ++i) {
    const GeodesicFrameState mid = detail::frame_flow_step(m, s, 0.5 * h);
    const GeodesicFrameState end = detail::frame_flow_step(m, s, h);
    const Mat A0 = J * S_of(Kmat(s)), Am = J * S_of(Kmat(mid)), A1 = J * S_of(Kmat(end));
    const Mat k1 = A0 * Psi, k2 = Am * (Psi + 0.5 * h * k1), k3 = Am * (Psi + 0.5 * h * k2), k4 = A1 * (Psi + h * k3);
    Psi += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    s = end;
    P.t.push_back((i + 1) * h);
    P.samples.push_back(Psi);
  }
  return P;
}

// Rows and columns of the normal directions (frame vectors 1..n-1) in both halves.
inline SymplecticPath normal_block(const SymplecticPath& P) {
  const int n = P.n(), m = n - 1;
  SymplecticPath out;
  out.t = P.t;
  std::vector<int> idx;
  for (int i = 1; i < n; ++i) idx.push_back(i);
  for (int i = 1; i < n; ++i) idx.push_back(n + i);
  for (const Mat& M : P.samples) {
    Mat B(2 * m, 2 * m);
    for (int i = 0; i < 2 * m; ++i)
      for (int j = 0; j < 2 * m; ++j) B(i, j) = M(idx[i], idx[j]);
    out.samples.push_back(B);
  }
  return out;
}

inline double symplectic_drift(const SymplecticPath& P) {
  const Mat J = j0(P.n());
  double d = 0;
  for (const Mat& M : P.samples) d = std::max(d, (M.transpose() * J * M - J).cwiseAbs().maxCoeff());
  return d;
}

// ---------------------------------------------------------------------------
// CSV import: each line is t followed by the row-major matrix entries.

namespace detail {

inline std::vector<std::vector<double>> read_csv_rows(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        r.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        if (rows.empty() && r.empty()) break;  // header line
        throw Error(ErrorKind::ParseError, "bad number '" + cell + "'");
      }
    }
    if (!r.empty()) rows.push_back(r);
  }
  return rows;
}

}  // namespace detail

inline SymplecticPath read_symplectic_path_csv(std::istream& in) {
  SymplecticPath P;
  for (const auto& r : detail::read_csv_rows(in)) {
    const int cnt = static_cast<int>(r.size()) - 1;
    const int d = static_cast<int>(std::lround(std::sqrt(std::max(cnt, 0))));
    require(d * d == cnt && d % 2 == 0 && d > 0, ErrorKind::ParseError, "path rows need t and (2n)^2 entries");
    Mat M(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) M(i, j) = r[1 + i * d + j];
    P.t.push_back(r[0]);
    P.samples.push_back(M);
  }
  require(!P.samples.empty(), ErrorKind::ParseError, "empty path file");
  return P;
}

inline LagrangianLoop read_lagrangian_loop_csv(std::istream& in) {
  LagrangianLoop L;
  for (const auto& r : detail::read_csv_rows(in)) {
    const int cnt = static_cast<int>(r.size()) - 1;
    const int n = static_cast<int>(std::lround(std::sqrt(std::max(cnt, 0) / 2.0)));
    require(n > 0 && 2 * n * n == cnt, ErrorKind::ParseError, "loop rows need t and 2n^2 entries");
    Mat M(2 * n, n);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = r[1 + i * n + j];
    L.frames.push_back(M);
  }
  require(!L.frames.empty(), ErrorKind::ParseError, "empty loop file");
  return L;
}

}  // namespace clab
