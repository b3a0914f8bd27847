#pragma once

#include "clab/cotangent.hpp"
#include "clab/homology.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/SparseExtra>

#include <algorithm>
#include <iomanip>
#include <map>
#include <random>

namespace clab {

using SpMat = Eigen::SparseMatrix<double>;

// ---------------------------------------------------------------------------
// Good metric over a flat base

struct GoodMetricParams {
  Mat base;       // constant SPD base metric
  IVec beta;      // primitive class
  double eps = 0.01;
  double k = 1;   // curvature parameter, k = n C
  Vec x0;         // point on the geodesic, default origin
};

struct GoodMetric {
  MetricField metric;
  FermiChart chart;       // Fermi chart of the base along the geodesic
  ClosedCurve geodesic;
  double support_sq = 0;  // squared tube radius of the bump
  double k = 0;
  double length = 0;
};

namespace detail {

// Bump in u = |x'|^2 / support: 1 on [0, 1/2], 0 from 1 on, quintic in between.
inline double good_bump(double u) { return u <= 0.5 ? 1.0 : 1.0 - smoothstep5(std::min(1.0, 2 * u - 1)); }
inline double good_bump_d(double u) { return u <= 0.5 || u >= 1 ? 0.0 : -2 * smoothstep5_d(2 * u - 1); }
inline double good_bump_dd(double u) { return u <= 0.5 || u >= 1 ? 0.0 : -4 * smoothstep5_dd(2 * u - 1); }

}  // namespace detail

inline GoodMetric good_metric(const GoodMetricParams& P) {
  const int n = static_cast<int>(P.base.rows());
  require(n >= 2 && P.beta.size() == n, ErrorKind::InvalidArgument, "good metric needs n >= 2 and a class in Z^n");
  require(P.eps > 0 && P.k > 0, ErrorKind::InvalidArgument, "eps and k must be positive");
  check_spd(P.base);
  require(detail::primitive(P.beta), ErrorKind::InvalidArgument, "good metric needs a primitive class");
  const Vec x0 = P.x0.size() ? P.x0 : Vec(Vec::Zero(n));
  const Mat g = P.base;
  const Vec b = P.beta.cast<double>();
  const Mat E = gram_schmidt_frame(g, b);
  const Mat En = E.rightCols(n - 1);  // g-orthonormal normal frame

  // normal projections of nearby lattice points; a line class per point
  const int B = 2 * static_cast<int>(P.beta.cwiseAbs().maxCoeff()) + 1;
  std::vector<Vec> lattice;
  std::map<std::vector<long long>, bool> seen;
  IVec m = IVec::Constant(n, -B);
  double spacing = std::numeric_limits<double>::infinity();
  for (;;) {
    const Vec lam = En.transpose() * g * m.cast<double>();
    std::vector<long long> key(n - 1);
    for (int i = 0; i < n - 1; ++i) key[i] = std::llround(lam(i) * 1e9);
    if (!seen.count(key)) {
      seen[key] = true;
      lattice.push_back(lam);
      if (lam.norm() > 1e-9) spacing = std::min(spacing, lam.norm());
    }
    int i = 0;
    while (i < n && ++m(i) > B) m(i++) = -B;
    if (i == n) break;
  }

  // keep |g_eps - g| <= eps in C0 for k > 1 by shrinking the tube
  const double sup = P.eps / std::max(1.0, P.k);
  require(2 * std::sqrt(sup) < spacing, ErrorKind::EpsilonTooLarge,
          "tube of radius sqrt(eps) overlaps another strand of the geodesic");

  const double k = P.k, eps = P.eps;
  GoodMetric out;
  out.support_sq = sup;
  out.k = k;
  out.metric.dim = n;
  out.metric.kind = "good";
  out.metric.jet_fn = [=](const Vec& q, int order) {
    Vec y = q - x0;
    for (int i = 0; i < n; ++i) y(i) -= std::floor(y(i) + 0.5);
    const Vec xp = En.transpose() * g * y;
    double best = std::numeric_limits<double>::infinity();
    Vec dx;
    for (const Vec& lam : lattice) {
      const double d2 = (xp - lam).squaredNorm();
      if (d2 < best) best = d2, dx = xp - lam;
    }
    Vec ds = Vec::Zero(n);
    Mat d2s = Mat::Zero(n, n);
    if (best >= sup) return detail::scalar_times(g, 1 + eps, ds, d2s, order);
    const double u = best;
    const double r = detail::good_bump(u / sup), r1 = detail::good_bump_d(u / sup) / sup,
                 r2 = detail::good_bump_dd(u / sup) / (sup * sup);
    const double s = r * (1 + k * u) + (1 - r) * (1 + eps);
    const double F1 = r1 * (k * u - eps) + r * k;
    const double F2 = r2 * (k * u - eps) + 2 * r1 * k;
    const Vec du = 2 * g * En * dx;
    const Mat ddu = 2 * g * En * En.transpose() * g;
    ds = F1 * du;
    d2s = F2 * du * du.transpose() + F1 * ddu;
    return detail::scalar_times(g, s, ds, d2s, order);
  };
  out.geodesic = straight_curve(flat_metric(g), x0, P.beta, 64);
  out.length = std::sqrt(b.dot(g * b));
  out.chart = fermi_chart(flat_metric(g), out.geodesic, std::sqrt(sup));
  return out;
}

// ---------------------------------------------------------------------------
// Linearized Cauchy-Riemann operator on the truncated cylinder [0, S] x R / ell Z

struct OperatorGrid {
  int n = 2;
  double ell = 1;
  double S = 8;
  int Ns = 128, Nt = 128;
  double k = 1;
  RadialProfile profile;
  Mat O;  // (n-1)x(n-1) twist, identity if empty
  // Optional replacement for k * Id in the tangent equations, as a function of t.
  std::function<Mat(double)> hessian;

  double hs() const { return S / Ns; }
  double ht() const { return ell / Nt; }
  Mat twist() const { return O.size() ? O : Mat(Mat::Identity(n - 1, n - 1)); }
};

enum class CrSystem { Original, Tilde };

// An unknown or a row of the discrete system. Components 0..n-2 are tangent,
// component n-1 is the normal pair. eq is 1 or 2 for rows.
struct GridSlot {
  int comp = 0;
  bool is_b = false;
  int eq = 0;
  double s = 0, t = 0;
};

struct OperatorBlock {
  SpMat A;
  std::vector<GridSlot> cols, rows;
};

struct CrOperator {
  OperatorGrid grid;
  CrSystem system = CrSystem::Original;
  OperatorBlock normal, tangent;

  // Block-diagonal operator, normal block first.
  SpMat full() const {
    const int r0 = static_cast<int>(normal.A.rows()), c0 = static_cast<int>(normal.A.cols());
    SpMat M(r0 + tangent.A.rows(), c0 + tangent.A.cols());
    std::vector<Eigen::Triplet<double>> T;
    for (int k = 0; k < normal.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(normal.A, k); it; ++it) T.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < tangent.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(tangent.A, k); it; ++it) T.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
    M.setFromTriplets(T.begin(), T.end());
    return M;
  }

  std::vector<GridSlot> cols() const {
    std::vector<GridSlot> c = normal.cols;
    c.insert(c.end(), tangent.cols.begin(), tangent.cols.end());
    return c;
  }
  std::vector<GridSlot> rows() const {
    std::vector<GridSlot> r = normal.rows;
    r.insert(r.end(), tangent.rows.begin(), tangent.rows.end());
    return r;
  }

  // Samples field(comp, is_b, s, t) at every unknown, in full() ordering.
  Vec sample(const std::function<double(int, bool, double, double)>& field) const {
    const auto c = cols();
    Vec x(c.size());
    for (size_t i = 0; i < c.size(); ++i) x(i) = field(c[i].comp, c[i].is_b, c[i].s, c[i].t);
    return x;
  }
};

namespace detail {

inline double damping(const RadialProfile& P, double s) {
  const double fs = P.f(s);
  if (fs <= P.r0()) return 0;
  return (1 - P.chi(fs)) / fs;
}

}  // namespace detail

// Staggered second-order discretization. Normal pair: b on integer s-nodes with
// b = 0 at s = 0 and s = S, a on half nodes in s and t. Tangent pairs: a on
// integer s-nodes with a = 0 at s = S, b on half nodes with a mirrored ghost
// enforcing b = 0 at s = 0. Tangent components are twisted by O across t = ell.
inline CrOperator assemble_operator(const OperatorGrid& G, CrSystem sys = CrSystem::Original) {
  require(G.n >= 1, ErrorKind::InvalidArgument, "operator needs n >= 1");
  require(G.Ns >= 16 && G.Nt >= 16, ErrorKind::InvalidArgument, "operator grid needs at least 16 points per axis");
  require(G.S >= 4, ErrorKind::InvalidArgument, "truncation S must be at least 4");
  require(G.ell > 0, ErrorKind::InvalidArgument, "geodesic length must be positive");
  const int n = G.n, Ns = G.Ns, Nt = G.Nt, m = n - 1;
  const double hs = G.hs(), ht = G.ht();
  const RadialProfile& P = G.profile;
  const Mat O = m > 0 ? G.twist() : Mat();
  if (m > 0) {
    require(O.rows() == m && O.cols() == m, ErrorKind::AssemblyError, "twist has the wrong size");
    require((O.transpose() * O - Mat::Identity(m, m)).norm() < 1e-10, ErrorKind::AssemblyError,
            "twist is not orthogonal");
  }
  const bool tilde = sys == CrSystem::Tilde;
  CrOperator op;
  op.grid = G;
  op.system = sys;

  // normal block
  {
    OperatorBlock& B = op.normal;
    auto bcol = [&](int i, int j) { return (i - 1) * Nt + ((j % Nt) + Nt) % Nt; };  // i = 1..Ns-1
    const int nb = (Ns - 1) * Nt;
    auto acol = [&](int i, int j) { return nb + i * Nt + ((j % Nt) + Nt) % Nt; };   // (i+1/2, j+1/2)
    for (int i = 1; i < Ns; ++i)
      for (int j = 0; j < Nt; ++j) B.cols.push_back({m, true, 0, i * hs, j * ht});
    for (int i = 0; i < Ns; ++i)
      for (int j = 0; j < Nt; ++j) B.cols.push_back({m, false, 0, (i + 0.5) * hs, (j + 0.5) * ht});
    std::vector<Eigen::Triplet<double>> T;
    int row = 0;
    auto addb = [&](int i, int j, double v) {
      if (i > 0 && i < Ns) T.emplace_back(row, bcol(i, j), v);
    };
    for (int i = 0; i < Ns; ++i) {
      const double s = (i + 0.5) * hs, fs = P.f(s);
      const double v = tilde ? -1.0 : -P.chi(fs);
      const double w = tilde ? 0.0 : -P.chi_d(fs);
      for (int j = 0; j < Nt; ++j, ++row) {
        B.rows.push_back({m, false, 1, s, j * ht});
        addb(i + 1, j, 1 / hs + 0.5 * w);
        addb(i, j, -1 / hs + 0.5 * w);
        T.emplace_back(row, acol(i, j), v / ht);
        T.emplace_back(row, acol(i, j - 1), -v / ht);
      }
    }
    for (int i = 1; i < Ns; ++i) {
      const double s = i * hs;
      const double z = tilde ? 1.0 : 1 / P.chi(P.f(s));
      for (int j = 0; j < Nt; ++j, ++row) {
        B.rows.push_back({m, false, 2, s, (j + 0.5) * ht});
        T.emplace_back(row, acol(i, j), 1 / hs);
        T.emplace_back(row, acol(i - 1, j), -1 / hs);
        addb(i, j + 1, z / ht);
        addb(i, j, -z / ht);
      }
    }
    B.A.resize(row, static_cast<int>(B.cols.size()));
    B.A.setFromTriplets(T.begin(), T.end());
    require(B.A.rows() == B.A.cols(), ErrorKind::AssemblyError, "normal block is not square");
  }

  // tangent block
  if (m > 0) {
    OperatorBlock& B = op.tangent;
    const int per = Ns * Nt;
    auto acol = [&](int l, int i, int j) { return l * per + i * Nt + j; };              // (i, j), i < Ns
    auto bcol = [&](int l, int i, int j) { return m * per + l * per + i * Nt + j; };    // (i+1/2, j+1/2)
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < Ns; ++i)
        for (int j = 0; j < Nt; ++j) B.cols.push_back({l, false, 0, i * hs, j * ht});
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < Ns; ++i)
        for (int j = 0; j < Nt; ++j) B.cols.push_back({l, true, 0, (i + 0.5) * hs, (j + 0.5) * ht});
    std::vector<Eigen::Triplet<double>> T;
    int row = 0;
    // entry for component l at t-index j, folding j into range through the twist
    auto add = [&](const std::function<int(int, int)>& col, int l, int j, double v) {
      if (j >= 0 && j < Nt) {
        T.emplace_back(row, col(l, j), v);
      } else if (j >= Nt) {
        for (int q = 0; q < m; ++q)
          if (O(l, q) != 0) T.emplace_back(row, col(q, j - Nt), v * O(l, q));
      } else {
        for (int q = 0; q < m; ++q)
          if (O(q, l) != 0) T.emplace_back(row, col(q, j + Nt), v * O(q, l));
      }
    };
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < Ns; ++i) {
        const double s = (i + 0.5) * hs, fs = P.f(s);
        const double c = detail::damping(P, s);
        for (int j = 0; j < Nt; ++j, ++row) {
          const double t = j * ht;
          B.rows.push_back({l, false, 1, s, t});
          Mat H = G.hessian ? G.hessian(t) : Mat(G.k * Mat::Identity(m, m));
          require(H.rows() == m && H.cols() == m, ErrorKind::AssemblyError, "hessian callback has the wrong size");
          Mat Pm = -fs * H;
          if (tilde) Pm -= c * Mat::Identity(m, m);
          const auto ac_i = [&, i](int q, int jj) { return acol(q, i, jj); };
          const auto ac_i1 = [&, i](int q, int jj) { return acol(q, i + 1, jj); };
          const auto bc_i = [&, i](int q, int jj) { return bcol(q, i, jj); };
          if (i + 1 < Ns) add(ac_i1, l, j, 1 / hs);
          add(ac_i, l, j, -1 / hs);
          add(bc_i, l, j, 1 / ht);
          add(bc_i, l, j - 1, -1 / ht);
          for (int q = 0; q < m; ++q) {
            if (Pm(l, q) == 0) continue;
            if (i + 1 < Ns) T.emplace_back(row, acol(q, i + 1, j), 0.5 * Pm(l, q));
            T.emplace_back(row, acol(q, i, j), 0.5 * Pm(l, q));
          }
        }
      }
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < Ns; ++i) {
        const double s = i * hs;
        const double c = tilde ? 0.0 : detail::damping(P, s);
        for (int j = 0; j < Nt; ++j, ++row) {
          B.rows.push_back({l, false, 2, s, (j + 0.5) * ht});
          const auto ac_i = [&, i](int q, int jj) { return acol(q, i, jj); };
          const auto bc_i = [&, i](int q, int jj) { return bcol(q, i, jj); };
          const auto bc_im = [&, i](int q, int jj) { return bcol(q, i - 1, jj); };
          if (i == 0) {
            add(bc_i, l, j, 2 / hs);  // ghost b(-1/2) = -b(1/2)
          } else {
            add(bc_i, l, j, 1 / hs + 0.5 * c);
            add(bc_im, l, j, -1 / hs + 0.5 * c);
          }
          add(ac_i, l, j + 1, -1 / ht);
          add(ac_i, l, j, 1 / ht);
        }
      }
    B.A.resize(row, static_cast<int>(B.cols.size()));
    B.A.setFromTriplets(T.begin(), T.end());
    require(B.A.rows() == B.A.cols(), ErrorKind::AssemblyError, "tangent block is not square");
  }
  return op;
}

// ---------------------------------------------------------------------------
// Smallest singular values

class SpectrumError : public Error {
 public:
  SpectrumError(const std::string& what, std::vector<double> partial)
      : Error(ErrorKind::NumericalFailure, what), partial_(std::move(partial)) {}
  const std::vector<double>& partial() const { return partial_; }

 private:
  std::vector<double> partial_;
};

struct SmallestSingular {
  std::vector<double> sigma;  // ascending
  Mat V;                      // right singular vectors, one per column
  int iterations = 0;
};

// Inverse subspace iteration on A^T A followed by Rayleigh-Ritz on A.
inline SmallestSingular smallest_singular_values(const SpMat& A, int m, int max_iter = 300, unsigned seed = 7) {
  const int N = static_cast<int>(A.cols());
  require(A.rows() == N, ErrorKind::InvalidArgument, "operator must be square");
  const int p = std::min(N, m + 6);
  double scale = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  // A^T A + tau I shares its eigenvectors with A^T A, so the shift only slows
  // convergence; it keeps an exact kernel from swamping the other columns.
  SpMat C = SpMat(A.transpose()) * A;
  double cscale = 0;
  for (int k = 0; k < C.outerSize(); ++k)
    for (SpMat::InnerIterator it(C, k); it; ++it) cscale = std::max(cscale, std::abs(it.value()));
  SpMat I(N, N);
  I.setIdentity();
  C += (1e-12 * cscale) * I;
  C.makeCompressed();
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(C);
  if (ldlt.info() != Eigen::Success) throw SpectrumError("sparse LDLT of the normal equations failed", {});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Mat X(N, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < N; ++i) X(i, j) = nd(rng);

  SmallestSingular out;
  std::vector<double> prev(p, -1);
  auto ritz = [&](const Mat& Q) {
    const Mat AQ = A * Q;
    Eigen::JacobiSVD<Mat> svd(AQ, Eigen::ComputeThinV);
    const Vec sv = svd.singularValues();
    const Mat W = svd.matrixV();
    std::vector<int> idx(sv.size());
    for (int i = 0; i < (int)idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return sv(a) < sv(b); });
    out.sigma.clear();
    out.V.resize(N, p);
    for (int i = 0; i < p; ++i) {
      out.sigma.push_back(sv(idx[i]));
      out.V.col(i) = Q * W.col(idx[i]);
    }
  };
  for (int it = 0; it < max_iter; ++it) {
    Eigen::HouseholderQR<Mat> qr(X);
    const Mat Q = qr.householderQ() * Mat::Identity(N, p);
    ritz(Q);
    out.iterations = it;
    bool done = it > 2;
    for (int i = 0; i < m; ++i)
      if (std::abs(out.sigma[i] - prev[i]) > 1e-9 * std::max(out.sigma[i], 1e-8 * scale)) done = false;
    prev = out.sigma;
    if (done) break;
    X = ldlt.solve(out.V);
    if (!X.allFinite()) {
      std::vector<double> partial(out.sigma.begin(), out.sigma.begin() + m);
      throw SpectrumError("non-finite iterate in inverse subspace iteration", partial);
    }
  }
  out.sigma.resize(m);
  out.V.conservativeResize(N, m);
  return out;
}

struct KernelReport {
  OperatorGrid grid;
  std::vector<double> sigma;  // m smallest over both blocks, ascending
  std::vector<int> block;     // 0 normal, 1 tangent
  int dimension = 0;
  double gap = 0;             // sigma[d] / sigma[d-1], 0 when d = 0
  double threshold_ratio = 0;
  double median = 0;
  Vec kernel_vector;          // right singular vector of sigma[0], full() ordering
};

// Rows divided by their largest entry. The kernel is unchanged and the chi and
// k f coefficients, which grow like e^s, no longer set the scale.
inline SpMat row_equilibrated(const SpMat& A) {
  Vec r = Vec::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) r(it.row()) = std::max(r(it.row()), std::abs(it.value()));
  SpMat B = A;
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpMat::InnerIterator it(B, k); it; ++it) it.valueRef() /= r(it.row()) > 0 ? r(it.row()) : 1.0;
  return B;
}

inline KernelReport kernel_dimension(const CrOperator& op, double threshold_ratio = 1e-6, int m = 8) {
  require(threshold_ratio > 0 && threshold_ratio < 1, ErrorKind::InvalidArgument, "threshold ratio must be in (0, 1)");
  require(m >= 4, ErrorKind::InvalidArgument, "need at least 4 singular values");
  struct Item {
    double s;
    int block;
    Vec v;
  };
  std::vector<Item> items;
  const int nn = static_cast<int>(op.normal.A.cols()), nt = static_cast<int>(op.tangent.A.cols());
  {
    const SmallestSingular r = smallest_singular_values(row_equilibrated(op.normal.A), std::min(m, nn));
    for (size_t i = 0; i < r.sigma.size(); ++i) {
      Vec v = Vec::Zero(nn + nt);
      v.head(nn) = r.V.col(i);
      items.push_back({r.sigma[i], 0, v});
    }
  }
  if (nt > 0) {
    const SmallestSingular r = smallest_singular_values(row_equilibrated(op.tangent.A), std::min(m, nt));
    for (size_t i = 0; i < r.sigma.size(); ++i) {
      Vec v = Vec::Zero(nn + nt);
      v.tail(nt) = r.V.col(i);
      items.push_back({r.sigma[i], 1, v});
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.s < b.s; });
  items.resize(std::min<size_t>(items.size(), m));
  KernelReport R;
  R.grid = op.grid;
  R.threshold_ratio = threshold_ratio;
  for (const Item& it : items) R.sigma.push_back(it.s), R.block.push_back(it.block);
  std::vector<double> sorted = R.sigma;
  const size_t h = sorted.size() / 2;
  R.median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  for (double s : R.sigma)
    if (s < threshold_ratio * R.median) ++R.dimension;
  if (R.dimension > 0 && R.dimension < (int)R.sigma.size())
    R.gap = R.sigma[R.dimension] / std::max(R.sigma[R.dimension - 1], std::numeric_limits<double>::min());
  R.kernel_vector = items.front().v;
  return R;
}

inline void write_kernel_report(std::ostream& os, const KernelReport& R) {
  os << std::setprecision(10);
  os << "n = " << R.grid.n << "\n"
     << "ell = " << R.grid.ell << "\n"
     << "S = " << R.grid.S << "\n"
     << "Ns = " << R.grid.Ns << "\n"
     << "Nt = " << R.grid.Nt << "\n"
     << "k = " << R.grid.k << "\n"
     << "r0 = " << R.grid.profile.r0() << "\n"
     << "r1 = " << R.grid.profile.r1() << "\n"
     << "threshold_ratio = " << R.threshold_ratio << "\n"
     << "median_sigma = " << R.median << "\n"
     << "kernel_dimension = " << R.dimension << "\n"
     << "gap_ratio = " << R.gap << "\n";
  for (size_t i = 0; i < R.sigma.size(); ++i)
    os << "sigma_" << i + 1 << " = " << R.sigma[i] << " (" << (R.block[i] ? "tangent" : "normal") << ")\n";
}

inline void write_matrix_market(const std::string& path, const SpMat& A) {
  require(Eigen::saveMarket(A, path), ErrorKind::InvalidArgument, "cannot write " + path);
}

// rho' = rho (1 - chi(f)) / f, rho(0) = 1, by RK4 at the requested points.
inline Vec rho_weight(const RadialProfile& P, const Vec& s_grid) {
  Vec out(s_grid.size());
  std::vector<int> order(s_grid.size());
  for (int i = 0; i < (int)order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return s_grid(a) < s_grid(b); });
  auto F = [&](double s, double r) { return r * detail::damping(P, s); };
  double s = 0, rho = 1;
  for (int idx : order) {
    const double target = s_grid(idx);
    require(target >= 0, ErrorKind::InvalidArgument, "weight grid must be nonnegative");
    const int steps = static_cast<int>(std::ceil((target - s) / 5e-3));
    const double h = steps > 0 ? (target - s) / steps : 0;
    for (int k = 0; k < steps; ++k) {
      const double k1 = F(s, rho), k2 = F(s + h / 2, rho + h / 2 * k1), k3 = F(s + h / 2, rho + h / 2 * k2),
                   k4 = F(s + h, rho + h * k3);
      rho += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      s += h;
    }
    s = target;
    out(idx) = rho;
  }
  return out;
}

}  // namespace clab
