#pragma once

#include "clab/core.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

namespace clab {

enum class DerivativeSource { Analytic, GridInterpolant };

inline const char* to_string(DerivativeSource s) {
  return s == DerivativeSource::Analytic ? "analytic" : "grid-interpolant";
}

// Metric tensor with up to two derivatives. dg[a] = d_a g, d2g[a][b] = d_a d_b g.
struct MetricJet {
  Mat g;
  std::vector<Mat> dg;
  std::vector<std::vector<Mat>> d2g;
};

// Periodic metric on R^n / Z^n.
struct MetricField {
  int dim = 0;
  std::string kind;
  DerivativeSource source = DerivativeSource::Analytic;
  bool constant = false;
  std::function<MetricJet(const Vec&, int)> jet_fn;

  Mat eval(const Vec& q) const { return jet_fn(q, 0).g; }
  MetricJet jet(const Vec& q, int order = 1) const { return jet_fn(q, order); }

  double norm(const Vec& q, const Vec& v) const { return std::sqrt(v.dot(eval(q) * v)); }
  double conorm(const Vec& q, const Vec& p) const {
    return std::sqrt(p.dot(eval(q).ldlt().solve(p)));
  }
};

namespace detail {

inline MetricJet zero_jet(int n, int order) {
  MetricJet j;
  j.g = Mat::Zero(n, n);
  if (order >= 1) j.dg.assign(n, Mat::Zero(n, n));
  if (order >= 2) j.d2g.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
  return j;
}

// Jet of s(q) * A for a scalar field s with gradient and Hessian.
inline MetricJet scalar_times(const Mat& A, double s, const Vec& ds, const Mat& d2s, int order) {
  const int n = static_cast<int>(A.rows());
  MetricJet j = zero_jet(n, order);
  j.g = s * A;
  if (order >= 1)
    for (int a = 0; a < n; ++a) j.dg[a] = ds(a) * A;
  if (order >= 2)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) j.d2g[a][b] = d2s(a, b) * A;
  return j;
}

}  // namespace detail

// Truncated real Fourier series on the torus.
struct FourierSeries {
  struct Term {
    IVec k;
    double cos_coef = 0;
    double sin_coef = 0;
  };
  int dim = 0;
  std::vector<Term> terms;

  double value(const Vec& q) const {
    double v = 0;
    for (const auto& t : terms) {
      const double ph = 2 * kPi * t.k.cast<double>().dot(q);
      v += t.cos_coef * std::cos(ph) + t.sin_coef * std::sin(ph);
    }
    return v;
  }
  Vec grad(const Vec& q) const {
    Vec g = Vec::Zero(dim);
    for (const auto& t : terms) {
      const Vec kk = 2 * kPi * t.k.cast<double>();
      const double ph = kk.dot(q);
      g += (-t.cos_coef * std::sin(ph) + t.sin_coef * std::cos(ph)) * kk;
    }
    return g;
  }
  Mat hess(const Vec& q) const {
    Mat h = Mat::Zero(dim, dim);
    for (const auto& t : terms) {
      const Vec kk = 2 * kPi * t.k.cast<double>();
      const double ph = kk.dot(q);
      h -= (t.cos_coef * std::cos(ph) + t.sin_coef * std::sin(ph)) * (kk * kk.transpose());
    }
    return h;
  }
  FourierSeries scaled(double c) const {
    FourierSeries s = *this;
    for (auto& t : s.terms) {
      t.cos_coef *= c;
      t.sin_coef *= c;
    }
    return s;
  }
};

inline MetricField flat_metric(const Mat& A) {
  require(A.rows() == A.cols() && A.rows() >= 1, ErrorKind::InvalidArgument, "flat metric needs a square matrix");
  require(A.isApprox(A.transpose(), 1e-14), ErrorKind::InvalidMetric, "flat metric not symmetric");
  Eigen::LLT<Mat> llt(A);
  require(llt.info() == Eigen::Success, ErrorKind::InvalidMetric, "flat metric not positive definite");
  MetricField m;
  m.dim = static_cast<int>(A.rows());
  m.kind = "flat";
  m.constant = true;
  m.jet_fn = [A](const Vec&, int order) {
    MetricJet j = detail::zero_jet(static_cast<int>(A.rows()), order);
    j.g = A;
    return j;
  };
  return m;
}

inline MetricField flat_metric(int n) { return flat_metric(Mat::Identity(n, n)); }

// e^{2 phi} delta.
inline MetricField conformal_metric(const FourierSeries& phi) {
  MetricField m;
  m.dim = phi.dim;
  m.kind = "conformal";
  m.jet_fn = [phi](const Vec& q, int order) {
    const int n = phi.dim;
    const double e = std::exp(2 * phi.value(q));
    Vec ds = Vec::Zero(n);
    Mat d2s = Mat::Zero(n, n);
    if (order >= 1) {
      const Vec gp = phi.grad(q);
      ds = 2 * e * gp;
      if (order >= 2) d2s = e * (4 * gp * gp.transpose() + 2 * phi.hess(q));
    }
    return detail::scalar_times(Mat::Identity(n, n), e, ds, d2s, order);
  };
  return m;
}

// (1 + k sum_{i != axis} sin^2(pi (x_i - c_i)) / pi^2) delta. Agrees with
// (1 + k |x'|^2) delta up to O(|x'|^4) near the axis and is smooth on the torus.
inline MetricField tube_metric(int n, double k, int axis = 0, Vec center = Vec()) {
  require(n >= 1 && axis >= 0 && axis < n, ErrorKind::InvalidArgument, "tube axis out of range");
  if (center.size() == 0) center = Vec::Zero(n);
  MetricField m;
  m.dim = n;
  m.kind = "tube";
  m.jet_fn = [n, k, axis, center](const Vec& q, int order) {
    double s = 1;
    Vec ds = Vec::Zero(n);
    Mat d2s = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (i == axis) continue;
      const double x = kPi * (q(i) - center(i));
      s += k * std::sin(x) * std::sin(x) / (kPi * kPi);
      ds(i) = k * std::sin(2 * x) / kPi;
      d2s(i, i) = 2 * k * std::cos(2 * x);
    }
    return detail::scalar_times(Mat::Identity(n, n), s, ds, d2s, order);
  };
  return m;
}

inline MetricField scaled_metric(const MetricField& g, double c2) {
  require(c2 > 0, ErrorKind::InvalidArgument, "scale must be positive");
  MetricField m = g;
  m.kind = g.kind + "*scaled";
  auto inner = g.jet_fn;
  m.jet_fn = [inner, c2](const Vec& q, int order) {
    MetricJet j = inner(q, order);
    j.g *= c2;
    for (auto& d : j.dg) d *= c2;
    for (auto& row : j.d2g)
      for (auto& d : row) d *= c2;
    return j;
  };
  return m;
}

// Periodic grid of metric samples with tensor-product cubic convolution.
struct MetricGrid {
  int dim = 0;
  int res = 0;
  std::vector<double> data;  // res^dim samples, each dim*dim row-major, first axis slowest

  Mat sample(const std::vector<int>& idx) const {
    std::size_t lin = 0;
    for (int a = 0; a < dim; ++a) lin = lin * res + static_cast<std::size_t>(((idx[a] % res) + res) % res);
    Mat g(dim, dim);
    const double* p = data.data() + lin * dim * dim;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = p[i * dim + j];
    return g;
  }
};

namespace detail {

// Catmull-Rom weights for offsets -1,0,1,2 and their first two derivatives in t.
inline void cubic_weights(double t, std::array<double, 4>& w, std::array<double, 4>& dw,
                          std::array<double, 4>& ddw) {
  const double t2 = t * t, t3 = t2 * t;
  w = {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
  dw = {0.5 * (-3 * t2 + 4 * t - 1), 0.5 * (9 * t2 - 10 * t), 0.5 * (-9 * t2 + 8 * t + 1), 0.5 * (3 * t2 - 2 * t)};
  ddw = {0.5 * (-6 * t + 4), 0.5 * (18 * t - 10), 0.5 * (-18 * t + 8), 0.5 * (6 * t - 2)};
}

}  // namespace detail

inline MetricField grid_metric(const MetricGrid& grid) {
  require(grid.dim >= 1 && grid.res >= 4, ErrorKind::InvalidArgument, "grid needs dim >= 1 and res >= 4");
  const std::size_t expect = static_cast<std::size_t>(std::pow(grid.res, grid.dim)) * grid.dim * grid.dim;
  require(grid.data.size() == expect, ErrorKind::InvalidArgument, "grid data size mismatch");
  auto shared = std::make_shared<const MetricGrid>(grid);
  MetricField m;
  m.dim = grid.dim;
  m.kind = "grid";
  m.source = DerivativeSource::GridInterpolant;
  m.jet_fn = [shared](const Vec& q, int order) {
    const MetricGrid& G = *shared;
    const int n = G.dim;
    std::vector<int> base(n);
    std::vector<std::array<double, 4>> w(n), dw(n), ddw(n);
    for (int a = 0; a < n; ++a) {
      const double x = wrap01(q(a)) * G.res;
      int i0 = static_cast<int>(std::floor(x));
      double t = x - i0;
      if (i0 >= G.res) { i0 -= G.res; }
      base[a] = i0;
      detail::cubic_weights(t, w[a], dw[a], ddw[a]);
      for (int s = 0; s < 4; ++s) {
        dw[a][s] *= G.res;
        ddw[a][s] *= G.res * G.res;
      }
    }
    MetricJet j = detail::zero_jet(n, order);
    std::vector<int> off(n, 0), idx(n);
    const int total = 1 << (2 * n);
    for (int c = 0; c < total; ++c) {
      for (int a = 0; a < n; ++a) {
        off[a] = (c >> (2 * a)) & 3;
        idx[a] = base[a] + off[a] - 1;
      }
      const Mat s = G.sample(idx);
      double wt = 1;
      for (int a = 0; a < n; ++a) wt *= w[a][off[a]];
      j.g += wt * s;
      if (order >= 1) {
        for (int d = 0; d < n; ++d) {
          double wd = 1;
          for (int a = 0; a < n; ++a) wd *= (a == d ? dw[a][off[a]] : w[a][off[a]]);
          j.dg[d] += wd * s;
        }
      }
      if (order >= 2) {
        for (int d = 0; d < n; ++d)
          for (int e = 0; e < n; ++e) {
            double wd = 1;
            for (int a = 0; a < n; ++a) {
              if (a == d && a == e) wd *= ddw[a][off[a]];
              else if (a == d || a == e) wd *= dw[a][off[a]];
              else wd *= w[a][off[a]];
            }
            j.d2g[d][e] += wd * s;
          }
      }
    }
    return j;
  };
  return m;
}

inline MetricGrid sample_to_grid(const MetricField& g, int res) {
  MetricGrid grid;
  grid.dim = g.dim;
  grid.res = res;
  const int n = g.dim;
  const std::size_t count = static_cast<std::size_t>(std::pow(res, n));
  grid.data.resize(count * n * n);
  for (std::size_t lin = 0; lin < count; ++lin) {
    Vec q(n);
    std::size_t r = lin;
    for (int a = n - 1; a >= 0; --a) {
      q(a) = static_cast<double>(r % res) / res;
      r /= res;
    }
    const Mat m = g.eval(q);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) grid.data[lin * n * n + i * n + j] = m(i, j);
  }
  return grid;
}

inline void write_grid_file(const std::string& path, const MetricGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::InvalidArgument, "cannot write " + path);
  out << "CLAB-GRID v1 dim=" << grid.dim << " res=" << grid.res << "\n";
  for (double v : grid.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

inline MetricGrid read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::ParseError, "cannot open grid file " + path);
  std::string header;
  std::getline(in, header);
  MetricGrid grid;
  if (std::sscanf(header.c_str(), "CLAB-GRID v1 dim=%d res=%d", &grid.dim, &grid.res) != 2)
    throw Error(ErrorKind::ParseError, "bad grid header: " + header);
  require(grid.dim >= 1 && grid.res >= 4, ErrorKind::ParseError, "grid header out of range");
  const std::size_t count = static_cast<std::size_t>(std::pow(grid.res, grid.dim)) * grid.dim * grid.dim;
  grid.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    require(static_cast<bool>(in), ErrorKind::ParseError, "grid file truncated");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    std::memcpy(&grid.data[i], &bits, sizeof bits);
  }
  return grid;
}

// Checks symmetry and positive definiteness of a sample.
inline void check_spd(const Mat& g) {
  if (!g.allFinite() || !g.isApprox(g.transpose(), 1e-10))
    throw Error(ErrorKind::InvalidMetric, "metric sample not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0)
    throw Error(ErrorKind::InvalidMetric, "metric sample not positive definite");
}

}  // namespace clab
