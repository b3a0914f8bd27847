#include <gtest/gtest.h>

#include "clab/linearized_cr.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <Eigen/SparseLU>

using namespace clab;

namespace {

IVec cls(std::initializer_list<int> v) {
  IVec b(static_cast<int>(v.size()));
  int i = 0;
  for (int x : v) b(i++) = x;
  return b;
}

GoodMetric standard_good(int n, double eps = 0.01, double k = 1) {
  GoodMetricParams P;
  P.base = Mat::Identity(n, n);
  P.beta = IVec::Unit(n, 0);
  P.eps = eps;
  P.k = k;
  return good_metric(P);
}

OperatorGrid grid(int n, double k, double S, int N) {
  OperatorGrid G;
  G.n = n;
  G.k = k;
  G.S = S;
  G.Ns = G.Nt = N;
  return G;
}

Mat rotation(double a) {
  Mat R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

// int_0^s f at s = i * h, composite Simpson on each cell
std::vector<double> cumulative_f(const RadialProfile& P, double h, int cells) {
  std::vector<double> out(cells + 1, 0.0);
  const int sub = 40;
  for (int i = 0; i < cells; ++i) {
    const double a = i * h, d = h / sub;
    double sum = P.f(a) + P.f(a + h);
    for (int j = 1; j < sub; ++j) sum += (j % 2 ? 4 : 2) * P.f(a + j * d);
    out[i + 1] = out[i] + sum * d / 3;
  }
  return out;
}

double cosine(const Vec& a, const Vec& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

}  // namespace

TEST(GoodMetric, TubeFormNearTheAxis) {
  for (int n : {2, 3}) {
    const GoodMetric G = standard_good(n, 0.01, 0.8);
    const double r = std::sqrt(0.5 * G.support_sq) * 0.9;
    for (double xn : {0.0, 0.31, 0.77}) {
      Vec xp = Vec::Zero(n - 1);
      xp(0) = r;
      if (n == 3) xp(1) = -0.5 * r, xp(0) = 0.6 * r;
      const Mat D = G.chart.jacobian(xn, xp);
      const Mat pulled = D.transpose() * G.metric.eval(G.chart.map(xn, xp)) * D;
      const Mat gq = G.metric.eval(G.chart.map(xn, xp));
      const Mat expect = (1 + 0.8 * xp.squaredNorm()) * Mat::Identity(n, n);
      EXPECT_LT((gq - expect).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((pulled - expect).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(GoodMetric, CloseToBaseAndAboveIt) {
  struct Case {
    Mat base;
    IVec beta;
    double k;
  };
  Mat skew(2, 2);
  skew << 1.0, 0.2, 0.2, 1.5;
  const std::vector<Case> cases = {{Mat::Identity(2, 2), cls({1, 0}), 1.0},
                                   {skew, cls({1, 1}), 0.7},
                                   {Mat::Identity(2, 2), cls({1, 0}), 3.0}};
  for (const Case& c : cases) {
    GoodMetricParams P;
    P.base = c.base;
    P.beta = c.beta;
    P.eps = 0.02;
    P.k = c.k;
    const GoodMetric G = good_metric(P);
    Eigen::SelfAdjointEigenSolver<Mat> es(c.base);
    const Mat ih = es.operatorInverseSqrt();
    double worst = 0;
    int on_axis = 0;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) {
        Vec q(2);
        q << i / 64.0, j / 64.0;
        const Mat D = ih * (G.metric.eval(q) - c.base) * ih;
        Eigen::SelfAdjointEigenSolver<Mat> ed(D);
        worst = std::max(worst, ed.eigenvalues().cwiseAbs().maxCoeff());
        EXPECT_GE(ed.eigenvalues().minCoeff(), -1e-15);
        // the axis through the origin in direction beta
        const double along = c.beta(1) * q(0) - c.beta(0) * q(1);
        const bool axis = std::abs(along - std::round(along)) < 1e-12;
        if (axis) {
          ++on_axis;
          EXPECT_LT(D.norm(), 1e-15);
        } else {
          EXPECT_GT(ed.eigenvalues().minCoeff(), 0.0);
        }
      }
    EXPECT_LE(worst, P.eps + 1e-15);
    EXPECT_GE(on_axis, 64);
  }
}

TEST(GoodMetric, CloseToBaseThreeDimensions) {
  const GoodMetric G = standard_good(3, 0.02, 1.0);
  for (int i = 0; i < 64; i += 3)
    for (int j = 0; j < 64; ++j)
      for (int l = 0; l < 64; ++l) {
        Vec q(3);
        q << i / 64.0, j / 64.0, l / 64.0;
        const double s = G.metric.eval(q)(0, 0);
        EXPECT_LE(std::abs(s - 1), 0.02 + 1e-15);
        if (j == 0 && l == 0) EXPECT_EQ(s, 1.0);
        else EXPECT_GT(s, 1.0);
      }
}

TEST(GoodMetric, SecondDerivativeTable) {
  for (int n : {2, 3}) {
    const double k = 0.6;
    const GoodMetric G = standard_good(n, 0.01, k);
    const double h = 1e-3;
    Vec q0 = Vec::Zero(n);
    q0(0) = 0.4;
    const MetricJet J = G.metric.jet(q0, 2);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        // chart coordinates are the ambient ones here: x_n = q_1, x' = (q_2, ...)
        Vec ea = Vec::Zero(n), eb = Vec::Zero(n);
        ea(a) = h;
        eb(b) = h;
        auto gnn = [&](const Vec& q) { return G.metric.eval(q)(0, 0); };
        const double fd = (gnn(q0 + ea + eb) - gnn(q0 + ea - eb) - gnn(q0 - ea + eb) + gnn(q0 - ea - eb)) / (4 * h * h);
        const double expect = (a == b && a != 0) ? 2 * k : 0.0;
        EXPECT_NEAR(fd, expect, 1e-6) << a << b;
        EXPECT_NEAR(J.d2g[a][b](0, 0), expect, 1e-12);
      }
  }
}

TEST(GoodMetric, GeodesicUnchanged) {
  const GoodMetric G = standard_good(2, 0.02, 1.0);
  MinGeodesicOptions opt;
  opt.restarts = 3;
  const LengthSpectrumSlice s = min_geodesic(G.metric, IVec::Unit(2, 0), 3, opt);
  EXPECT_NEAR(s.min_length, 1.0, 1e-6);
  EXPECT_NEAR(G.length, 1.0, 1e-15);
  for (int i = 0; i < s.minimizer.pts.cols(); ++i) {
    const double y = s.minimizer.pts(1, i);
    EXPECT_LT(std::abs(y - std::round(y)), 1e-3);
  }
}

TEST(GoodMetric, EpsilonTooLarge) {
  try {
    standard_good(2, 0.3, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EpsilonTooLarge);
  }
  GoodMetricParams P;
  P.base = Mat::Identity(2, 2);
  P.beta = cls({3, 4});
  P.eps = 0.02;  // strands of (3,4) are 1/5 apart
  P.k = 1;
  EXPECT_THROW(good_metric(P), Error);
  P.eps = 0.005;
  EXPECT_NO_THROW(good_metric(P));
}

TEST(Operator, ConstantNormalFieldIsInTheKernel) {
  for (int n : {1, 2, 3}) {
    OperatorGrid G = grid(n, 1.0, 8, 32);
    if (n == 3) G.O = rotation(2 * kPi / 3);
    const CrOperator op = assemble_operator(G);
    const Vec x = op.sample([&](int c, bool is_b, double, double) { return c == n - 1 && !is_b ? 1.0 : 0.0; });
    EXPECT_LT((op.full() * x).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Operator, GrowingTangentFieldViolatesOnlyTheEndRow) {
  const double k = 0.25, S = 4;
  OperatorGrid G = grid(2, k, S, 256);
  G.Nt = 16;
  const CrOperator op = assemble_operator(G);
  const RadialProfile& P = G.profile;
  const std::vector<double> F = cumulative_f(P, G.hs() / 2, 2 * G.Ns);
  auto a1 = [&](double s) { return std::exp(k * F[std::lround(2 * s / G.hs())]); };
  const Vec x = op.sample([&](int c, bool is_b, double s, double) { return c == 0 && !is_b ? a1(s) : 0.0; });
  const Vec r = op.full() * x;
  const auto rows = op.rows();
  double interior = 0, scale = 0, end = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].comp != 0) continue;
    if (rows[i].eq == 2) {
      EXPECT_LT(std::abs(r(i)), 1e-9 * a1(S));
      continue;
    }
    const double fs = P.f(rows[i].s);
    if (rows[i].s < S - G.hs()) {
      interior = std::max(interior, std::abs(r(i)));
      scale = std::max(scale, k * fs * a1(rows[i].s));
    } else {
      end = std::max(end, std::abs(r(i)) / (k * fs * a1(rows[i].s)));
    }
  }
  EXPECT_LT(interior / scale, 1e-3);
  EXPECT_GT(end, 1.0);
}

TEST(Operator, RejectsBadGrids) {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::ParseError;
  };
  EXPECT_EQ(kind_of([] { assemble_operator(grid(2, 1, 8, 8)); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { assemble_operator(grid(2, 1, 3, 32)); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] {
              OperatorGrid G = grid(3, 1, 8, 16);
              G.O = 2 * Mat::Identity(2, 2);
              assemble_operator(G);
            }),
            ErrorKind::AssemblyError);
  EXPECT_EQ(kind_of([] { kernel_dimension(assemble_operator(grid(2, 1, 8, 16)), 1.5); }), ErrorKind::InvalidArgument);
}

TEST(Kernel, OneDimensionalReduction) {
  const CrOperator op = assemble_operator(grid(1, 0.0, 8, 64));
  EXPECT_EQ(op.tangent.A.cols(), 0);
  const KernelReport R = kernel_dimension(op);
  EXPECT_EQ(R.dimension, 1);
  const Vec expect = op.sample([](int, bool is_b, double, double) { return is_b ? 0.0 : 1.0; });
  EXPECT_GT(cosine(R.kernel_vector, expect), 0.999);
}

TEST(Kernel, PlanarGoodMetricOperator) {
  const CrOperator op = assemble_operator(grid(2, 1.0, 8, 128));
  const KernelReport R = kernel_dimension(op);
  EXPECT_EQ(R.dimension, 1);
  EXPECT_GE(R.gap, 1e3);
  EXPECT_GE(R.sigma.size(), 4u);
  const Vec expect = op.sample([](int c, bool is_b, double, double) { return c == 1 && !is_b ? 1.0 : 0.0; });
  EXPECT_GT(cosine(R.kernel_vector, expect), 0.999);
}

TEST(Kernel, TwistedThreeDimensional) {
  OperatorGrid G = grid(3, 2.0, 8, 128);
  G.O = rotation(2 * kPi / 3);
  const KernelReport R = kernel_dimension(assemble_operator(G));
  EXPECT_EQ(R.dimension, 1);
  EXPECT_GE(R.gap, 1e3);
}

TEST(Kernel, StableUnderTruncationAndCurvature) {
  for (double S : {6.0, 8.0, 10.0})
    for (double k : {0.5, 1.0, 2.0}) {
      const KernelReport R = kernel_dimension(assemble_operator(grid(2, k, S, 64)));
      EXPECT_EQ(R.dimension, 1) << "S=" << S << " k=" << k;
      EXPECT_GE(R.gap, 1e3) << "S=" << S << " k=" << k;
    }
}

TEST(Kernel, StableUnderRefinement) {
  for (int N : {64, 128, 256}) {
    const KernelReport R = kernel_dimension(assemble_operator(grid(2, 1.0, 8, N)));
    EXPECT_EQ(R.dimension, 1) << N;
    EXPECT_GE(R.gap, 1e3) << N;
  }
}

TEST(Kernel, SquareSystemHasMatchingCokernel) {
  const CrOperator op = assemble_operator(grid(2, 1.0, 8, 64));
  const SmallestSingular fwd = smallest_singular_values(row_equilibrated(op.normal.A), 4);
  const SmallestSingular adj = smallest_singular_values(SpMat(row_equilibrated(op.normal.A).transpose()), 4);
  EXPECT_LT(fwd.sigma[0], 1e-10);
  EXPECT_LT(adj.sigma[0], 1e-10);
  EXPECT_GT(adj.sigma[1], 1e3 * adj.sigma[0]);
}

TEST(Kernel, ReportAndExport) {
  const CrOperator op = assemble_operator(grid(2, 1.0, 8, 16));
  const KernelReport R = kernel_dimension(op);
  std::ostringstream os;
  write_kernel_report(os, R);
  const std::string s = os.str();
  for (const char* key : {"n = 2", "S = 8", "Ns = 16", "Nt = 16", "k = 1", "kernel_dimension = 1", "gap_ratio", "sigma_1"})
    EXPECT_NE(s.find(key), std::string::npos) << key;
  const std::string path = ::testing::TempDir() + "op.mtx";
  write_matrix_market(path, op.full());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  std::istringstream words(header);
  std::vector<std::string> w{std::istream_iterator<std::string>(words), {}};
  EXPECT_EQ(w, (std::vector<std::string>{"%%MatrixMarket", "matrix", "coordinate", "real", "general"}));
  std::string line;
  while (std::getline(in, line) && line[0] == '%') {
  }
  std::istringstream dims(line);
  long r = 0, c = 0, nnz = 0;
  dims >> r >> c >> nnz;
  EXPECT_EQ(r, op.full().rows());
  EXPECT_EQ(c, op.full().cols());
  EXPECT_EQ(nnz, op.full().nonZeros());
  std::remove(path.c_str());
}

TEST(RhoWeight, PlateauDecayAndMonotone) {
  const RadialProfile P = radial_profile();
  Vec s = Vec::LinSpaced(801, 0.0, 8.0);
  const Vec rho = rho_weight(P, s);
  for (int i = 0; i < s.size(); ++i) {
    if (P.f(s(i)) <= P.r0()) EXPECT_EQ(rho(i), 1.0);
    if (i > 0) EXPECT_LE(rho(i), rho(i - 1));
  }
  EXPECT_LT(rho(800), 0.1);
  const double slope = (std::log(rho(800)) - std::log(rho(600))) / 2.0;
  EXPECT_NEAR(slope, -1.0, 1e-2);
}

TEST(RhoWeight, ConjugatesToTheTildeSystem) {
  const RadialProfile P = radial_profile();
  const double S = 4;
  std::vector<double> hs, errs;
  for (int N : {32, 64, 128}) {
    OperatorGrid G = grid(2, 0.5, S, N);
    const CrOperator A = assemble_operator(G, CrSystem::Original);
    const CrOperator B = assemble_operator(G, CrSystem::Tilde);
    auto field = [&](int c, bool is_b, double s, double t) {
      if (c == 0) {
        if (is_b) return std::sin(s) * std::cos(2 * kPi * t + 0.3);
        return std::cos(kPi * s / (2 * S)) * (1 + 0.5 * std::sin(2 * kPi * t));
      }
      if (is_b) return std::sin(kPi * s / S) * std::sin(2 * kPi * t);
      return std::cos(s) * std::cos(2 * kPi * t);
    };
    const auto cols = A.cols();
    const auto rows = A.rows();
    Vec cs(cols.size()), rs(rows.size());
    for (size_t i = 0; i < cols.size(); ++i) cs(i) = cols[i].s;
    for (size_t i = 0; i < rows.size(); ++i) rs(i) = rows[i].s;
    const Vec rc = rho_weight(P, cs), rr = rho_weight(P, rs);
    const Vec x = A.sample(field);
    Vec xt = x;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (cols[i].comp == 0) xt(i) *= rc(i);
      else if (cols[i].is_b) xt(i) /= P.chi(P.f(cols[i].s));
    }
    Vec lhs = A.full() * x;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].comp == 0) lhs(i) *= rr(i);
      else if (rows[i].eq == 1) lhs(i) /= P.chi(P.f(rows[i].s));
    }
    const Vec rhs = B.full() * xt;
    hs.push_back(S / N);
    errs.push_back((lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff());
  }
  EXPECT_GT(std::log(errs[0] / errs[1]) / std::log(2.0), 1.8);
  EXPECT_GT(std::log(errs[1] / errs[2]) / std::log(2.0), 1.8);
}

TEST(MaximumPrinciple, BoundaryDataAttainsTheMaximumAtTheBoundary) {
  const OperatorGrid G = grid(2, 1.0, 8, 64);
  const CrOperator op = assemble_operator(G);
  const auto& rows = op.tangent.rows;
  const auto& cols = op.tangent.cols;
  Vec rhs = Vec::Zero(rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    if (rows[i].eq == 2 && rows[i].s == 0) rhs(i) = 2 * (0.5 + std::cos(2 * kPi * rows[i].t)) / G.hs();
  Eigen::SparseLU<SpMat> lu(op.tangent.A);
  ASSERT_EQ(lu.info(), Eigen::Success);
  const Vec x = lu.solve(rhs);
  Vec cs(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) cs(i) = cols[i].s;
  const Vec rho = rho_weight(G.profile, cs);
  double best = -1, best_s = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (!cols[i].is_b) continue;
    const double v = std::pow(rho(i) * x(i), 2);
    if (v > best) best = v, best_s = cols[i].s;
  }
  EXPECT_GT(best, 0.0);
  EXPECT_LE(best_s, G.hs());
}
