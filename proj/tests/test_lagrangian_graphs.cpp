#include <gtest/gtest.h>

#include "clab/lagrangian_graphs.hpp"

#include <random>

using namespace clab;

namespace {

IVec iv(std::initializer_list<int> a) {
  IVec v(static_cast<int>(a.size()));
  int i = 0;
  for (int x : a) v(i++) = x;
  return v;
}

FourierSeries mode(int n, const IVec& k, double c, double s) {
  FourierSeries f;
  f.dim = n;
  f.terms = {{k, c, s}};
  return f;
}

FourierSeries random_series(int n, int modes, double amp, std::mt19937& rng) {
  std::uniform_int_distribution<int> K(-2, 2);
  std::uniform_real_distribution<double> A(-amp, amp);
  FourierSeries f;
  f.dim = n;
  for (int m = 0; m < modes; ++m) {
    IVec k(n);
    do {
      for (int i = 0; i < n; ++i) k(i) = K(rng);
    } while (k.cwiseAbs().sum() == 0);
    f.terms.push_back({k, A(rng), A(rng)});
  }
  return f;
}

std::vector<IVec> lattice_ball(int n, int radius) {
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

MetricField bumpy_conformal() {
  FourierSeries phi;
  phi.dim = 2;
  phi.terms = {{iv({1, 0}), 0.12, 0.0}, {iv({1, 1}), 0.0, -0.08}};
  return conformal_metric(phi);
}

}  // namespace

TEST(LiouvillePeriod, ConstantForm) {
  const GraphLagrangian G = graph_of((Vec(2) << 0.37, -0.2).finished());
  const PeriodResult R = liouville_period_full(G, iv({1, 0}));
  EXPECT_NEAR(R.quadrature, 0.37, 1e-14);
  EXPECT_NEAR(R.algebraic, 0.37, 1e-15);
}

TEST(LiouvillePeriod, ExactFormHasNoPeriods) {
  const GraphLagrangian G = graph_of(Vec::Zero(2), mode(2, iv({2, -1}), 0.3, 0.4));
  for (const IVec& b : lattice_ball(2, 3)) EXPECT_NEAR(liouville_period(G, b), 0.0, 1e-12) << b.transpose();
}

TEST(LiouvillePeriod, QuadratureMatchesAlgebraic) {
  std::mt19937 rng(17);
  std::normal_distribution<double> N01;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 2;
    Vec a(n);
    for (int i = 0; i < n; ++i) a(i) = N01(rng);
    const GraphLagrangian G = graph_of(a, random_series(n, 4, 0.3, rng));
    for (const IVec& b : lattice_ball(n, 2)) EXPECT_LT(liouville_period_full(G, b).discrepancy, 1e-10);
  }
}

TEST(LiouvillePeriod, AdditiveInClassLinearInForm) {
  std::mt19937 rng(23);
  const GraphLagrangian G = graph_of((Vec(2) << 0.3, -0.7).finished(), random_series(2, 3, 0.2, rng));
  const GraphLagrangian H = graph_of((Vec(2) << -0.1, 0.5).finished(), random_series(2, 3, 0.2, rng));
  GraphLagrangian S = graph_of(G.a + 2.5 * H.a, G.f);
  for (auto t : H.f.scaled(2.5).terms) S.f.terms.push_back(t);
  const IVec b1 = iv({1, 2}), b2 = iv({-3, 1});
  EXPECT_NEAR(liouville_period(G, b1 + b2), liouville_period(G, b1) + liouville_period(G, b2), 1e-12);
  EXPECT_NEAR(liouville_period(S, b1), liouville_period(G, b1) + 2.5 * liouville_period(H, b1), 1e-12);
}

TEST(LiouvillePeriod, SmallGraphOnFlatTorus) {
  std::mt19937 rng(5);
  const MetricField g = flat_metric(2);
  for (int i = 0; i < 20; ++i) {
    std::uniform_real_distribution<double> U(-1, 1);
    GraphLagrangian G = graph_of((Vec(2) << U(rng), U(rng)).finished(), random_series(2, 3, 0.1, rng));
    G = G.scaled(0.1 * 0.95 / sup_norm(G, g));
    EXPECT_LE(std::abs(liouville_period(G, iv({1, 0}))), 0.1 * 1.0);
  }
}

// |a . beta| <= eps l_min(beta) for graphs inside the eps-codisc bundle.
class PeriodBound : public ::testing::TestWithParam<int> {};

TEST_P(PeriodBound, HundredRandomGraphs) {
  const bool conformal = GetParam() == 1;
  const MetricField g = conformal ? bumpy_conformal() : flat_metric(2);
  const std::vector<IVec> ball = lattice_ball(2, 3);
  std::vector<double> lmin;
  MinGeodesicOptions opt;
  opt.restarts = 2;
  for (const IVec& b : ball) lmin.push_back(loop_search(g, b, opt).min_length);
  std::mt19937 rng(conformal ? 101 : 100);
  std::uniform_real_distribution<double> U(-1, 1), V(0.3, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const double eps = trial % 2 ? 0.05 : 0.1;
    GraphLagrangian G = graph_of((Vec(2) << U(rng), U(rng)).finished(), random_series(2, 3, 0.08, rng));
    G = G.scaled(eps * V(rng) / sup_norm(G, g, 96));
    ASSERT_LT(sup_norm(G, g, 96), eps);
    for (size_t i = 0; i < ball.size(); ++i)
      EXPECT_LE(std::abs(liouville_period(G, ball[i])), eps * lmin[i] + 1e-12) << ball[i].transpose();
  }
}

INSTANTIATE_TEST_SUITE_P(FlatAndConformal, PeriodBound, ::testing::Values(0, 1));

TEST(CylinderArea, SameCurveAtBothEnds) {
  const auto q = [](double t) { return Vec((Vec(2) << t, 0.1 * std::sin(2 * kPi * t)).finished()); };
  const auto p = [](double t) { return Vec((Vec(2) << std::cos(2 * kPi * t), 0.3).finished()); };
  EXPECT_NEAR(cylinder_area(straight_chain(q, p, p)), 0.0, 1e-14);
}

TEST(CylinderArea, ZeroSectionToConstantGraph) {
  const GraphLagrangian G = graph_of((Vec(2) << 0.42, 0.0).finished());
  const CylinderAreaResult R = cylinder_area_full(graph_cylinder(G, iv({1, 0})));
  EXPECT_NEAR(R.area, 0.42, 1e-10);
  EXPECT_NEAR(R.area, liouville_period(G, iv({1, 0})), 1e-10);
}

TEST(CylinderArea, TrivialCylinderOverGeodesic) {
  // unit-speed geodesic of the skew flat metric in class (1, 1), covector r g(v) / |v|
  Mat A(2, 2);
  A << 2.0, 0.3, 0.3, 1.0;
  const Vec v = (Vec(2) << 1, 1).finished();
  const double ell = std::sqrt(v.dot(A * v));
  for (double r : {0.5, 1.0, 2.0}) {
    const Vec pr = r * A * v / ell;
    const CylinderChain C =
        straight_chain([v](double t) { return Vec(t * v); }, [](double) { return Vec(Vec::Zero(2)); },
                       [pr](double) { return pr; });
    EXPECT_NEAR(cylinder_area(C), r * ell, 1e-10);
  }
}

TEST(CylinderArea, StokesForRandomChains) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const IVec beta = iv({1 + trial % 2, trial % 3 - 1});
    const Vec b = beta.cast<double>();
    const FourierSeries f = random_series(2, 3, 0.2, rng);
    Vec c0(2), c1(2);
    c0 << U(rng), U(rng);
    c1 << U(rng), U(rng);
    const double wob = 0.2 * U(rng);
    CylinderChain C;
    // the base loop moves with s as well, the fibers bend in s
    C.q = [b, wob](double s, double t) {
      return Vec(t * b + wob * std::sin(kPi * s) * (Vec(2) << std::sin(2 * kPi * t), std::cos(2 * kPi * t)).finished());
    };
    C.p = [f, c0, c1, C](double s, double t) {
      const Vec q = C.q(s, t);
      return Vec((1 - s) * c0 + s * s * c1 + s * (1 - s) * f.grad(q) + std::sin(3 * s) * f.value(q) * Vec::Ones(2));
    };
    const CylinderAreaResult R = cylinder_area_full(C);
    EXPECT_LT(R.stokes_defect, 1e-6) << trial;
  }
}

TEST(CylinderArea, GraphCylinderEqualsPeriod) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const GraphLagrangian G =
        graph_of((Vec(2) << 0.1 * trial, -0.05 * trial).finished(), random_series(2, 3, 0.2, rng));
    const IVec beta = iv({1, trial % 3 - 1});
    const CylinderAreaResult R = cylinder_area_full(graph_cylinder(G, beta));
    EXPECT_NEAR(R.area, G.a.dot(beta.cast<double>()), 1e-6);
    EXPECT_LT(R.stokes_defect, 1e-6);
  }
}

TEST(MaslovOfGraph, ConstantForm) {
  EXPECT_EQ(maslov_of_graph(graph_of((Vec(2) << 0.3, 0.1).finished()), iv({1, 0})), 0);
}

TEST(MaslovOfGraph, ExactFourierMode) {
  const GraphLagrangian G = graph_of(Vec::Zero(2), mode(2, iv({1, 1}), 0.4, 0.2));
  for (const IVec& b : lattice_ball(2, 2)) EXPECT_EQ(maslov_of_graph(G, b), 0) << b.transpose();
}

TEST(MaslovOfGraph, RandomGraphs) {
  std::mt19937 rng(53);
  std::normal_distribution<double> N01;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 2;
    Vec a(n);
    for (int i = 0; i < n; ++i) a(i) = N01(rng);
    const GraphLagrangian G = graph_of(a, random_series(n, 3, 0.5, rng));
    IVec b(n);
    for (int i = 0; i < n; ++i) b(i) = static_cast<int>(rng() % 5) - 2;
    if (b.cwiseAbs().sum() == 0) b(0) = 1;
    EXPECT_EQ(maslov_of_graph(G, b), 0);
  }
}

TEST(MaslovOfGraph, CoarseSamplingPropagatesError) {
  const GraphLagrangian G = graph_of(Vec::Zero(2), mode(2, iv({3, 0}), 2.0, 0.0));
  EXPECT_THROW(maslov_of_graph(G, iv({1, 0}), 8), Error);
}

TEST(SymplecticOrder, ScaledFlatMetric) {
  const MetricField g = flat_metric(2);
  const double eps = 0.1;
  const MetricField gp = scaled_metric(g, (1 + eps) * (1 + eps));
  const OrderReport R = symplectic_order_check(g, gp, {iv({1, 0}), iv({1, 1})});
  ASSERT_EQ(R.margins.size(), 2u);
  EXPECT_TRUE(R.all_ok);
  EXPECT_NEAR(R.margins[0].margin, eps * 1.0, 1e-9);
  EXPECT_NEAR(R.margins[1].margin, eps * std::sqrt(2.0), 1e-9);
  for (const auto& m : R.margins) EXPECT_GT(m.margin, 0.0);
}

TEST(SymplecticOrder, ConformalAboveFlat) {
  FourierSeries phi;
  phi.dim = 2;
  // constant mode keeps phi >= 0.05
  phi.terms = {{iv({0, 0}), 0.2, 0.0}, {iv({1, 0}), 0.1, 0.0}, {iv({0, 1}), 0.0, 0.05}};
  const OrderReport R =
      symplectic_order_check(flat_metric(2), conformal_metric(phi), {iv({1, 0}), iv({0, 1}), iv({1, 1}), iv({2, -1})});
  EXPECT_TRUE(R.all_ok);
  EXPECT_GE(R.min_eigen_gap, 0.0);
  for (const auto& m : R.margins) EXPECT_GE(m.margin, -1e-8) << m.beta.transpose();
}

TEST(SymplecticOrder, EqualMetrics) {
  const MetricField g = bumpy_conformal();
  const OrderReport R = symplectic_order_check(g, g, {iv({1, 0}), iv({1, 1})});
  EXPECT_TRUE(R.all_ok);
  for (const auto& m : R.margins) EXPECT_NEAR(m.margin, 0.0, 1e-8);
}

TEST(SymplecticOrder, RejectsUnorderedMetrics) {
  try {
    symplectic_order_check(bumpy_conformal(), flat_metric(2), {iv({1, 0})});
    FAIL() << "expected precondition-violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolation);
  }
}
