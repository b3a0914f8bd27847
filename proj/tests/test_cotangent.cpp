#include <gtest/gtest.h>

#include "clab/cotangent.hpp"

#include <random>
#include <sstream>

using namespace clab;

namespace {

FourierSeries sine_phi() {
  FourierSeries phi;
  phi.dim = 2;
  IVec k(2);
  k << 1, 0;
  phi.terms.push_back({k, 0.0, 0.1});
  IVec k2(2);
  k2 << 1, 1;
  phi.terms.push_back({k2, 0.05, 0.0});
  return phi;
}

IVec e1(int n) {
  IVec b = IVec::Zero(n);
  b(0) = 1;
  return b;
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  double mx = 0, my = 0;
  const int k = static_cast<int>(h.size());
  for (int i = 0; i < k; ++i) mx += std::log(h[i]), my += std::log(err[i]);
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < k; ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(err[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace

TEST(RadialProfile, PlateauAndLinearPieces) {
  const RadialProfile P = radial_profile();
  for (double r : {0.0, 0.2, 0.5}) EXPECT_EQ(P.chi(r), 1.0);
  for (double r : {2.0, 3.0, 10.0}) EXPECT_EQ(P.chi(r), r);
  for (double u : {0.0, 0.1, 0.3, 0.5}) EXPECT_EQ(P.G(u), u);
}

TEST(RadialProfile, MonotoneAndTwiceDifferentiable) {
  const RadialProfile P = radial_profile();
  double prev = P.chi(0);
  for (int i = 1; i <= 4000; ++i) {
    const double r = 3.0 * i / 4000;
    EXPECT_GE(P.chi(r), prev);
    EXPECT_GE(P.chi(r), 1.0);
    prev = P.chi(r);
  }
  const double h = 1e-5;
  for (double r : {0.5, 0.7, 1.0, 1.5, 1.9, 2.0}) {
    EXPECT_NEAR((P.chi(r + h) - P.chi(r - h)) / (2 * h), P.chi_d(r), 1e-8);
    EXPECT_NEAR((P.chi_d(r + h) - P.chi_d(r - h)) / (2 * h), P.chi_dd(r), 1e-6);
  }
  // chi'' is continuous at the junctions
  EXPECT_NEAR(P.chi_dd(0.5 + 1e-9), 0.0, 1e-6);
  EXPECT_NEAR(P.chi_dd(2.0 - 1e-9), 0.0, 1e-6);
}

TEST(RadialProfile, InverseRoundTrip) {
  const RadialProfile P = radial_profile();
  for (int i = 0; i <= 200; ++i) {
    const double s = 10.0 * i / 200;
    EXPECT_NEAR(P.G(P.f(s)), s, 1e-8);
  }
  for (int i = 1; i <= 100; ++i) {
    const double u = 0.05 * i;
    EXPECT_NEAR(P.f(P.G(u)), u, 1e-8 * std::max(1.0, u));
  }
}

TEST(RadialProfile, SolvesTheOde) {
  const RadialProfile P = radial_profile();
  // RK4 on f' = chi(f), f(0) = 0
  double f = 0;
  const double h = 1e-3;
  for (int i = 0; i < 4000; ++i) {
    auto F = [&](double y) { return P.chi(y); };
    const double k1 = F(f), k2 = F(f + 0.5 * h * k1), k3 = F(f + 0.5 * h * k2), k4 = F(f + h * k3);
    f += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(f, P.f(4.0), 1e-8 * P.f(4.0));
}

TEST(RadialProfile, ExponentialGrowth) {
  const RadialProfile P = radial_profile();
  const double slope = (std::log(P.f(8.0)) - std::log(P.f(6.0))) / 2.0;
  EXPECT_NEAR(slope, 1.0, 1e-3);
}

TEST(RadialProfile, RejectsBadParameters) {
  try {
    radial_profile(2.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(Frame, SymplecticConvention) {
  const Mat W = omega_matrix(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Vec dq = Vec::Unit(4, i), dp = Vec::Unit(4, 2 + j);
      EXPECT_EQ(dq.dot(W * dp), i == j ? -1.0 : 0.0);
      EXPECT_EQ(dp.dot(W * dq), i == j ? 1.0 : 0.0);
    }
}

TEST(Frame, FlatExample) {
  const MetricField m = flat_metric(2);
  const RadialProfile P = radial_profile();
  Vec q(2), p(2);
  q << 0.3, 0.8;
  p << 1, 0;
  const CotangentFrame F = frame_at(m, P, {q, p});
  const Vec Jq1 = F.J * Vec::Unit(4, 0), Jq2 = F.J * Vec::Unit(4, 1);
  EXPECT_LT((Jq1 + P.chi(1.0) * Vec::Unit(4, 2)).norm(), 1e-14);
  EXPECT_LT((Jq2 + Vec::Unit(4, 3)).norm(), 1e-14);
  // the Reeb vector is d/dq_1 and J R = -chi d/dr
  EXPECT_LT((F.R - Vec::Unit(4, 0)).norm(), 1e-14);
  EXPECT_LT((F.J * F.R + P.chi(1.0) * F.radial).norm(), 1e-14);
}

TEST(Frame, ZeroSectionFlat) {
  const Mat J = J_at(flat_metric(2), radial_profile(), Vec::Zero(2), Vec::Zero(2));
  Mat expect = Mat::Zero(4, 4);
  expect.topRightCorner(2, 2) = Mat::Identity(2, 2);
  expect.bottomLeftCorner(2, 2) = -Mat::Identity(2, 2);
  EXPECT_EQ(J, expect);
}

TEST(Frame, InvariantsOnRandomPoints) {
  const MetricField m = conformal_metric(sine_phi());
  const RadialProfile P = radial_profile();
  const Mat W = omega_matrix(2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0, 1), S(-3, 3);
  for (int t = 0; t < 100; ++t) {
    Vec q(2), p(2);
    q << U(rng), U(rng);
    p << S(rng), S(rng);
    const CotangentFrame F = frame_at(m, P, {q, p});
    EXPECT_LT((F.J * F.J + Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
    const Mat WJ = W * F.J;
    EXPECT_LT((WJ - WJ.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (WJ + WJ.transpose()));
    EXPECT_GT(es.eigenvalues().minCoeff(), 1e-10);
    // R horizontal with g(pi R) = p / r
    const Vec piR = F.R.head(2);
    EXPECT_LT((F.R - F.H * piR).norm(), 1e-12);
    EXPECT_LT((m.eval(q) * piR - F.radial.tail(2)).norm(), 1e-12);
    EXPECT_NEAR(F.alpha.dot(F.R), 1.0, 1e-12);
    // H Lagrangian
    EXPECT_LT((F.H.transpose() * W * F.H).cwiseAbs().maxCoeff(), 1e-12);
    // splitting completeness
    Mat B(4, 4);
    B << F.H, F.F;
    Eigen::JacobiSVD<Mat> svd(B);
    EXPECT_LT(svd.singularValues()(0) / svd.singularValues()(3), 1e6);
    // ker alpha in H goes onto the tangent vertical part of ker alpha under sharp
    const Mat g = m.eval(q);
    Vec w(2);
    w << -p(1), p(0);  // p(w) = 0
    const Vec image = g * w;
    EXPECT_NEAR(p.dot(g.inverse() * image), 0.0, 1e-8);
    EXPECT_LT((F.J * (F.H * w) + (Vec(4) << 0, 0, image).finished()).norm(), 1e-10);
    EXPECT_GT(image.norm(), 0.0);
  }
}

TEST(Frame, AntiHolomorphicInvolution) {
  const MetricField m = conformal_metric(sine_phi());
  const RadialProfile P = radial_profile();
  Mat dsig = Mat::Identity(4, 4);
  dsig.bottomRightCorner(2, 2) *= -1;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1), S(-3, 3);
  for (int t = 0; t < 100; ++t) {
    Vec q(2), p(2);
    q << U(rng), U(rng);
    p << S(rng), S(rng);
    const Mat lhs = dsig * J_at(m, P, q, p);
    const Mat rhs = -J_at(m, P, q, -p) * dsig;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Frame, OnAndOffSectionAgree) {
  const MetricField m = conformal_metric(sine_phi());
  const RadialProfile P = radial_profile();
  Vec q(2), p(2);
  q << 0.4, 0.1;
  p << 0.6e-6, 0.8e-6;
  EXPECT_LT((J_at(m, P, q, p) - J_at(m, P, q, Vec::Zero(2))).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Frame, TubeCoordinateDerivatives) {
  const MetricField m = tube_metric(3, 1.0);
  const RadialProfile P = radial_profile();
  const double h = 1e-4;
  for (double yn : {0.8, 1.3, 1.7, 2.5}) {
    Vec q(3), p(3);
    q << 0.37, 0, 0;
    p << yn, 0, 0;
    const Vec dxn = Vec::Unit(6, 0);
    for (int i = 0; i < 3; ++i) {
      Vec e = Vec::Zero(3);
      e(i) = h;
      const Vec dJ = (J_at(m, P, q, p + e) - J_at(m, P, q, p - e)) * dxn / (2 * h);
      const Vec expect = i == 0 ? Vec(-P.chi_d(yn) * Vec::Unit(6, 3))
                                : Vec((1 - P.chi(yn)) / yn * Vec::Unit(6, 3 + i));
      EXPECT_LT((dJ - expect).norm(), 1e-5) << "yn=" << yn << " i=" << i;
    }
  }
}

TEST(Cylinder, FlatNodeValues) {
  const MetricField m = flat_metric(2);
  const RadialProfile P = radial_profile();
  const DiscreteCylinder c = build_cylinder(m, P, straight_curve(m, Vec::Zero(2), e1(2), 16), 4.0, 16, 16);
  for (int i = 0; i <= c.Ns(); ++i)
    for (int j = 0; j < c.Nt(); ++j) {
      EXPECT_NEAR(c.p(i, j)(0), P.f(c.s(i)), 1e-12);
      EXPECT_NEAR(c.p(i, j)(1), 0.0, 1e-14);
      EXPECT_NEAR(c.q(i, j)(0), c.t(j), 1e-12);
    }
  for (int j = 0; j < c.Nt(); ++j) EXPECT_EQ(c.p(0, j).norm(), 0.0);
}

TEST(Cylinder, HolomorphicityResidualIsSecondOrderFlat) {
  const MetricField m = flat_metric(2);
  const RadialProfile P = radial_profile();
  std::vector<double> hs, errs;
  for (int N : {16, 32, 64, 128}) {
    const DiscreteCylinder c = build_cylinder(m, P, straight_curve(m, Vec::Zero(2), e1(2), 16), 3.0, N, N);
    hs.push_back(3.0 / N);
    errs.push_back(holomorphicity_residual(c, m, P));
  }
  EXPECT_GE(fitted_order(hs, errs), 1.9);
}

TEST(Cylinder, HolomorphicOnTubeAxis) {
  const MetricField m = tube_metric(2, 1.5);
  const RadialProfile P = radial_profile();
  std::vector<double> hs, errs;
  for (int N : {32, 64, 128, 256}) {
    const DiscreteCylinder c = build_cylinder(m, P, straight_curve(m, Vec::Zero(2), e1(2), 16), 3.0, N, N);
    hs.push_back(3.0 / N);
    errs.push_back(holomorphicity_residual(c, m, P));
  }
  EXPECT_GE(fitted_order(hs, errs), 1.9);
}

TEST(Cylinder, BoundaryCircleIsTheGeodesic) {
  const MetricField m = tube_metric(2, 1.0);
  const DiscreteCylinder c = build_cylinder(m, radial_profile(), straight_curve(m, Vec::Zero(2), e1(2), 16), 4.0, 8, 32);
  for (int j = 0; j < c.Nt(); ++j) {
    EXPECT_NEAR(c.q(0, j)(0), c.t(j), 1e-12);
    EXPECT_NEAR(c.q(0, j)(1), 0.0, 1e-15);
    EXPECT_EQ(c.p(0, j).norm(), 0.0);
  }
}

TEST(Energy, ExplicitCylinderUnitLength) {
  const MetricField m = flat_metric(2);
  const DiscreteCylinder c = build_cylinder(m, radial_profile(), straight_curve(m, Vec::Zero(2), e1(2), 16), 6.0, 256, 32);
  const EnergyReport E = energy(c, m);
  EXPECT_NEAR(E.E_omega, 1.0, 0.01);
  EXPECT_NEAR(E.E_alpha, 1.0, 0.01);
  EXPECT_NEAR(E.E, 2.0, 0.02);
  EXPECT_LE(E.E, 3.0);
}

TEST(Energy, DoubledGeodesic) {
  const MetricField m = flat_metric(2);
  IVec b(2);
  b << 2, 0;
  const DiscreteCylinder c = build_cylinder(m, radial_profile(), straight_curve(m, Vec::Zero(2), b, 32), 6.0, 256, 64);
  EXPECT_NEAR(energy(c, m).E, 4.0, 0.04);
}

TEST(Energy, DegenerateCylinder) {
  const MetricField m = flat_metric(2);
  DiscreteCylinder c = build_cylinder(m, radial_profile(), straight_curve(m, Vec::Zero(2), e1(2), 16), 4.0, 16, 16);
  for (auto& P : c.P) P.setZero();
  const EnergyReport E = energy(c, m);
  EXPECT_EQ(E.E, 0.0);
}

TEST(Energy, TruncationTooShort) {
  const MetricField m = flat_metric(2);
  const DiscreteCylinder c = build_cylinder(m, radial_profile(), straight_curve(m, Vec::Zero(2), e1(2), 16), 0.8, 16, 16);
  try {
    energy(c, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationError);
  }
}

TEST(Cylinder, CsvDump) {
  const MetricField m = flat_metric(2);
  const DiscreteCylinder c = build_cylinder(m, radial_profile(), straight_curve(m, Vec::Zero(2), e1(2), 16), 2.0, 8, 8);
  std::ostringstream os;
  write_cylinder_csv(os, c);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "s,t,q_1,q_2,p_1,p_2");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 9 * 8);
}
