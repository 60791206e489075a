#include <gtest/gtest.h>

#include "cryamabe/cayley.hpp"

using namespace cryamabe;

TEST(Cayley, LandsOnSphereAndRoundTrips) {
  for (int N = 1; N <= kMaxN; ++N) {
    std::mt19937_64 rng(10 + N);
    for (int i = 0; i < 500; ++i) {
      const HeisPoint p = random_point(N, rng, 2.0);
      const SpherePoint s = cayley(p);
      double r2 = 0;
      for (int k = 0; k <= N; ++k)
        r2 += std::norm(s.zeta[k]);
      EXPECT_NEAR(r2, 1.0, 1e-14);
      const HeisPoint q = cayley_inv(s);
      for (int j = 0; j < N; ++j)
        EXPECT_NEAR(std::abs(q.z[j] - p.z[j]), 0.0, 1e-12);
      EXPECT_NEAR(q.t, p.t, 1e-12);
    }
  }
}

TEST(Cayley, OriginToNorthPoleExcluded) {
  const SpherePoint n = cayley(HeisPoint::origin(1));
  EXPECT_NEAR(std::abs(n.zeta[1] - 1.0), 0.0, 1e-15);
  EXPECT_THROW(cayley_inv(sphere_pole(1)), SingularChartError);
}

TEST(Cayley, JacobianAtOriginAndSymmetry) {
  // Lambda_C(0) = 2^Q
  EXPECT_NEAR(lambda_cayley(HeisPoint::origin(1)), 16.0, 1e-12);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const HeisPoint p = random_point(1, rng, 2.0);
    EXPECT_NEAR(lambda_cayley(p), lambda_cayley(group_inv(p)), 1e-12);
  }
}

TEST(Cayley, JacobianIntegratesToSphereMass) {
  const double v = haar_integral([](const HeisPoint &p) { return lambda_cayley(p); },
                                 polar_quadrature(HeisPoint::origin(1)), HaarMeasure::calibrated(1));
  // 2^{2N+2} pi^{N+1}
  EXPECT_NEAR(v / (16.0 * std::numbers::pi * std::numbers::pi), 1.0, 1e-8);
}

TEST(SphereDistance, MetricBasics) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const SpherePoint a = random_sphere_point(1, rng), b = random_sphere_point(1, rng);
    EXPECT_NEAR(sphere_dist(a, a), 0.0, 1e-7);
    EXPECT_NEAR(sphere_dist(a, b), sphere_dist(b, a), 1e-12);
    EXPECT_GE(sphere_dist(a, b), 0.0);
  }
}

TEST(Chart, InverseAndJacobianScaling) {
  HeisPoint w(1);
  w.z[0] = cplx(0.2, -0.4);
  w.t = 0.3;
  const ConformalChart ch(w, 0.01);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const HeisPoint p = random_point(1, rng, 3.0);
    const HeisPoint q = ch.inverse(ch.map(p));
    EXPECT_NEAR(std::abs(q.z[0] - p.z[0]), 0.0, 1e-8);
    EXPECT_NEAR(q.t, p.t, 1e-8);
    EXPECT_NEAR(ch.jacobian(p), lambda_cayley(ch.to_group(p)) * std::pow(0.01, 4), 1e-20);
  }
  EXPECT_THROW(ConformalChart(w, 0.0), std::invalid_argument);
}

TEST(Chart, PullbackOfPushforwardIsIdentity) {
  const ConformalChart ch(HeisPoint::origin(1), 0.5);
  HeisFunction U = [](const HeisPoint &p) { return 1.0 / (1.0 + p.z_norm2() + p.t * p.t); };
  const SphereFunction u = conformal_pushforward(U, ch, 1.0);
  const HeisFunction V = conformal_pullback(u, ch, 1.0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const HeisPoint p = random_point(1, rng, 2.0);
    EXPECT_NEAR(V(p), U(p), 1e-10);
  }
}

TEST(Chart, BallInclusion) {
  const InclusionReport r = ball_inclusion_check(1, 2000, 3);
  EXPECT_EQ(r.violations, 0);
  EXPECT_GT(r.samples, 0);
}

TEST(SpherePointTest, RejectsNonUnitVectors) {
  std::array<cplx, kMaxN + 1> z{};
  z[0] = 2.0;
  EXPECT_THROW(SpherePoint::from(1, z), std::invalid_argument);
  EXPECT_NO_THROW(SpherePoint::from(1, z, true));
}
