#include <gtest/gtest.h>

#include <cstdlib>
#include <numbers>

#include "cryamabe/heisenberg.hpp"

using namespace cryamabe;

namespace {

HeisPoint pt(double x, double y, double t) {
  HeisPoint p(1);
  p.z[0] = cplx(x, y);
  p.t = t;
  return p;
}

void expect_near(const HeisPoint &a, const HeisPoint &b, double tol) {
  ASSERT_EQ(a.N, b.N);
  for (int j = 0; j < a.N; ++j)
    EXPECT_NEAR(std::abs(a.z[j] - b.z[j]), 0.0, tol);
  EXPECT_NEAR(a.t, b.t, tol);
}

} // namespace

TEST(Group, LawMatchesTwistedProduct) {
  const HeisPoint p = pt(1, 2, 3), q = pt(-0.5, 0.25, 1);
  const HeisPoint r = group_mul(p, q);
  // t + t' + 2 Im(z conj(z'))
  const double im = std::imag(cplx(1, 2) * std::conj(cplx(-0.5, 0.25)));
  EXPECT_DOUBLE_EQ(r.t, 3 + 1 + 2 * im);
  EXPECT_EQ(r.z[0], cplx(0.5, 2.25));
}

TEST(Group, AxiomsOnRandomTriples) {
  for (int N = 1; N <= kMaxN; ++N) {
    std::mt19937_64 rng(N);
    for (int i = 0; i < 500; ++i) {
      const HeisPoint p = random_point(N, rng, 2), q = random_point(N, rng, 2), s = random_point(N, rng, 2);
      expect_near(group_mul(group_mul(p, q), s), group_mul(p, group_mul(q, s)), 1e-12);
      expect_near(group_mul(p, group_inv(p)), HeisPoint::origin(N), 1e-12);
      expect_near(group_mul(HeisPoint::origin(N), p), p, 0.0);
    }
  }
}

TEST(Group, DilationIsAnAutomorphism) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const HeisPoint p = random_point(2, rng, 1.5), q = random_point(2, rng, 1.5);
    const double lam = 0.1 + i * 0.05;
    expect_near(dilate(lam, group_mul(p, q)), group_mul(dilate(lam, p), dilate(lam, q)), 1e-11);
  }
}

TEST(Gauge, HomogeneousSymmetricLeftInvariant) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const HeisPoint p = random_point(1, rng, 2), q = random_point(1, rng, 2), s = random_point(1, rng, 2);
    EXPECT_NEAR(koranyi_gauge(dilate(3.0, p)), 3.0 * koranyi_gauge(p), 1e-12 * koranyi_gauge(p) * 3);
    EXPECT_NEAR(koranyi_gauge(group_inv(p)), koranyi_gauge(p), 1e-14);
    const double d = koranyi_dist(p, q);
    EXPECT_NEAR(koranyi_dist(group_mul(s, p), group_mul(s, q)), d, 1e-12 * (1 + d));
    EXPECT_LE(koranyi_dist(p, s), koranyi_dist(p, q) + koranyi_dist(q, s) + 1e-12);
  }
  EXPECT_DOUBLE_EQ(koranyi_gauge(pt(1, 0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(koranyi_gauge(pt(0, 0, 4)), 2.0);
}

TEST(Gauge, BallVolumeClosedForm) {
  // int_{|z|<1} 2 sqrt(1 - |z|^4) dz = pi^2 / 2 for N = 1
  EXPECT_NEAR(koranyi_ball_volume(1), std::numbers::pi * std::numbers::pi / 2, 1e-12);
}

TEST(VectorFields, ActionOnCoordinates) {
  auto x = [](const HeisPoint &p) { return p.z[0].real(); };
  auto y = [](const HeisPoint &p) { return p.z[0].imag(); };
  auto t = [](const HeisPoint &p) { return p.t; };
  const HeisPoint p = pt(0.3, -0.7, 0.2);
  EXPECT_NEAR(vector_field(Field::X, 0, x, p, 1e-3, 4), 1.0, 1e-10);
  EXPECT_NEAR(vector_field(Field::X, 0, t, p, 1e-3, 4), 2 * -0.7, 1e-10);
  EXPECT_NEAR(vector_field(Field::Y, 0, t, p, 1e-3, 4), -2 * 0.3, 1e-10);
  EXPECT_NEAR(vector_field(Field::Y, 0, y, p, 1e-3, 4), 1.0, 1e-10);
}

TEST(VectorFields, CommutatorIsMinusFourT) {
  auto f = [](const HeisPoint &p) { return std::sin(p.t) + p.z[0].real() * p.t; };
  const HeisPoint p = pt(0.4, 0.1, -0.3);
  const double h = 1e-3;
  auto Yf = [&](const HeisPoint &q) { return vector_field(Field::Y, 0, f, q, h, 4); };
  auto Xf = [&](const HeisPoint &q) { return vector_field(Field::X, 0, f, q, h, 4); };
  const double xy = vector_field(Field::X, 0, Yf, p, h, 4) - vector_field(Field::Y, 0, Xf, p, h, 4);
  const double ft = std::cos(p.t) + p.z[0].real();
  EXPECT_NEAR(xy, -4.0 * ft, 1e-6);
}

TEST(VectorFields, LeftInvariance) {
  auto f = [](const HeisPoint &p) { return std::exp(-p.z_norm2()) * std::cos(p.t); };
  const HeisPoint a = pt(0.7, -0.2, 0.5), p = pt(-0.1, 0.3, 0.2);
  auto fa = [&](const HeisPoint &q) { return f(group_mul(a, q)); };
  EXPECT_NEAR(sub_laplacian(fa, p, 1e-3, 4), sub_laplacian(f, group_mul(a, p), 1e-3, 4), 1e-8);
}

TEST(SubLaplacian, QuarterNormalization) {
  // Delta_b |z|^2 = (X^2 + Y^2)/4 |z|^2 = 1
  auto f = [](const HeisPoint &p) { return p.z_norm2(); };
  EXPECT_NEAR(sub_laplacian(f, pt(0.2, 0.5, 1.0), 1e-3, 4), 1.0, 1e-9);
  EXPECT_NEAR(sub_laplacian(f, pt(0.2, 0.5, 1.0), 1e-3, 2), 1.0, 1e-7);
}

TEST(Haar, PolarRuleIntegratesGaussianGauge) {
  // int exp(-|z|^4 - t^2) = pi^2 / 2 on H^1
  const double v = haar_integral([](const HeisPoint &p) { return std::exp(-std::pow(koranyi_gauge(p), 4)); },
                                 polar_quadrature(HeisPoint::origin(1)));
  EXPECT_NEAR(v, std::numbers::pi * std::numbers::pi / 2, 1e-7);
}

TEST(Haar, BoxAndBallRules) {
  HeisBox b = HeisBox::cube(1, -1.0, 1.0);
  EXPECT_NEAR(haar_integral([](const HeisPoint &) { return 1.0; }, b, 8), b.volume(), 1e-12);
  const double mc = haar_integral([](const HeisPoint &) { return 1.0; }, KoranyiBall{HeisPoint::origin(1), 1.0}, 20000, 1);
  EXPECT_NEAR(mc, koranyi_ball_volume(1), 0.05 * koranyi_ball_volume(1));
}

TEST(Errors, DimensionAndMeasure) {
  EXPECT_THROW(HeisPoint(0), std::invalid_argument);
  EXPECT_THROW(HeisPoint(kMaxN + 1), std::invalid_argument);
  EXPECT_THROW(HaarMeasure(-1.0), std::invalid_argument);
}

TEST(Threads, EnvironmentCap) {
  setenv("CRYAMABE_THREADS", "1", 1);
  EXPECT_EQ(thread_cap(), 1);
  std::vector<int> hit(100, 0);
  parallel_for(100, [&](long i) { hit[i] += 1; });
  for (int h : hit)
    EXPECT_EQ(h, 1);
  unsetenv("CRYAMABE_THREADS");
}

TEST(Threads, ExceptionsPropagate) {
  EXPECT_THROW(parallel_for(10, [](long i) { require(i != 7, "seven"); }), std::invalid_argument);
}
