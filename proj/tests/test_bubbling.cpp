#include <gtest/gtest.h>

#include "cryamabe/acceptance.hpp"

using namespace cryamabe;

TEST(Cutoff, InnerOneOuterZero) {
  const CutoffSpec c = make_cutoff(sphere_north(1));
  EXPECT_DOUBLE_EQ(c(sphere_north(1)), 1.0);
  EXPECT_DOUBLE_EQ(c(sphere_pole(1)), 0.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const double v = c(random_sphere_point(1, rng));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Ladder, DefaultAndValidation) {
  const auto l = default_ladder();
  ASSERT_EQ(l.size(), 5u);
  EXPECT_DOUBLE_EQ(l.back(), 1e-3);
  EXPECT_THROW(BubbleChart(sphere_north(1), {1e-2, 1e-1}), std::invalid_argument);
  EXPECT_THROW(BubbleChart(sphere_north(1), {}), std::invalid_argument);
}

TEST(PSLab, OneBubbleGapApproachesBubbleLevel) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const PSSequenceLab lab(one_bubble_spec(c), c);
  const PSMetrics m2 = lab.metrics(2), m4 = lab.metrics(4);
  EXPECT_LT(m4.gap_error, m2.gap_error);
  EXPECT_LT(m4.gap_error, 0.02);
  EXPECT_LT(m4.residual_upper, m2.residual_upper);
  // the lower bound never exceeds the upper bound
  EXPECT_LE(m4.residual_lower, m4.residual_upper * (1 + 1e-9));
  // u_infty energy on the multiscale nodes
  EXPECT_NEAR(m4.energy_infty / c.C_E, 1.0, 1e-3);
}

TEST(PSLab, ConcentrationDetectedAtTheBubbleCenter) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const PSSequenceLab lab(one_bubble_spec(c), c);
  const auto pts = detect_concentration(lab, 0.5 * c.bubble_mass(), {0.1, 0.2}, {3, 4});
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_LT(sphere_dist(pts[0], sphere_north(1)), 0.2);
}

TEST(Flow, SubcriticalSeedDecaysToZero) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const TransformPtr T = make_transform(1, 4);
  const YamabeFunctional E(T, c);
  std::mt19937_64 rng(2);
  const SpectralFunction u = subcritical_seed(E, random_band_limited(T->basis_ptr(), rng, 3));
  EXPECT_LE(E.energy(u), 0.9 * c.C_E);
  const FlowReport f = subcritical_flow(E, u);
  EXPECT_TRUE(f.converged_to_zero);
  EXPECT_LT(f.final_norm, 1e-4);
}

TEST(Flow, ConstantSolutionIsStationary) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const TransformPtr T = make_transform(1, 3);
  const YamabeFunctional E(T, c);
  const SpectralFunction u0 = constant_function(T->basis_ptr(), c.u0);
  const FlowReport f = subcritical_flow(E, u0);
  EXPECT_NEAR(f.final_norm, norm_Hk(u0, 1.0), 1e-10);
  EXPECT_FALSE(f.converged_to_zero);
}

TEST(Commutator, CoordinatePairs) {
  auto x = [](const HeisPoint &p) { return p.z[0].real(); };
  auto y = [](const HeisPoint &p) { return p.z[0].imag(); };
  HeisPoint p(1);
  p.z[0] = cplx(0.3, 0.4);
  p.t = -0.2;
  // X x = 1, Y x = 0
  EXPECT_NEAR(three_commutator(x, x, 1.0, p), -0.5, 1e-7);
  EXPECT_NEAR(three_commutator_closed(x, x, p), -0.5, 1e-10);
  EXPECT_NEAR(three_commutator(x, y, 1.0, p), 0.0, 1e-7);
  EXPECT_THROW(three_commutator(x, y, 0.5, p), std::invalid_argument);
}

TEST(Commutator, PolynomialPairsAgree) {
  auto u = [](const HeisPoint &p) { return p.z[0].real() * p.t + p.z[0].imag() * p.z[0].imag() * p.z[0].real(); };
  auto v = [](const HeisPoint &p) { return p.t * p.t - p.z[0].imag() + 2.0 * p.z[0].real() * p.z[0].imag(); };
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const HeisPoint p = random_point(1, rng, 1.0);
    EXPECT_NEAR(three_commutator(u, v, 1.0, p), three_commutator_closed(u, v, p), 1e-6);
  }
}
