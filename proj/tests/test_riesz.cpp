#include <gtest/gtest.h>

#include "cryamabe/acceptance.hpp"

using namespace cryamabe;

TEST(Kernel, SingularAtOriginAndHomogeneous) {
  const KernelSpec k{1.0, 1.0, KernelKind::riesz, 1};
  EXPECT_THROW(kernel_eval(k, HeisPoint::origin(1)), SingularPointError);
  HeisPoint p(1);
  p.z[0] = cplx(0.3, -0.7);
  p.t = 0.4;
  for (double r : {0.1, 2.0, 17.0})
    EXPECT_NEAR(kernel_eval(k, dilate(r, p)) / kernel_eval(k, p), std::pow(r, -3.0), 1e-12 * std::pow(r, -3.0));
  EXPECT_NEAR(kernel_decay_slope(k, p), -3.0, 1e-10);
  const KernelSpec h{2.0, 1.0, KernelKind::hyper, 1};
  EXPECT_NEAR(kernel_decay_slope(h, p), -6.0, 1e-10);
}

TEST(Kernel, RejectsBadOrders) {
  EXPECT_THROW((KernelSpec{0.0, 1.0, KernelKind::riesz, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((KernelSpec{4.0, 1.0, KernelKind::riesz, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((KernelSpec{1.0, -1.0, KernelKind::riesz, 1}.validate()), std::invalid_argument);
}

TEST(Grid, ResolutionAndBox) {
  EXPECT_THROW(GridFieldH::koranyi_box(1.0, {4, 8, 8}), std::invalid_argument);
  EXPECT_THROW(GridFieldH::make({0, 0, 0}, {1, 0, 1}, {8, 8, 8}), std::invalid_argument);
  GridFieldH g = GridFieldH::koranyi_box(1.0, {8, 8, 8});
  g.fill([](const HeisPoint &) { return 1.0; });
  EXPECT_NEAR(g.norm_Lp(1.0), 8.0, 1e-12);
}

TEST(Convolution, ZeroInZeroOut) {
  const GridFieldH g = GridFieldH::koranyi_box(1.0, {8, 8, 8});
  const GridFieldH u = convolve(g, KernelSpec{1.0, 1.0, KernelKind::riesz, 1});
  for (double x : u.v)
    EXPECT_EQ(x, 0.0);
}

TEST(Convolution, PositiveInputGivesPositiveOutput) {
  GridFieldH g = GridFieldH::koranyi_box(2.0, {10, 10, 10});
  g.fill([](const HeisPoint &p) { return bump(p); });
  const GridFieldH u = convolve(g, KernelSpec{1.0, 1.0, KernelKind::riesz, 1});
  for (double x : u.v)
    EXPECT_GT(x, 0.0);
}

TEST(PV, OuterRadiusOnlyMattersThroughTheTail) {
  PVOptions o;
  o.polar = {0.0, 0.0, 12, 6, 12, 6};
  HeisPoint p(1);
  p.z[0] = cplx(0.2, 0.1);
  auto u = [](const HeisPoint &q) { return bump(q); };
  const double a = pv_fractional_value(u, 1.0, p, 0.05, o);
  o.r_out = 40.0;
  o.polar.panels += 4;
  const double b = pv_fractional_value(u, 1.0, p, 0.05, o);
  EXPECT_NEAR(a, b, 1e-6 * std::abs(a));
}

TEST(PV, PositiveAtTheMaximumOfABump) {
  PVOptions o;
  o.polar = {0.0, 0.0, 12, 6, 12, 6};
  const PVReport r = pv_fractional([](const HeisPoint &p) { return bump(p); }, 1.0, HeisPoint::origin(1), o);
  EXPECT_GT(r.value, 0.0);
  EXPECT_GT(r.extrapolated, 0.0);
  EXPECT_THROW(pv_fractional([](const HeisPoint &) { return 1.0; }, 2.0, HeisPoint::origin(1), o),
               std::invalid_argument);
}

TEST(Semigroup, CoarseRunIsConsistent) {
  SemigroupOptions o;
  o.table_r = 16;
  o.table_t = 32;
  o.inner = {-10.0, 0.0, 10, 4, 10, 4};
  o.outer = {-10.0, 0.0, 24, 4, 10, 4};
  o.eval_r = 4;
  o.eval_t = 5;
  const SemigroupReport r = semigroup_check([](const HeisPoint &p) { return bump(p); }, 1.0, 1.0, o);
  EXPECT_GT(r.mass, 0.0);
  EXPECT_GT(r.fitted_constant, 0.0);
  EXPECT_LT(r.relative_error, 5e-2);
  EXPECT_THROW(semigroup_check([](const HeisPoint &p) { return bump(p); }, 2.0, 2.0, o), std::invalid_argument);
}
