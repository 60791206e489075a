#include <gtest/gtest.h>

#include <numbers>

#include "cryamabe/energy.hpp"

using namespace cryamabe;

constexpr double pi = std::numbers::pi;

TEST(Constants, OrderRangeAndExponent) {
  EXPECT_DOUBLE_EQ(p_star(1, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(p_star(2, 1.0), 3.0);
  EXPECT_THROW(p_star(1, 2.0), std::invalid_argument);
  EXPECT_THROW(p_star(1, 0.0), std::invalid_argument);
}

TEST(Constants, SharpConstantN1K1) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  EXPECT_NEAR(c.C_S, 1.0 / pi, 1e-14);
  EXPECT_NEAR(c.C_E, pi * pi / 4.0, 1e-12);
  EXPECT_NEAR(c.bubble_mass(), pi * pi, 1e-12);
  EXPECT_NEAR(c.u0, 0.5, 1e-14);
}

TEST(Constants, ClosedFormIdentityAndGammaForm) {
  for (auto [N, k] : std::vector<std::pair<int, double>>{{1, 1.0}, {1, 0.5}, {2, 1.0}, {2, 0.5}, {3, 1.5}}) {
    const YamabeConstants c = YamabeConstants::make(N, k);
    EXPECT_NEAR(c.C_S * c.lambda0 * c.lambda0 * std::pow(c.total_mass, 2 * k / c.Q), 1.0, 1e-12);
    EXPECT_NEAR(c.C_S / sobolev_constant_gamma_form(N, k), 1.0, 1e-12);
  }
}

TEST(Functional, ConstantSolutionIsCritical) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const TransformPtr T = make_transform(1, 3);
  const YamabeFunctional E(T, c);
  const SpectralFunction u0 = constant_function(T->basis_ptr(), c.u0);
  EXPECT_NEAR(E.energy(u0), c.C_E, 1e-12);
  EXPECT_LT(E.residual(u0), 1e-12);
  EXPECT_NEAR(E.sobolev_quotient(u0), c.C_S, 1e-12);
}

TEST(Functional, HalfOrderConstants) {
  const YamabeConstants c = YamabeConstants::make(1, 0.5);
  const TransformPtr T = make_transform(1, 2);
  const YamabeFunctional E(T, c);
  const SpectralFunction u0 = constant_function(T->basis_ptr(), c.u0);
  EXPECT_NEAR(E.energy(u0), c.C_E, 1e-10);
  EXPECT_LT(E.residual(u0), 1e-10);
}

TEST(Functional, NehariRescale) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const TransformPtr T = make_transform(1, 3);
  const YamabeFunctional E(T, c);
  const SpectralFunction u0 = constant_function(T->basis_ptr(), c.u0);
  const SpectralFunction v = E.nehari_rescale(2.0 * u0);
  EXPECT_NEAR(v.c[0], u0.c[0], 1e-12);
  std::mt19937_64 rng(1);
  const SpectralFunction w = E.nehari_rescale(random_band_limited(T->basis_ptr(), rng));
  const SpectralFunction w2 = E.nehari_rescale(w);
  for (std::size_t i = 0; i < w.c.size(); ++i)
    EXPECT_NEAR(w2.c[i], w.c[i], 1e-10 * (1 + std::abs(w.c[i])));
  const double k = c.k;
  EXPECT_NEAR(E.energy(w), (0.5 - 1.0 / c.p_star) * norm_Hk(w, k) * norm_Hk(w, k), 1e-9 * E.energy(w));
  EXPECT_THROW(E.nehari_rescale(SpectralFunction(T->basis_ptr())), std::invalid_argument);
}

TEST(Functional, GradientMatchesDirectionalDerivative) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  const TransformPtr T = make_transform(1, 3);
  const YamabeFunctional E(T, c);
  std::mt19937_64 rng(2);
  const SpectralFunction u = random_band_limited(T->basis_ptr(), rng);
  const SpectralFunction v = random_band_limited(T->basis_ptr(), rng);
  const double h = 1e-5;
  const double fd = (E.energy(u + h * v) - E.energy(u - h * v)) / (2 * h);
  EXPECT_NEAR(pairing(E.gradient(u), v), fd, 1e-6 * (1 + std::abs(fd)));
}

TEST(Bubble, PdeResidualAndScaling) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    HeisPoint xi = random_point(1, rng, 1.0);
    EXPECT_LT(bubble_pde_residual(BubbleParams(0.7, xi), random_point(1, rng, 2.0), c), 1e-5);
  }
  // omega(0) = cQ for lambda = 1, xi = 0 and omega_lambda(0) = lambda^{-(Q-2k)/2} cQ
  const HeisPoint o = HeisPoint::origin(1);
  EXPECT_NEAR(bubble_eval(BubbleParams(1.0, o), o, c), c.cQ, 1e-14);
  EXPECT_NEAR(bubble_eval(BubbleParams(0.5, o), o, c), 2.0 * c.cQ, 1e-12);
  EXPECT_THROW(BubbleParams(0.0, o), std::invalid_argument);
}

TEST(Bubble, HeisenbergEnergyEqualsBubbleLevel) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  for (double lam : {0.5, 2.0}) {
    HeisPoint xi(1);
    xi.z[0] = cplx(1.0, 1.0);
    const HeisEnergyReport r = energy_heis_bubble(BubbleParams(lam, xi), c);
    EXPECT_NEAR(r.energy / c.C_E, 1.0, 1e-3);
  }
}

TEST(Bubble, NonIntegrableInputRejected) {
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  HeisEnergyOptions o;
  EXPECT_THROW(energy_heis([](const HeisPoint &) { return 1.0; }, c, o), NonIntegrableError);
}
