#include <gtest/gtest.h>

#include <numbers>

#include "cryamabe/minimax.hpp"

using namespace cryamabe;

namespace {

struct Sphere {
  YamabeConstants c = YamabeConstants::make(1, 1.0);
  TransformPtr T = make_transform(1, 4);
  YamabeFunctional E{T, c};
};

} // namespace

TEST(Mask, ConstantUnderHopfAndOdd) {
  Sphere s;
  const SpectralFunction one = constant_function(s.T->basis_ptr(), 1.0);
  const SpectralFunction h = project_XG(one, SubgroupSpec{true, false, false});
  EXPECT_EQ(h.c, one.c);
  const SpectralFunction o = project_XG(one, SubgroupSpec{false, true, false});
  EXPECT_DOUBLE_EQ(o.norm_L2(), 0.0);
}

TEST(Mask, HopfKillsOffDiagonalBlocks) {
  Sphere s;
  SpectralFunction u(s.T->basis_ptr());
  u.at(2, 1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(project_XG(u, SubgroupSpec{true, false, false}).norm_L2(), 0.0);
}

TEST(Mask, ProjectionIdempotentAndCommutesWithA2k) {
  Sphere s;
  std::mt19937_64 rng(1);
  const SpectralFunction u = random_band_limited(s.T->basis_ptr(), rng);
  for (const SubgroupSpec G : {SubgroupSpec{true, false, false}, SubgroupSpec{false, true, false},
                               SubgroupSpec{true, false, true}}) {
    const SpectralFunction p = project_XG(u, G);
    EXPECT_EQ(project_XG(p, G).c, p.c);
    const SpectralFunction a = project_XG(apply_A2k(u, 1.0), G), b = apply_A2k(p, 1.0);
    EXPECT_EQ(a.c, b.c);
  }
}

TEST(Mask, OddMasksMatchTheirActions) {
  Sphere s;
  std::mt19937_64 rng(2);
  const SpectralFunction u = random_band_limited(s.T->basis_ptr(), rng);
  const SpectralFunction odd = project_XG(u, SubgroupSpec{false, true, false});
  const SpectralFunction first = project_XG(u, SubgroupSpec{false, false, true});
  for (int i = 0; i < 20; ++i) {
    const SpherePoint z = random_sphere_point(1, rng);
    SpherePoint m = z;
    for (int k = 0; k <= 1; ++k)
      m.zeta[k] = -z.zeta[k];
    EXPECT_NEAR(synthesize(odd, m), -synthesize(odd, z), 1e-12);
    SpherePoint f = z;
    f.zeta[0] = -z.zeta[0];
    EXPECT_NEAR(synthesize(first, f), -synthesize(first, z), 1e-12);
  }
}

TEST(Mask, HopfAndAntipodalOddIsEmpty) {
  Sphere s;
  const SubgroupSpec G{true, true, false};
  EXPECT_EQ(mask_size(s.T->basis(), G), 0);
  std::mt19937_64 rng(3);
  std::vector<SpectralFunction> seeds{random_band_limited(s.T->basis_ptr(), rng)};
  EXPECT_THROW(minimax_search(s.E, G, seeds), EmptyMaskError);
}

TEST(Invariance, IdentityPhaseAndRandomUnitary) {
  Sphere s;
  std::mt19937_64 rng(4);
  const SpectralFunction u = random_band_limited(s.T->basis_ptr(), rng, 3);
  EXPECT_LT(invariance_check(s.E, u, Unitary::identity(2)), 1e-12);
  EXPECT_LT(invariance_check(s.E, u, Unitary::phase(2, 0.3)), 1e-9);
  EXPECT_LT(invariance_check(s.E, u, random_unitary(2, rng)), 1e-9);
  Unitary bad = Unitary::identity(2);
  bad.a[0][0] = 2.0;
  EXPECT_THROW(invariance_check(s.E, u, bad), std::invalid_argument);
}

TEST(Orbits, Accumulation) {
  std::mt19937_64 rng(5);
  const SpherePoint z = random_sphere_point(1, rng);
  EXPECT_TRUE(orbit_accumulation_check(z, SubgroupSpec{true, false, false}));
  EXPECT_FALSE(orbit_accumulation_check(z, Unitary::identity(2)));
  EXPECT_FALSE(orbit_accumulation_check(z, Unitary::phase(2, 2.0 * std::numbers::pi / 5.0)));
}

TEST(Search, HopfControlFindsTheBubbleLevel) {
  Sphere s;
  const CriticalPointReport r =
      nehari_descent(s.E, SubgroupSpec{true, false, false}, constant_function(s.T->basis_ptr(), 3.0), {});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, s.c.C_E, 1e-10);
}

TEST(Search, SymmetricCandidateIsCriticalInFullSpace) {
  Sphere s;
  const SubgroupSpec G{true, false, true};
  MinimaxOptions o;
  o.seed_band = 3;
  const auto reps = minimax_search(s.E, G, random_seeds(s.T->basis_ptr(), G, 2, 7, 3), o);
  for (const auto &r : reps) {
    EXPECT_TRUE(r.converged);
    EXPECT_LT(r.residual_full, 2.0 * r.residual + 1e-12);
    EXPECT_GT(r.energy, s.c.C_E);
    EXPECT_NEAR(r.energy, 0.25 * r.lp_mass, 1e-8 * r.energy);
  }
}
