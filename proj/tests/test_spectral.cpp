#include <gtest/gtest.h>

#include <filesystem>

#include "cryamabe/spectral.hpp"

using namespace cryamabe;

TEST(Spectral, BidegreeDimensions) {
  // N = 1: dim H_{j,l} = j + l + 1
  for (int j = 0; j < 6; ++j)
    for (int l = 0; l < 6; ++l)
      EXPECT_EQ(dim_H(j, l, 1), static_cast<unsigned long long>(j + l + 1));
  // N = 2: (j+l+2)(j+1)(l+1)/2
  for (int j = 0; j < 5; ++j)
    for (int l = 0; l < 5; ++l)
      EXPECT_EQ(dim_H(j, l, 2), static_cast<unsigned long long>((j + l + 2) * (j + 1) * (l + 1) / 2));
}

TEST(Spectral, EigenvalueGammaRatio) {
  // Q = 4, k = 1: Gamma(j + 3/2) / Gamma(j + 1/2) = j + 1/2
  for (int j = 0; j < 20; ++j)
    EXPECT_NEAR(lambda_jk(j, 1.0, 4), j + 0.5, 1e-12 * (j + 1));
  EXPECT_THROW(lambda_jk(0, 2.0, 4), std::invalid_argument);
  EXPECT_THROW(lambda_jk(-1, 1.0, 4), std::invalid_argument);
}

TEST(Spectral, BasisSizesAndOrthonormality) {
  const TransformPtr T = make_transform(1, 4);
  const HarmonicBasis &B = T->basis();
  int expected = 0;
  for (int j = 0; j <= 4; ++j)
    for (int l = 0; l <= 4; ++l)
      expected += j + l + 1;
  EXPECT_EQ(B.size(), expected);
  const auto &q = T->quadrature();
  for (int a = 0; a < B.size(); a += 3)
    for (int b = 0; b < B.size(); b += 5) {
      double s = 0;
      for (long i = 0; i < q.size(); ++i)
        s += q.weights[i] * B.eval(a, q.nodes[i]) * B.eval(b, q.nodes[i]);
      EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-11);
    }
}

TEST(Spectral, RealBasisNeedsSquareTruncation) {
  EXPECT_THROW(build_basis(1, 3, 2), std::invalid_argument);
}

TEST(Spectral, SynthesisAnalysisRoundTrip) {
  const TransformPtr T = make_transform(1, 5);
  std::mt19937_64 rng(1);
  const SpectralFunction u = random_band_limited(T->basis_ptr(), rng);
  const SpectralFunction v = T->analyze_nodes(T->synthesize_nodes(u));
  double e = 0;
  for (std::size_t i = 0; i < u.c.size(); ++i)
    e = std::max(e, std::abs(u.c[i] - v.c[i]));
  EXPECT_LT(e, 1e-12);
  // pointwise synthesis agrees with the fast path
  const auto vals = T->synthesize_nodes(u);
  for (long i = 0; i < T->quadrature().size(); i += 97)
    EXPECT_NEAR(vals[i], synthesize(u, T->quadrature().nodes[i]), 1e-12);
}

TEST(Spectral, ExactA2OnEveryElement) {
  const BasisPtr B = build_basis(1, 4, 4);
  std::mt19937_64 rng(2);
  for (int i = 0; i < B->size(); ++i) {
    const auto &bl = B->elements[i].block;
    const double lam = (bl.j + 0.5) * (bl.l + 0.5);
    const Polynomial P = B->polynomial(i);
    for (int r = 0; r < 3; ++r) {
      const SpherePoint s = random_sphere_point(1, rng);
      EXPECT_NEAR(apply_A2_differential(P, s), lam * P(s).real(), 1e-10 * (1 + lam));
      EXPECT_NEAR(P(s).imag(), 0.0, 1e-12);
    }
  }
}

TEST(Spectral, FiniteDifferenceA2OnLowDegree) {
  const BasisPtr B = build_basis(1, 2, 2);
  std::mt19937_64 rng(3);
  for (int i = 0; i < B->size(); ++i) {
    const auto &bl = B->elements[i].block;
    const double lam = (bl.j + 0.5) * (bl.l + 0.5);
    SphereFunction f = [&](const SpherePoint &s) { return B->eval(i, s); };
    const SpherePoint s = random_sphere_point(1, rng);
    EXPECT_NEAR(apply_A2_differential(f, s), lam * f(s), 1e-6 * (1 + lam));
  }
}

TEST(Spectral, MultiplierInverseAndNorms) {
  const TransformPtr T = make_transform(1, 4);
  std::mt19937_64 rng(4);
  const SpectralFunction u = random_band_limited(T->basis_ptr(), rng);
  for (double k : {0.5, 1.0, 1.5}) {
    const SpectralFunction w = apply_A2k_inverse(apply_A2k(u, k), k);
    for (std::size_t i = 0; i < u.c.size(); ++i)
      EXPECT_NEAR(w.c[i], u.c[i], 1e-12);
    EXPECT_NEAR(norm_Hk(u, k) * norm_Hk(u, k), pairing(apply_A2k(u, k), u), 1e-10);
    EXPECT_NEAR(norm_H_minus_k(apply_A2k(u, k), k), norm_Hk(u, k), 1e-10);
  }
}

TEST(Spectral, MomentOfConstant) {
  Multi z{};
  EXPECT_NEAR(monomial_moment(z, z, 1, default_sphere_mass(1)), default_sphere_mass(1), 1e-9);
  // |zeta_1|^2 averages to 1/(N+1)
  Multi a{};
  a[0] = 1;
  EXPECT_NEAR(monomial_moment(a, a, 1, 1.0), 0.5, 1e-14);
}

TEST(Spectral, BasisCsvRoundTrip) {
  const BasisPtr B = build_basis(1, 3, 3);
  const auto path = std::filesystem::temp_directory_path() / "cryamabe_basis_test.csv";
  save_basis_csv(*B, path);
  const BasisPtr C = load_basis_csv(path, 1, 3, 3, B->total_mass);
  ASSERT_EQ(B->size(), C->size());
  std::mt19937_64 rng(5);
  const SpherePoint s = random_sphere_point(1, rng);
  for (int i = 0; i < B->size(); ++i)
    EXPECT_NEAR(B->eval(i, s), C->eval(i, s), 1e-14);
  std::filesystem::remove(path);
}
