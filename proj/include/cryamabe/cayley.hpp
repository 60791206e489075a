#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "heisenberg.hpp"

namespace cryamabe {

// Unit vector of C^{N+1}; the last coordinate is the "polar" one, C(0) = e_{N+1}.
struct SpherePoint {
  int N = 1;
  std::array<cplx, kMaxN + 1> zeta{};

  SpherePoint() { zeta[1] = 1.0; }
  explicit SpherePoint(int n) : N(n) {
    check_dimension(n);
    zeta[n] = 1.0;
  }

  static SpherePoint from(int n, const std::array<cplx, kMaxN + 1> &z, bool normalize = false) {
    SpherePoint s(n);
    s.zeta = z;
    for (int k = n + 1; k <= kMaxN; ++k)
      s.zeta[k] = 0.0;
    double r2 = 0.0;
    for (int k = 0; k <= n; ++k)
      r2 += std::norm(z[k]);
    if (normalize) {
      require(r2 > 0.0, "SpherePoint: zero vector");
      const double r = std::sqrt(r2);
      for (int k = 0; k <= n; ++k)
        s.zeta[k] /= r;
    } else {
      require(std::abs(r2 - 1.0) <= 2e-12, "SpherePoint: not a unit vector");
    }
    return s;
  }

  cplx operator[](int k) const { return zeta[k]; }
  int size() const { return N + 1; }
};

inline SpherePoint sphere_pole(int N) {
  SpherePoint s(N);
  s.zeta[N] = -1.0;
  return s;
}

inline SpherePoint sphere_north(int N) { return SpherePoint(N); }

// Hermitian product sum a_k conj(b_k).
inline cplx hdot(const SpherePoint &a, const SpherePoint &b) {
  cplx s = 0.0;
  for (int k = 0; k <= a.N; ++k)
    s += a.zeta[k] * std::conj(b.zeta[k]);
  return s;
}

// C(z,t) = (2z / (1+|z|^2-it), (1-|z|^2+it) / (1+|z|^2-it)).
inline SpherePoint cayley(const HeisPoint &p) {
  const double a = p.z_norm2();
  const cplx den(1.0 + a, -p.t);
  SpherePoint s(p.N);
  for (int j = 0; j < p.N; ++j)
    s.zeta[j] = 2.0 * p.z[j] / den;
  s.zeta[p.N] = cplx(1.0 - a, p.t) / den;
  return s;
}

inline constexpr double kPoleTolerance = 1e-6;

inline double distance_to_pole(const SpherePoint &s) {
  double r2 = std::norm(s.zeta[s.N] + 1.0);
  for (int j = 0; j < s.N; ++j)
    r2 += std::norm(s.zeta[j]);
  return std::sqrt(r2);
}

inline HeisPoint cayley_inv(const SpherePoint &s) {
  if (distance_to_pole(s) < kPoleTolerance)
    throw SingularChartError("cayley_inv: point at the excluded pole");
  const cplx d = 1.0 + s.zeta[s.N];
  HeisPoint p(s.N);
  for (int j = 0; j < s.N; ++j)
    p.z[j] = s.zeta[j] / d;
  p.t = -(2.0 / d).imag();
  return p;
}

// Lambda_C = 2^Q / ((1+|z|^2)^2 + t^2)^{N+1}.
inline double lambda_cayley(const HeisPoint &p) {
  const double a = 1.0 + p.z_norm2();
  const double F = a * a + p.t * p.t;
  return std::ldexp(1.0, homogeneous_dimension(p.N)) / std::pow(F, p.N + 1);
}

// d(a,b) = sqrt(2 |1 - <a,b>|). Uses 1 - <a,b> = |a-b|^2/2 - i Im<a-b,b> to avoid
// cancellation for nearby points.
inline double sphere_dist(const SpherePoint &a, const SpherePoint &b) {
  double d2 = 0.0;
  cplx cross = 0.0;
  for (int k = 0; k <= a.N; ++k) {
    const cplx diff = a.zeta[k] - b.zeta[k];
    d2 += std::norm(diff);
    cross += diff * std::conj(b.zeta[k]);
  }
  const cplx w(0.5 * d2, -cross.imag());
  return std::sqrt(2.0 * std::abs(w));
}

//------------------------------------------------------------------------------
// rho(w) = C(center * delta_R(w)); dilate first, then translate, then Cayley.

enum class ChartDirection { to_sphere, to_heisenberg };

struct ConformalChart {
  HeisPoint center;
  double R = 1.0;
  ChartDirection direction = ChartDirection::to_sphere;

  ConformalChart() = default;
  ConformalChart(const HeisPoint &w, double r, ChartDirection d = ChartDirection::to_sphere)
      : center(w), R(r), direction(d) {
    require(r > 0.0 && std::isfinite(r), "ConformalChart: R must be positive");
  }

  // Constructor for the order C o delta_R o tau_xi: equal to the canonical chart
  // with center delta_R(xi).
  static ConformalChart dilate_then_translate(const HeisPoint &xi, double r) {
    return ConformalChart(dilate(r, xi), r);
  }

  int N() const { return center.N; }

  HeisPoint to_group(const HeisPoint &p) const { return group_mul(center, dilate(R, p)); }

  SpherePoint map(const HeisPoint &p) const { return cayley(to_group(p)); }

  // Lambda_rho(p) = Lambda_C(center * delta_R p) * R^Q.
  double jacobian(const HeisPoint &p) const {
    return lambda_cayley(to_group(p)) * std::pow(R, homogeneous_dimension(center.N));
  }

  HeisPoint inverse(const SpherePoint &s) const {
    return dilate(1.0 / R, group_mul(group_inv(center), cayley_inv(s)));
  }

  // Lambda_sigma(s) = 1 / Lambda_rho(sigma(s)).
  double inverse_jacobian(const SpherePoint &s) const { return 1.0 / jacobian(inverse(s)); }
};

inline SpherePoint chart_map(const ConformalChart &c, const HeisPoint &p) { return c.map(p); }
inline double chart_jacobian(const ConformalChart &c, const HeisPoint &p) { return c.jacobian(p); }

using SphereFunction = std::function<double(const SpherePoint &)>;
using HeisFunction = std::function<double(const HeisPoint &)>;

inline double pullback_exponent(int N, double k) {
  const double Q = homogeneous_dimension(N);
  return (Q - 2.0 * k) / (2.0 * Q);
}

// U = Lambda_rho^{(Q-2k)/2Q} (u o rho).
inline HeisFunction conformal_pullback(SphereFunction u, const ConformalChart &chart, double k) {
  const double e = pullback_exponent(chart.N(), k);
  return [u = std::move(u), chart, e](const HeisPoint &p) {
    return std::pow(chart.jacobian(p), e) * u(chart.map(p));
  };
}

// u = Lambda_sigma^{(Q-2k)/2Q} (U o sigma), sigma = rho^{-1}.
inline SphereFunction conformal_pushforward(HeisFunction U, const ConformalChart &chart, double k) {
  const double e = pullback_exponent(chart.N(), k);
  return [U = std::move(U), chart, e](const SpherePoint &s) {
    const HeisPoint w = chart.inverse(s);
    return std::pow(chart.jacobian(w), -e) * U(w);
  };
}

//------------------------------------------------------------------------------
// Random sampling helpers.

inline SpherePoint random_sphere_point(int N, std::mt19937_64 &rng) {
  std::normal_distribution<double> G;
  std::array<cplx, kMaxN + 1> z{};
  for (int k = 0; k <= N; ++k)
    z[k] = cplx(G(rng), G(rng));
  return SpherePoint::from(N, z, true);
}

struct InclusionReport {
  long samples = 0;
  long violations = 0;
  double worst_ratio = 0.0; // max d(C(w'), zeta) / R over samples
};

// Membership test of C^{-1}(B_R(zeta)) contains B_{R/2}(C^{-1}(zeta)): random
// centers zeta (away from the pole), random radii, random points of the
// Heisenberg ball mapped through C.
inline InclusionReport ball_inclusion_check(int N, long samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  InclusionReport rep;
  while (rep.samples < samples) {
    const SpherePoint zeta = random_sphere_point(N, rng);
    if (distance_to_pole(zeta) < 0.05)
      continue;
    const HeisPoint w = cayley_inv(zeta);
    const double R = 2.0 * U(rng) + 1e-3;
    HeisPoint v = random_point(N, rng, 1.0);
    const double g = koranyi_gauge(v);
    if (g > 1.0 || g == 0.0)
      continue;
    const HeisPoint wp = group_mul(w, dilate(0.5 * R, v));
    const double ratio = sphere_dist(cayley(wp), zeta) / R;
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > 1.0)
      ++rep.violations;
    ++rep.samples;
  }
  return rep;
}

} // namespace cryamabe
