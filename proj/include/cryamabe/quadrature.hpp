#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "core.hpp"

namespace cryamabe {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule with n points on [a,b]; exact for polynomials of degree
// 2n-1. Nodes by Newton iteration on the Legendre recurrence.
inline GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  require(n >= 1, "gauss_legendre: n must be >= 1");
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

// Point of the standard N-simplex in barycentric coordinates (N+1 entries
// summing to one).
using SimplexPoint = std::array<double, kMaxN + 1>;

struct SimplexRule {
  int dim = 0; // simplex dimension N; points carry N+1 barycentric coordinates
  std::vector<SimplexPoint> points;
  std::vector<double> weights; // sum to 1/N!
};

// Collapsed-coordinate (Duffy) product rule on the N-simplex:
//   rho_1 = u_1, rho_2 = (1-u_1) u_2, ..., rho_{N+1} = prod (1-u_i),
// Jacobian prod (1-u_i)^{N-i}. `n` Gauss points per collapsed axis; exact for
// polynomials of degree <= 2n - N in rho.
inline SimplexRule simplex_rule(int N, int n) {
  require(N >= 0 && N <= kMaxN, "simplex_rule: bad dimension");
  SimplexRule rule;
  rule.dim = N;
  if (N == 0) {
    SimplexPoint p{};
    p[0] = 1.0;
    rule.points.push_back(p);
    rule.weights.push_back(1.0);
    return rule;
  }
  const GaussRule g = gauss_legendre(n, 0.0, 1.0);
  std::vector<int> idx(N, 0);
  while (true) {
    SimplexPoint p{};
    double rest = 1.0, w = 1.0;
    for (int i = 0; i < N; ++i) {
      const double u = g.nodes[idx[i]];
      p[i] = rest * u;
      w *= g.weights[idx[i]] * std::pow(1.0 - u, N - 1 - i);
      rest *= (1.0 - u);
    }
    p[N] = rest;
    rule.points.push_back(p);
    rule.weights.push_back(w);
    int d = N - 1;
    while (d >= 0 && ++idx[d] == n)
      idx[d--] = 0;
    if (d < 0)
      break;
  }
  return rule;
}

// Euclidean surface area of the unit sphere S^{2n-1} in C^n.
inline double complex_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, n) / std::tgamma(static_cast<double>(n));
}

// Product rule on the unit sphere of C^n, normalized to total weight one.
// Uniform measure = (squared moduli uniform on the simplex) x (independent
// uniform phases). Nodes are ordered radial-major, then phase multi-index with
// the last coordinate fastest.
struct ComplexSphereRule {
  int n = 0;       // complex dimension
  int phases = 0;  // equispaced phase count M per coordinate
  SimplexRule radial;
  std::vector<std::array<cplx, kMaxN + 1>> nodes;
  std::vector<double> weights;

  long phase_count() const {
    long c = 1;
    for (int k = 0; k < n; ++k)
      c *= phases;
    return c;
  }
};

// Exact for polynomials in (zeta, conj zeta) of total degree <= degree.
inline ComplexSphereRule complex_sphere_rule(int n, int degree) {
  require(n >= 1 && n <= kMaxN + 1, "complex_sphere_rule: bad dimension");
  require(degree >= 0, "complex_sphere_rule: negative degree");
  ComplexSphereRule r;
  r.n = n;
  r.phases = degree + 1;
  const int radial_points = (degree / 2 + n) / 2 + 1;
  r.radial = simplex_rule(n - 1, radial_points);
  double fact = 1.0;
  for (int i = 2; i < n; ++i)
    fact *= i;
  const long pc = r.phase_count();
  const double two_pi = 2.0 * std::numbers::pi;
  r.nodes.reserve(r.radial.points.size() * pc);
  r.weights.reserve(r.radial.points.size() * pc);
  for (std::size_t a = 0; a < r.radial.points.size(); ++a) {
    const SimplexPoint &rho = r.radial.points[a];
    const double w = r.radial.weights[a] * fact / static_cast<double>(pc);
    for (long q = 0; q < pc; ++q) {
      std::array<cplx, kMaxN + 1> z{};
      long rem = q;
      for (int k = n - 1; k >= 0; --k) {
        const int m = static_cast<int>(rem % r.phases);
        rem /= r.phases;
        z[k] = std::polar(std::sqrt(std::max(rho[k], 0.0)), two_pi * m / r.phases);
      }
      r.nodes.push_back(z);
      r.weights.push_back(w);
    }
  }
  return r;
}

} // namespace cryamabe
