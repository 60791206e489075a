#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"

namespace cryamabe {

//------------------------------------------------------------------------------
// HeisPoint: (z, t) in H^N = C^N x R. Unused slots of z are kept at zero.
struct HeisPoint {
  int N = 1;
  std::array<cplx, kMaxN> z{};
  double t = 0.0;

  HeisPoint() = default;
  explicit HeisPoint(int n) : N(n) { check_dimension(n); }
  HeisPoint(int n, std::initializer_list<cplx> zs, double tt) : N(n), t(tt) {
    check_dimension(n);
    require(static_cast<int>(zs.size()) == n, "HeisPoint: z must have N entries");
    int i = 0;
    for (const cplx &c : zs)
      z[i++] = c;
    validate();
  }

  void validate() const {
    require(std::isfinite(t), "HeisPoint: non-finite t");
    for (int j = 0; j < N; ++j)
      require(std::isfinite(z[j].real()) && std::isfinite(z[j].imag()),
              "HeisPoint: non-finite z");
  }

  double z_norm2() const {
    double s = 0.0;
    for (int j = 0; j < N; ++j)
      s += std::norm(z[j]);
    return s;
  }

  static HeisPoint origin(int n) { return HeisPoint(n); }
};

inline HeisPoint group_mul(const HeisPoint &p, const HeisPoint &q) {
  require(p.N == q.N, "group_mul: dimension mismatch");
  HeisPoint r(p.N);
  double tw = 0.0;
  for (int j = 0; j < p.N; ++j) {
    r.z[j] = p.z[j] + q.z[j];
    tw += (p.z[j] * std::conj(q.z[j])).imag();
  }
  r.t = p.t + q.t + 2.0 * tw;
  return r;
}

inline HeisPoint group_inv(const HeisPoint &p) {
  HeisPoint r(p.N);
  for (int j = 0; j < p.N; ++j)
    r.z[j] = -p.z[j];
  r.t = -p.t;
  return r;
}

inline HeisPoint dilate(double lambda, const HeisPoint &p) {
  require(lambda > 0.0 && std::isfinite(lambda), "dilate: lambda must be positive");
  HeisPoint r(p.N);
  for (int j = 0; j < p.N; ++j)
    r.z[j] = lambda * p.z[j];
  r.t = lambda * lambda * p.t;
  return r;
}

inline double koranyi_gauge(const HeisPoint &p) {
  const double a = p.z_norm2();
  return std::pow(a * a + p.t * p.t, 0.25);
}

// d(p, q) = gauge(q^{-1} p). Left-invariant for the group law above.
inline double koranyi_dist(const HeisPoint &p, const HeisPoint &q) {
  return koranyi_gauge(group_mul(group_inv(q), p));
}

// Lebesgue volume of the unit Koranyi ball in R^{2N+1}.
inline double koranyi_ball_volume(int N) {
  check_dimension(N);
  const double pi = std::numbers::pi;
  // |B| = (pi^N / Gamma(N)) * B(N/2, 3/2)
  const double beta = std::exp(std::lgamma(0.5 * N) + std::lgamma(1.5) - std::lgamma(0.5 * N + 1.5));
  return std::pow(pi, N) / std::tgamma(static_cast<double>(N)) * beta;
}

//------------------------------------------------------------------------------
// Scalar fields and left-invariant vector fields.

struct ScalarFieldH {
  std::function<double(const HeisPoint &)> evaluator;
  double derivative_step = 1e-4;
  int order = 2; // 2 or 4 (stencil order of the difference quotients)

  double operator()(const HeisPoint &p) const { return evaluator(p); }
};

enum class Field { X, Y, T };

namespace detail {

// Exponential of the left-invariant field: p * exp(s W).
inline HeisPoint flow(const HeisPoint &p, Field w, int j, double s) {
  HeisPoint e(p.N);
  switch (w) {
  case Field::X:
    e.z[j] = cplx(s, 0.0);
    break;
  case Field::Y:
    e.z[j] = cplx(0.0, s);
    break;
  case Field::T:
    e.t = s;
    break;
  }
  return group_mul(p, e);
}

template <class F> double d1(const F &f, const HeisPoint &p, Field w, int j, double h, int order) {
  if (order == 4)
    return (-f(flow(p, w, j, 2 * h)) + 8.0 * f(flow(p, w, j, h)) - 8.0 * f(flow(p, w, j, -h)) +
            f(flow(p, w, j, -2 * h))) /
           (12.0 * h);
  return (f(flow(p, w, j, h)) - f(flow(p, w, j, -h))) / (2.0 * h);
}

template <class F>
double d2(const F &f, const HeisPoint &p, Field w, int j, double h, int order, double f0) {
  if (order == 4)
    return (-f(flow(p, w, j, 2 * h)) + 16.0 * f(flow(p, w, j, h)) - 30.0 * f0 +
            16.0 * f(flow(p, w, j, -h)) - f(flow(p, w, j, -2 * h))) /
           (12.0 * h * h);
  return (f(flow(p, w, j, h)) - 2.0 * f0 + f(flow(p, w, j, -h))) / (h * h);
}

} // namespace detail

// W_j f(p) for W in {X, Y, T} by central differences along the one-parameter
// subgroup (exact flow of the left-invariant field). j is ignored for T.
template <class F>
double vector_field(Field w, int j, const F &f, const HeisPoint &p, double h = 1e-4, int order = 2) {
  require(h > 0.0, "vector_field: step must be positive");
  require(j >= 0 && j < p.N, "vector_field: index out of range");
  return detail::d1(f, p, w, j, h, order);
}

inline double vector_field(Field w, int j, const ScalarFieldH &f, const HeisPoint &p) {
  return vector_field(w, j, f.evaluator, p, f.derivative_step, f.order);
}

// Delta_b f = 1/4 sum_j (X_j^2 + Y_j^2) f.
template <class F>
double sub_laplacian(const F &f, const HeisPoint &p, double h = 1e-4, int order = 2) {
  require(h > 0.0, "sub_laplacian: step must be positive");
  const double f0 = f(p);
  double s = 0.0;
  for (int j = 0; j < p.N; ++j)
    s += detail::d2(f, p, Field::X, j, h, order, f0) + detail::d2(f, p, Field::Y, j, h, order, f0);
  return 0.25 * s;
}

inline double sub_laplacian(const ScalarFieldH &f, const HeisPoint &p) {
  return sub_laplacian(f.evaluator, p, f.derivative_step, f.order);
}

// Horizontal gradient (X_1 f, Y_1 f, ..., X_N f, Y_N f).
template <class F>
std::array<double, 2 * kMaxN> horizontal_gradient(const F &f, const HeisPoint &p, double h = 1e-4,
                                                  int order = 2) {
  std::array<double, 2 * kMaxN> g{};
  for (int j = 0; j < p.N; ++j) {
    g[2 * j] = detail::d1(f, p, Field::X, j, h, order);
    g[2 * j + 1] = detail::d1(f, p, Field::Y, j, h, order);
  }
  return g;
}

//------------------------------------------------------------------------------
// Integration against dv_H = kappa * Lebesgue(R^{2N+1}).

struct HaarMeasure {
  double kappa = 1.0;

  explicit HaarMeasure(double k = 1.0) : kappa(k) {
    require(k > 0.0 && std::isfinite(k), "HaarMeasure: kappa must be positive");
  }

  // Value making the Cayley change of variables hold against the sphere mass
  // 2^{2N+2} pi^{N+1}: kappa = 2^{2N} N!.
  static HaarMeasure calibrated(int N) {
    check_dimension(N);
    return HaarMeasure(std::ldexp(std::tgamma(N + 1.0), 2 * N));
  }
};

// Axis-aligned box in coordinates (x_1, y_1, ..., x_N, y_N, t).
struct HeisBox {
  int N = 1;
  std::array<double, 2 * kMaxN + 1> lo{};
  std::array<double, 2 * kMaxN + 1> hi{};

  int dim() const { return 2 * N + 1; }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i)
      v *= std::max(0.0, hi[i] - lo[i]);
    return v;
  }
  static HeisBox cube(int N, double a, double b) {
    HeisBox bx;
    bx.N = N;
    for (int i = 0; i < 2 * N + 1; ++i) {
      bx.lo[i] = a;
      bx.hi[i] = b;
    }
    return bx;
  }
};

inline HeisPoint from_coords(int N, const double *c) {
  HeisPoint p(N);
  for (int j = 0; j < N; ++j)
    p.z[j] = cplx(c[2 * j], c[2 * j + 1]);
  p.t = c[2 * N];
  return p;
}

// Tensor-product midpoint rule with `resolution` cells per axis.
template <class F>
double haar_integral(const F &f, const HeisBox &box, int resolution, const HaarMeasure &mu = HaarMeasure()) {
  require(resolution > 0, "haar_integral: resolution must be positive");
  check_dimension(box.N);
  if (box.volume() <= 0.0)
    return 0.0;
  const int d = box.dim();
  long total = 1;
  for (int i = 0; i < d; ++i)
    total *= resolution;
  // one partial sum per slice along the first axis keeps the result thread-count independent
  std::vector<double> partial(resolution, 0.0);
  const long per = total / resolution;
  parallel_for(resolution, [&](long s) {
    double acc = 0.0;
    std::array<double, 2 * kMaxN + 1> c{};
    for (long q = 0; q < per; ++q) {
      long rem = s * per + q;
      for (int i = d - 1; i >= 0; --i) {
        const long m = rem % resolution;
        rem /= resolution;
        c[i] = box.lo[i] + (m + 0.5) * (box.hi[i] - box.lo[i]) / resolution;
      }
      acc += f(from_coords(box.N, c.data()));
    }
    partial[s] = acc;
  });
  double sum = 0.0;
  for (double v : partial)
    sum += v;
  return mu.kappa * sum * box.volume() / static_cast<double>(total);
}

struct KoranyiBall {
  HeisPoint center;
  double radius = 1.0;
};

// Monte-Carlo over the Koranyi ball: uniform samples in the bounding box of the
// unit ball, rejected outside, then mapped by center * delta_radius (both maps
// preserve the indicator; Lebesgue scales by radius^Q).
template <class F>
double haar_integral(const F &f, const KoranyiBall &ball, long samples, std::uint64_t seed,
                     const HaarMeasure &mu = HaarMeasure()) {
  require(samples > 0, "haar_integral: sample count must be positive");
  require(ball.radius >= 0.0, "haar_integral: negative radius");
  if (ball.radius == 0.0)
    return 0.0;
  const int N = ball.center.N;
  const int d = 2 * N + 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double acc = 0.0;
  std::array<double, 2 * kMaxN + 1> c{};
  for (long s = 0; s < samples; ++s) {
    for (int i = 0; i < d; ++i)
      c[i] = U(rng);
    const HeisPoint w = from_coords(N, c.data());
    if (koranyi_gauge(w) > 1.0)
      continue;
    acc += f(group_mul(ball.center, dilate(ball.radius, w)));
  }
  const double box_vol = std::ldexp(1.0, d);
  const int Q = homogeneous_dimension(N);
  return mu.kappa * acc / samples * box_vol * std::pow(ball.radius, Q);
}

// Whole-space rule in Koranyi polar coordinates around `center`:
//   |z|^2 = r^2 cos(a), t = r^2 sin(a), z/|z| on S^{2N-1},
//   dLeb = r^{Q-1} cos(a)^{N-1} dr da dsigma.
// ln r on [s_min, s_max] is split into Gauss panels; a = (pi/2) sin(b).
struct PolarOptions {
  double s_min = -10.0;
  double s_max = 10.0;
  int panels = 40;
  int radial_points = 8;
  int angle_points = 24;
  int sphere_degree = 8;
};

struct HeisQuadrature {
  std::vector<HeisPoint> nodes;
  std::vector<double> weights; // Lebesgue weights
};

inline HeisQuadrature polar_quadrature(const HeisPoint &center, const PolarOptions &o = PolarOptions()) {
  const int N = center.N;
  check_dimension(N);
  require(o.panels > 0 && o.radial_points > 0 && o.angle_points > 0, "polar_quadrature: bad options");
  require(o.s_max > o.s_min, "polar_quadrature: empty radial range");
  const int Q = homogeneous_dimension(N);
  const double pi = std::numbers::pi;
  const GaussRule g = gauss_legendre(o.radial_points);
  const GaussRule ga = gauss_legendre(o.angle_points, -pi / 2, pi / 2);
  const ComplexSphereRule sph = complex_sphere_rule(N, o.sphere_degree);
  const double area = complex_sphere_area(N);
  HeisQuadrature q;
  const double hs = (o.s_max - o.s_min) / o.panels;
  for (int pnl = 0; pnl < o.panels; ++pnl) {
    for (int i = 0; i < o.radial_points; ++i) {
      const double s = o.s_min + hs * (pnl + 0.5 * (g.nodes[i] + 1.0));
      const double r = std::exp(s);
      const double wr = 0.5 * hs * g.weights[i] * std::pow(r, Q); // dr = r ds
      for (int a = 0; a < o.angle_points; ++a) {
        const double b = ga.nodes[a];
        const double alpha = 0.5 * pi * std::sin(b);
        const double ca = std::cos(alpha);
        const double wa = ga.weights[a] * 0.5 * pi * std::cos(b) * std::pow(ca, N - 1);
        const double rho = r * std::sqrt(ca);
        for (std::size_t m = 0; m < sph.nodes.size(); ++m) {
          HeisPoint w(N);
          for (int j = 0; j < N; ++j)
            w.z[j] = rho * sph.nodes[m][j];
          w.t = r * r * std::sin(alpha);
          q.nodes.push_back(group_mul(center, w));
          q.weights.push_back(wr * wa * sph.weights[m] * area);
        }
      }
    }
  }
  return q;
}

template <class F>
double haar_integral(const F &f, const HeisQuadrature &q, const HaarMeasure &mu = HaarMeasure()) {
  const long n = static_cast<long>(q.nodes.size());
  std::vector<double> vals(n);
  parallel_for(n, [&](long i) { vals[i] = f(q.nodes[i]) * q.weights[i]; });
  double s = 0.0;
  for (double v : vals)
    s += v;
  return mu.kappa * s;
}

// Uniform random point in the box [-a, a]^{2N} x [-a^2, a^2] (test and report helper).
inline HeisPoint random_point(int N, std::mt19937_64 &rng, double a = 1.0) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  HeisPoint p(N);
  for (int j = 0; j < N; ++j)
    p.z[j] = cplx(a * U(rng), a * U(rng));
  p.t = a * a * U(rng);
  return p;
}

} // namespace cryamabe
