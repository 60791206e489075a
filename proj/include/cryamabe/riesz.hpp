#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "heisenberg.hpp"

namespace cryamabe {

enum class KernelKind { riesz, green, hyper };

// riesz / green: constant * |x|^{alpha - Q} (green has alpha = 2k);
// hyper: constant * |x|^{-(Q + alpha)} with alpha = 2k.
struct KernelSpec {
  double alpha = 1.0;
  double constant = 1.0;
  KernelKind kind = KernelKind::riesz;
  int N = 1;

  void validate() const {
    check_dimension(N);
    const int Q = homogeneous_dimension(N);
    require(constant > 0.0, "KernelSpec: constant must be positive");
    require(alpha > 0.0 && alpha < Q, "KernelSpec: order must lie in (0, Q)");
  }

  double exponent() const {
    const int Q = homogeneous_dimension(N);
    return kind == KernelKind::hyper ? -(Q + alpha) : alpha - Q;
  }
};

inline double kernel_eval(const KernelSpec &k, const HeisPoint &p) {
  const double g = koranyi_gauge(p);
  if (g == 0.0)
    throw SingularPointError("kernel_eval: kernel is singular at the origin");
  return k.constant * std::pow(g, k.exponent());
}

// Fits log |K| = a + s log r over a radial sweep along a fixed direction; returns s.
inline double kernel_decay_slope(const KernelSpec &k, const HeisPoint &dir, double r0 = 1.0, double r1 = 1e3,
                                 int samples = 32) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < samples; ++i) {
    const double r = r0 * std::pow(r1 / r0, i / (samples - 1.0));
    const double x = std::log(r), y = std::log(kernel_eval(k, dilate(r, dir)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (samples * sxy - sx * sy) / (samples * sxx - sx * sx);
}

//------------------------------------------------------------------------------
// Grid fields on H^1 (cell centers of a box in (x, y, t)).

struct GridFieldH {
  std::array<double, 3> lo{}, hi{};
  std::array<int, 3> n{8, 8, 8};
  std::vector<double> v;

  static GridFieldH make(const std::array<double, 3> &lo, const std::array<double, 3> &hi,
                         const std::array<int, 3> &n) {
    GridFieldH g;
    g.lo = lo;
    g.hi = hi;
    g.n = n;
    for (int a = 0; a < 3; ++a) {
      require(n[a] >= 8, "GridFieldH: resolution must be >= 8 per axis");
      require(hi[a] > lo[a], "GridFieldH: empty box");
    }
    g.v.assign(static_cast<std::size_t>(n[0]) * n[1] * n[2], 0.0);
    return g;
  }

  // Korany-shaped box [-a,a]^2 x [-a^2, a^2].
  static GridFieldH koranyi_box(double a, const std::array<int, 3> &n) {
    return make({-a, -a, -a * a}, {a, a, a * a}, n);
  }

  double h(int a) const { return (hi[a] - lo[a]) / n[a]; }
  double coord(int a, int i) const { return lo[a] + (i + 0.5) * h(a); }
  double cell_volume() const { return h(0) * h(1) * h(2); }
  long index(int i, int j, int k) const { return (static_cast<long>(i) * n[1] + j) * n[2] + k; }
  double &at(int i, int j, int k) { return v[index(i, j, k)]; }
  double at(int i, int j, int k) const { return v[index(i, j, k)]; }
  HeisPoint point(int i, int j, int k) const {
    HeisPoint p(1);
    p.z[0] = cplx(coord(0, i), coord(1, j));
    p.t = coord(2, k);
    return p;
  }

  template <class F> void fill(const F &f) {
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j)
        for (int k = 0; k < n[2]; ++k) {
          const double x = f(point(i, j, k));
          require(std::isfinite(x), "GridFieldH: non-finite value");
          at(i, j, k) = x;
        }
  }

  double norm_Lp(double p) const {
    double s = 0.0;
    for (double x : v)
      s += std::pow(std::abs(x), p);
    return std::pow(s * cell_volume(), 1.0 / p);
  }
};

namespace detail {

// s^{e} for s = |z|^4 + t^2 > 0; fast when 4e is an integer.
struct GaugePower {
  double e;
  int q4;
  bool integral;
  explicit GaugePower(double exponent_over_4) : e(exponent_over_4) {
    const double r = std::round(4.0 * e);
    integral = std::abs(r - 4.0 * e) < 1e-12;
    q4 = static_cast<int>(r);
  }
  double operator()(double s) const {
    if (!integral)
      return std::pow(s, e);
    const double r4 = std::sqrt(std::sqrt(s));
    double out = 1.0;
    const int m = std::abs(q4);
    for (int i = 0; i < m; ++i)
      out *= r4;
    return q4 < 0 ? 1.0 / out : out;
  }
};

// Kernel sum at an arbitrary point x over the cells of f. Cells closer than the
// equal-volume Koranyi radius use the ball mean Q rho_c^{a-Q} / a.
inline double convolve_at(const GridFieldH &f, const KernelSpec &k, double x, double y, double t,
                          const std::vector<long> &support) {
  const int Q = 4;
  const double ex = k.exponent();
  const double rho_c = std::pow(f.cell_volume() / koranyi_ball_volume(1), 1.0 / Q);
  const double cap = k.kind == KernelKind::hyper ? std::pow(rho_c, ex) : Q * std::pow(rho_c, ex) / (ex + Q);
  const double s_c = std::pow(rho_c, 4.0);
  const GaugePower pw(ex / 4.0);
  const double hx = f.h(0), hy = f.h(1), ht = f.h(2);
  double acc = 0.0;
  for (long idx : support) {
    const int kk = static_cast<int>(idx % f.n[2]);
    const int jj = static_cast<int>((idx / f.n[2]) % f.n[1]);
    const int ii = static_cast<int>(idx / (static_cast<long>(f.n[2]) * f.n[1]));
    const double yx = f.lo[0] + (ii + 0.5) * hx;
    const double yy = f.lo[1] + (jj + 0.5) * hy;
    const double yt = f.lo[2] + (kk + 0.5) * ht;
    // y^{-1} x = (x - y, t - yt + 2 Im(-y conj(x)))
    const double dx = x - yx, dy = y - yy;
    const double dt = t - yt + 2.0 * (yx * y - yy * x);
    const double a = dx * dx + dy * dy;
    const double s = a * a + dt * dt;
    acc += f.v[idx] * (s < s_c ? cap : pw(s));
  }
  return k.constant * acc * f.cell_volume();
}

inline std::vector<long> support_of(const GridFieldH &f) {
  std::vector<long> s;
  for (long i = 0; i < static_cast<long>(f.v.size()); ++i)
    if (f.v[i] != 0.0)
      s.push_back(i);
  return s;
}

} // namespace detail

// Direct group convolution (f * K)(x) = sum_y f(y) K(y^{-1} x) dV on the same grid.
inline GridFieldH convolve(const GridFieldH &f, const KernelSpec &k) {
  k.validate();
  require(k.N == 1, "convolve: grid fields live on H^1");
  GridFieldH out = f;
  const std::vector<long> sup = detail::support_of(f);
  const long total = static_cast<long>(f.v.size());
  parallel_for(total, [&](long idx) {
    const int kk = static_cast<int>(idx % f.n[2]);
    const int jj = static_cast<int>((idx / f.n[2]) % f.n[1]);
    const int ii = static_cast<int>(idx / (static_cast<long>(f.n[2]) * f.n[1]));
    out.v[idx] = detail::convolve_at(f, k, f.coord(0, ii), f.coord(1, jj), f.coord(2, kk), sup);
  });
  return out;
}

// Values on an (r, t) table for inputs invariant under z-rotations (the group
// law commutes with them, so the output is invariant too). r_i are the positive
// x cell centers, t_k the t cell centers.
struct RadialTable {
  std::vector<double> r, t;
  std::vector<double> v; // v[i * t.size() + k]
  double at(std::size_t i, std::size_t k) const { return v[i * t.size() + k]; }

  double interpolate(double rr, std::size_t k) const {
    if (rr <= r.front())
      return at(0, k);
    if (rr >= r.back())
      return at(r.size() - 1, k);
    const auto it = std::upper_bound(r.begin(), r.end(), rr);
    const std::size_t i = static_cast<std::size_t>(it - r.begin());
    // cubic Lagrange on four neighbors (uniform spacing), even extension at r = 0
    const double h = r[1] - r[0];
    const double s = (rr - r[i - 1]) / h;
    auto val = [&](long q) {
      if (q < 0)
        q = -q - 1;
      if (q >= static_cast<long>(r.size()))
        q = static_cast<long>(r.size()) - 1;
      return at(static_cast<std::size_t>(q), k);
    };
    const long b = static_cast<long>(i) - 1;
    const double p0 = val(b - 1), p1 = val(b), p2 = val(b + 1), p3 = val(b + 2);
    return p1 + 0.5 * s * (p2 - p0 + s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + s * (3.0 * (p1 - p2) + p3 - p0)));
  }
};

inline RadialTable convolve_radial_table(const GridFieldH &f, const KernelSpec &k) {
  k.validate();
  require(k.N == 1, "convolve_radial: grid fields live on H^1");
  RadialTable tab;
  for (int i = 0; i < f.n[0]; ++i)
    if (f.coord(0, i) > 0.0)
      tab.r.push_back(f.coord(0, i));
  for (int q = 0; q < f.n[2]; ++q)
    tab.t.push_back(f.coord(2, q));
  tab.v.assign(tab.r.size() * tab.t.size(), 0.0);
  const std::vector<long> sup = detail::support_of(f);
  const long nt = static_cast<long>(tab.t.size());
  parallel_for(static_cast<long>(tab.v.size()), [&](long idx) {
    tab.v[idx] = detail::convolve_at(f, k, tab.r[idx / nt], 0.0, tab.t[idx % nt], sup);
  });
  return tab;
}

inline GridFieldH table_to_grid(const RadialTable &tab, const GridFieldH &like) {
  GridFieldH out = like;
  for (int i = 0; i < like.n[0]; ++i)
    for (int j = 0; j < like.n[1]; ++j) {
      const double r = std::hypot(like.coord(0, i), like.coord(1, j));
      for (int q = 0; q < like.n[2]; ++q)
        out.at(i, j, q) = tab.interpolate(r, q);
    }
  return out;
}

inline GridFieldH convolve_radial(const GridFieldH &f, const KernelSpec &k) {
  return table_to_grid(convolve_radial_table(f, k), f);
}

// -Delta_b on the (r, t) table: Delta_b u = (u_rr + u_r / r + 4 r^2 u_tt) / 4.
// Boundary rows are left at zero.
inline RadialTable minus_sublaplacian_table(const RadialTable &u) {
  RadialTable out = u;
  std::fill(out.v.begin(), out.v.end(), 0.0);
  const std::size_t nr = u.r.size(), nt = u.t.size();
  const double hr = u.r[1] - u.r[0], ht = u.t[1] - u.t[0];
  auto val = [&](long i, std::size_t k) { return u.at(static_cast<std::size_t>(i < 0 ? -i - 1 : i), k); };
  for (std::size_t i = 0; i + 1 < nr; ++i)
    for (std::size_t k = 1; k + 1 < nt; ++k) {
      const long ii = static_cast<long>(i);
      const double urr = (val(ii + 1, k) - 2.0 * val(ii, k) + val(ii - 1, k)) / (hr * hr);
      const double ur = (val(ii + 1, k) - val(ii - 1, k)) / (2.0 * hr);
      const double utt = (u.at(i, k + 1) - 2.0 * u.at(i, k) + u.at(i, k - 1)) / (ht * ht);
      const double r = u.r[i];
      out.v[i * nt + k] = -0.25 * (urr + ur / r + 4.0 * r * r * utt);
    }
  return out;
}

// -Delta_b on a full grid field by central differences:
// Delta_b = (d_xx + d_yy + 4y d_xt - 4x d_yt + 4(x^2+y^2) d_tt) / 4. Boundary cells are zero.
inline GridFieldH minus_sublaplacian_grid(const GridFieldH &u) {
  GridFieldH out = u;
  std::fill(out.v.begin(), out.v.end(), 0.0);
  const double hx = u.h(0), hy = u.h(1), ht = u.h(2);
  for (int i = 1; i + 1 < u.n[0]; ++i)
    for (int j = 1; j + 1 < u.n[1]; ++j)
      for (int k = 1; k + 1 < u.n[2]; ++k) {
        const double x = u.coord(0, i), y = u.coord(1, j);
        const double c = u.at(i, j, k);
        const double uxx = (u.at(i + 1, j, k) - 2 * c + u.at(i - 1, j, k)) / (hx * hx);
        const double uyy = (u.at(i, j + 1, k) - 2 * c + u.at(i, j - 1, k)) / (hy * hy);
        const double utt = (u.at(i, j, k + 1) - 2 * c + u.at(i, j, k - 1)) / (ht * ht);
        const double uxt = (u.at(i + 1, j, k + 1) - u.at(i + 1, j, k - 1) - u.at(i - 1, j, k + 1) +
                            u.at(i - 1, j, k - 1)) /
                           (4 * hx * ht);
        const double uyt = (u.at(i, j + 1, k + 1) - u.at(i, j + 1, k - 1) - u.at(i, j - 1, k + 1) +
                            u.at(i, j - 1, k - 1)) /
                           (4 * hy * ht);
        out.at(i, j, k) = -0.25 * (uxx + uyy + 4 * y * uxt - 4 * x * uyt + 4 * (x * x + y * y) * utt);
      }
  return out;
}

//------------------------------------------------------------------------------
// Reports.

struct GreenReport {
  double fitted_constant = 0.0; // c with c ((-Delta_b f) * |.|^{2-Q}) ~ f
  double residual = 0.0;        // relative L2 residual after the fit
};

namespace detail {

// Fits c in c u ~ f by least squares with weights w.
inline GreenReport fit_scalar(const std::vector<double> &u, const std::vector<double> &f, const std::vector<double> &w) {
  GreenReport rep;
  double uf = 0, uu = 0, ff = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uf += w[i] * u[i] * f[i];
    uu += w[i] * u[i] * u[i];
    ff += w[i] * f[i] * f[i];
  }
  if (ff == 0.0 || uu == 0.0)
    return rep;
  rep.fitted_constant = uf / uu;
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = rep.fitted_constant * u[i] - f[i];
    e += w[i] * d * d;
  }
  rep.residual = std::sqrt(e / ff);
  return rep;
}

} // namespace detail

// The Laplacian falls on f by integration by parts, so only the smooth input
// is differenced. f must be z-rotation invariant; it is sampled from the callable
// at the table points.
template <class F> GreenReport green_inversion_check(const F &f, const GridFieldH &geometry) {
  GridFieldH fg = geometry;
  fg.fill(f);
  const GridFieldH lf = minus_sublaplacian_grid(fg);
  const RadialTable u = convolve_radial_table(lf, KernelSpec{2.0, 1.0, KernelKind::green, 1});
  std::vector<double> uu, ff, w;
  for (std::size_t i = 0; i < u.r.size(); ++i)
    for (std::size_t k = 0; k < u.t.size(); ++k) {
      HeisPoint p(1);
      p.z[0] = u.r[i];
      p.t = u.t[k];
      uu.push_back(u.at(i, k));
      ff.push_back(f(p));
      w.push_back(u.r[i]);
    }
  return detail::fit_scalar(uu, ff, w);
}

// Same fit on a full grid with no symmetry assumption (direct convolution).
inline GreenReport green_inversion_check_grid(const GridFieldH &f) {
  const GridFieldH u = convolve(minus_sublaplacian_grid(f), KernelSpec{2.0, 1.0, KernelKind::green, 1});
  std::vector<double> w(f.v.size(), 1.0);
  return detail::fit_scalar(u.v, f.v, w);
}

//------------------------------------------------------------------------------
// Semigroup R_a R_b = c R_{a+b} on a z-rotation-invariant bump, tested with
// whole-space polar rules (no box truncation): R_b f on an (r, t) table with
// sinh-spaced nodes, its asymptotic M |p|^{b-Q} beyond the table, then R_a of
// the interpolant at the evaluation points.

struct SemigroupOptions {
  int table_r = 32;
  int table_t = 64;
  double table_gauge = 40.0; // table covers r <= g, |t| <= g^2
  double table_scale = 0.25;
  double support_gauge = 3.5; // f is negligible beyond this gauge
  PolarOptions inner{-12.0, 0.0, 16, 6, 16, 8};
  PolarOptions outer{-12.0, 0.0, 48, 6, 16, 8};
  int eval_r = 8, eval_t = 9; // evaluation points in r <= 1, |t| <= 1
};

struct SemigroupReport {
  double fitted_constant = 0.0; // c with R_a(R_b f) ~ c R_{a+b} f
  double relative_error = 0.0;  // relative L2 error after the fit
  double mass = 0.0;            // int f
};

namespace detail {

// (R_b f)(p) = int f(p w) |w|^{b-Q} dw, switching to a rule centered on the
// support of f when p is far from it.
template <class F> double riesz_polar(const F &f, double b, const HeisPoint &p, const SemigroupOptions &o) {
  const int Q = 4;
  const double gp = koranyi_gauge(p);
  const GaugePower pw((b - Q) / 4.0);
  double s = 0.0;
  if (gp > 2.0 * o.support_gauge) {
    PolarOptions po = o.inner;
    po.s_max = std::log(o.support_gauge);
    const HeisQuadrature q = polar_quadrature(HeisPoint::origin(1), po);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const HeisPoint d = group_mul(group_inv(q.nodes[i]), p);
      const double a = d.z_norm2();
      s += q.weights[i] * f(q.nodes[i]) * pw(a * a + d.t * d.t);
    }
    return s;
  }
  PolarOptions po = o.inner;
  po.s_max = std::log(gp + o.support_gauge + 1.0);
  const HeisQuadrature q = polar_quadrature(p, po);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const HeisPoint w = group_mul(group_inv(p), q.nodes[i]);
    const double a = w.z_norm2();
    s += q.weights[i] * f(q.nodes[i]) * pw(a * a + w.t * w.t);
  }
  return s;
}

struct SinhAxis {
  double scale, umax;
  int n;
  bool even; // symmetric axis [-max, max] when false is [0, max]
  double node(int i) const {
    const double u = even ? -umax + 2.0 * umax * i / (n - 1) : umax * i / (n - 1);
    return scale * std::sinh(u);
  }
  double coord(double x) const { return std::asinh(x / scale); }
  double du() const { return even ? 2.0 * umax / (n - 1) : umax / (n - 1); }
  double lo() const { return even ? -umax : 0.0; }
};

struct SinhTable {
  SinhAxis ar, at;
  std::vector<double> v;
  double get(long i, long k) const {
    if (i < 0)
      i = -i; // even in r
    i = std::min<long>(i, ar.n - 1);
    k = std::clamp<long>(k, 0, at.n - 1);
    return v[i * at.n + k];
  }
  double operator()(double r, double t) const {
    const double ur = (ar.coord(r) - ar.lo()) / ar.du();
    const double ut = (at.coord(t) - at.lo()) / at.du();
    const long i = static_cast<long>(std::floor(ur)), k = static_cast<long>(std::floor(ut));
    const double sr = ur - i, st = ut - k;
    auto cubic = [](double p0, double p1, double p2, double p3, double x) {
      return p1 + 0.5 * x * (p2 - p0 + x * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + x * (3.0 * (p1 - p2) + p3 - p0)));
    };
    double col[4];
    for (int a = 0; a < 4; ++a) {
      const long ii = i - 1 + a;
      col[a] = cubic(get(ii, k - 1), get(ii, k), get(ii, k + 1), get(ii, k + 2), st);
    }
    return cubic(col[0], col[1], col[2], col[3], sr);
  }
};

} // namespace detail

// Asserts invariance of f under z-rotations at a few random points.
template <class F> void require_rotation_invariant(const F &f, const char *who) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 8; ++i) {
    HeisPoint p = random_point(1, rng, 1.0), q = p;
    q.z[0] *= std::polar(1.0, 0.7 + i);
    require(std::abs(f(p) - f(q)) <= 1e-10 * (1.0 + std::abs(f(p))),
            std::string(who) + ": input is not invariant under z-rotations");
  }
}

// R_b f as a callable: table inside, M |p|^{b-Q} outside.
struct RieszPotential {
  detail::SinhTable table;
  double b = 1.0, mass = 0.0, gauge = 40.0;
  double operator()(const HeisPoint &p) const {
    const double r = std::abs(p.z[0]);
    if (r <= gauge && std::abs(p.t) <= gauge * gauge)
      return table(r, p.t);
    return mass * std::pow(koranyi_gauge(p), b - 4.0);
  }
};

template <class F> RieszPotential riesz_potential(const F &f, double b, const SemigroupOptions &o = {}) {
  require(b > 0.0 && b < 4.0, "riesz_potential: order must lie in (0, Q)");
  require_rotation_invariant(f, "riesz_potential");
  RieszPotential R;
  R.b = b;
  R.gauge = o.table_gauge;
  {
    PolarOptions po = o.inner;
    po.s_max = std::log(o.support_gauge);
    R.mass = haar_integral(f, polar_quadrature(HeisPoint::origin(1), po));
  }
  detail::SinhTable &tab = R.table;
  tab.ar = {o.table_scale, std::asinh(o.table_gauge / o.table_scale), o.table_r, false};
  tab.at = {o.table_scale, std::asinh(o.table_gauge * o.table_gauge / o.table_scale), o.table_t, true};
  tab.v.assign(static_cast<std::size_t>(o.table_r) * o.table_t, 0.0);
  parallel_for(static_cast<long>(tab.v.size()), [&](long idx) {
    HeisPoint p(1);
    p.z[0] = tab.ar.node(static_cast<int>(idx / o.table_t));
    p.t = tab.at.node(static_cast<int>(idx % o.table_t));
    tab.v[idx] = detail::riesz_polar(f, b, p, o);
  });
  return R;
}

template <class F> SemigroupReport semigroup_check(const F &f, double a, double b, const SemigroupOptions &o = {}) {
  const int Q = 4;
  require(a > 0.0 && b > 0.0 && a + b < Q, "semigroup_check: need a, b > 0 and a + b < Q");
  const RieszPotential g = riesz_potential(f, b, o);
  SemigroupReport rep;
  rep.mass = g.mass;
  std::vector<double> two, one, w;
  const int ne = o.eval_r * o.eval_t;
  two.resize(ne);
  one.resize(ne);
  w.resize(ne);
  parallel_for(ne, [&](long idx) {
    HeisPoint x(1);
    const int i = static_cast<int>(idx / o.eval_t), k = static_cast<int>(idx % o.eval_t);
    x.z[0] = (i + 0.5) / o.eval_r;
    x.t = -1.0 + 2.0 * k / (o.eval_t - 1);
    PolarOptions po = o.outer;
    po.s_max = std::log(1e4);
    const HeisQuadrature q = polar_quadrature(x, po);
    const detail::GaugePower pw((a - Q) / 4.0);
    double s = 0.0;
    for (std::size_t m = 0; m < q.nodes.size(); ++m) {
      const HeisPoint d = group_mul(group_inv(x), q.nodes[m]);
      const double zz = d.z_norm2();
      s += q.weights[m] * g(q.nodes[m]) * pw(zz * zz + d.t * d.t);
    }
    two[idx] = s;
    one[idx] = detail::riesz_polar(f, a + b, x, o);
    w[idx] = std::abs(x.z[0]);
  });
  const GreenReport fit = detail::fit_scalar(one, two, w);
  rep.fitted_constant = fit.fitted_constant;
  rep.relative_error = fit.residual;
  return rep;
}

// ||R_alpha u||_p / ||u||_q with 1/p = 1/q - alpha/Q (dilation invariant).
template <class F> double mapping_ratio(const F &u, double alpha, double q, const SemigroupOptions &o = {}) {
  const int Q = 4;
  require(q > 1.0 && alpha * q < Q, "mapping_ratio: need 1 < q < Q / alpha");
  const double p = 1.0 / (1.0 / q - alpha / Q);
  const RieszPotential R = riesz_potential(u, alpha, o);
  PolarOptions po = o.outer;
  po.s_max = std::log(1e4);
  const HeisQuadrature quad = polar_quadrature(HeisPoint::origin(1), po);
  double np = 0.0, nq = 0.0;
  for (std::size_t m = 0; m < quad.nodes.size(); ++m) {
    np += quad.weights[m] * std::pow(std::abs(R(quad.nodes[m])), p);
    nq += quad.weights[m] * std::pow(std::abs(u(quad.nodes[m])), q);
  }
  return std::pow(np, 1.0 / p) / std::pow(nq, 1.0 / q);
}

//------------------------------------------------------------------------------
// Principal value form of the fractional power with unit kernel constant:
//   PV int (u(p) - u(p w)) |w|^{-Q-alpha} dw
//   = int_{|w|>delta} (u(p) - (u(p w) + u(p w^{-1}))/2) |w|^{-Q-alpha} dw,
// truncated at |w| = r_out with the exact tail of the u(p) term added; u must decay.

struct PVOptions {
  double delta = 0.05;
  double r_out = 20.0;
  PolarOptions polar{0.0, 0.0, 24, 8, 24, 8};
};

struct PVReport {
  double value = 0.0;
  double value_half_delta = 0.0;
  double sensitivity = 0.0; // |value - value_half_delta|
  double extrapolated = 0.0; // removes the leading delta^{2-alpha} truncation term
};

template <class F> double pv_fractional_value(const F &u, double alpha, const HeisPoint &p, double delta,
                                              const PVOptions &o) {
  require(alpha > 0.0 && alpha < 2.0, "pv_fractional: alpha must lie in (0, 2)");
  require(delta > 0.0 && o.r_out > delta, "pv_fractional: need 0 < delta < r_out");
  const int N = p.N, Q = homogeneous_dimension(N);
  PolarOptions po = o.polar;
  po.s_min = std::log(delta);
  po.s_max = std::log(o.r_out);
  const HeisQuadrature q = polar_quadrature(HeisPoint::origin(N), po);
  const double up = u(p);
  std::vector<double> terms(q.nodes.size());
  parallel_for(static_cast<long>(q.nodes.size()), [&](long i) {
    const HeisPoint &w = q.nodes[i];
    const double g = koranyi_gauge(w);
    const double sym = up - 0.5 * (u(group_mul(p, w)) + u(group_mul(p, group_inv(w))));
    terms[i] = q.weights[i] * sym * std::pow(g, -Q - alpha);
  });
  double s = 0.0;
  for (double x : terms)
    s += x;
  // int_{|w| > r_out} |w|^{-Q-alpha} dw = Q |B_1| r_out^{-alpha} / alpha
  s += up * Q * koranyi_ball_volume(N) * std::pow(o.r_out, -alpha) / alpha;
  return s;
}

template <class F> PVReport pv_fractional(const F &u, double alpha, const HeisPoint &p, const PVOptions &o = {}) {
  PVReport r;
  r.value = pv_fractional_value(u, alpha, p, o.delta, o);
  r.value_half_delta = pv_fractional_value(u, alpha, p, 0.5 * o.delta, o);
  r.sensitivity = std::abs(r.value - r.value_half_delta);
  const double q = std::pow(0.5, 2.0 - alpha);
  r.extrapolated = (r.value_half_delta - q * r.value) / (1.0 - q);
  return r;
}

} // namespace cryamabe
