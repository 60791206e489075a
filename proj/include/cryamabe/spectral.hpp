#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cayley.hpp"
#include "quadrature.hpp"

namespace cryamabe {

using Multi = std::array<int, kMaxN + 1>;

struct Bidegree {
  int j = 0;
  int l = 0;
  auto operator<=>(const Bidegree &) const = default;
};

// dim H_{j,l} = C(j+N-1, j) C(l+N-1, l) (j+l+N) / N.
inline unsigned long long dim_H(int j, int l, int N) {
  require(j >= 0 && l >= 0 && N >= 1, "dim_H: need j,l >= 0 and N >= 1");
  auto binom = [](int n, int k) {
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; ++i)
      r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    return r;
  };
  const unsigned __int128 v = binom(j + N - 1, j) * binom(l + N - 1, l) *
                              static_cast<unsigned>(j + l + N) / static_cast<unsigned>(N);
  if (v > static_cast<unsigned __int128>(~0ULL))
    throw std::overflow_error("dim_H: value exceeds 64 bits");
  return static_cast<unsigned long long>(v);
}

// Total dv_S mass 2^{2N+1} N! * |S^{2N+1}| = 2^{2N+2} pi^{N+1}.
inline double default_sphere_mass(int N) {
  check_dimension(N);
  return std::ldexp(std::pow(std::numbers::pi, N + 1), 2 * N + 2);
}

// Integral of z^alpha zbar^beta over S^{2N+1} against dv_S of total mass `mass`.
inline double monomial_moment(const Multi &alpha, const Multi &beta, int N, double mass) {
  if (alpha != beta)
    return 0.0;
  long double lg = std::lgamma(static_cast<long double>(N + 1));
  int s = 0;
  for (int k = 0; k <= N; ++k) {
    lg += std::lgamma(static_cast<long double>(alpha[k] + 1));
    s += alpha[k];
  }
  lg -= std::lgamma(static_cast<long double>(N + s + 1));
  return static_cast<double>(mass * std::exp(lg));
}

// lambda_j(k) = Gamma((Q+2k)/4 + j) / Gamma((Q-2k)/4 + j).
inline double lambda_jk(int j, double k, int Q) {
  require(j >= 0, "lambda_jk: j must be nonnegative");
  require(k > 0.0 && 2.0 * k < Q, "lambda_jk: need 0 < 2k < Q");
  const double a = (Q + 2.0 * k) / 4.0 + j;
  const double b = (Q - 2.0 * k) / 4.0 + j;
  return std::exp(std::lgamma(a) - std::lgamma(b));
}

//------------------------------------------------------------------------------
// Polynomials in (z, zbar) on C^{N+1}; used for exact A_2 on basis elements.

struct Polynomial {
  int N = 1;
  // key: (alpha, beta)
  std::map<std::pair<Multi, Multi>, cplx> terms;

  void add(const Multi &a, const Multi &b, cplx c) {
    if (c == cplx(0.0))
      return;
    terms[{a, b}] += c;
  }

  cplx operator()(const SpherePoint &s) const {
    std::complex<long double> acc = 0;
    for (const auto &[ab, c] : terms) {
      std::complex<long double> m(c.real(), c.imag());
      for (int k = 0; k <= N; ++k) {
        const std::complex<long double> zk(s.zeta[k].real(), s.zeta[k].imag());
        for (int e = 0; e < ab.first[k]; ++e)
          m *= zk;
        for (int e = 0; e < ab.second[k]; ++e)
          m *= std::conj(zk);
      }
      acc += m;
    }
    return cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
  }

  Polynomial conj() const {
    Polynomial r{N, {}};
    for (const auto &[ab, c] : terms)
      r.add(ab.second, ab.first, std::conj(c));
    return r;
  }

  Polynomial &operator+=(const Polynomial &o) {
    for (const auto &[ab, c] : o.terms)
      add(ab.first, ab.second, c);
    return *this;
  }

  Polynomial scaled(cplx f) const {
    Polynomial r{N, {}};
    for (const auto &[ab, c] : terms)
      r.add(ab.first, ab.second, f * c);
    return r;
  }
};

// T_j = d/dz_j - zbar_j sum_k z_k d/dz_k (applied to the ambient polynomial).
inline Polynomial apply_T(const Polynomial &p, int j) {
  Polynomial r{p.N, {}};
  for (const auto &[ab, c] : p.terms) {
    auto [a, b] = ab;
    int deg = 0;
    for (int k = 0; k <= p.N; ++k)
      deg += a[k];
    if (a[j] > 0) {
      Multi a2 = a;
      --a2[j];
      r.add(a2, b, c * static_cast<double>(a[j]));
    }
    if (deg > 0) {
      Multi b2 = b;
      ++b2[j];
      r.add(a, b2, -c * static_cast<double>(deg));
    }
  }
  return r;
}

// Tbar_j = d/dzbar_j - z_j sum_k zbar_k d/dzbar_k.
inline Polynomial apply_Tbar(const Polynomial &p, int j) {
  Polynomial r{p.N, {}};
  for (const auto &[ab, c] : p.terms) {
    auto [a, b] = ab;
    int deg = 0;
    for (int k = 0; k <= p.N; ++k)
      deg += b[k];
    if (b[j] > 0) {
      Multi b2 = b;
      --b2[j];
      r.add(a, b2, c * static_cast<double>(b[j]));
    }
    if (deg > 0) {
      Multi a2 = a;
      ++a2[j];
      r.add(a2, b, -c * static_cast<double>(deg));
    }
  }
  return r;
}

// A_2 = -1/2 sum_j (T_j Tbar_j + Tbar_j T_j) + N^2/4, exact on polynomials.
inline Polynomial apply_A2_polynomial(const Polynomial &p) {
  Polynomial r = p.scaled(0.25 * p.N * p.N);
  for (int j = 0; j <= p.N; ++j) {
    r += apply_T(apply_Tbar(p, j), j).scaled(-0.5);
    r += apply_Tbar(apply_T(p, j), j).scaled(-0.5);
  }
  return r;
}

inline double apply_A2_differential(const Polynomial &u, const SpherePoint &s) {
  return apply_A2_polynomial(u)(s).real();
}

// Generic callable: A_2 = -1/4 Delta_S + 1/4 d^2/dtheta^2 + N^2/4, where theta is the
// Hopf phase and Delta_S is taken from the degree-0 extension u(x/|x|) by
// fourth-order differences in the 2N+2 real ambient coordinates.
inline double apply_A2_differential(const SphereFunction &u, const SpherePoint &s, double h = 2e-3) {
  const int N = s.N;
  auto ext = [&](const std::array<cplx, kMaxN + 1> &x) {
    return u(SpherePoint::from(N, x, true));
  };
  const double u0 = u(s);
  auto second = [&](auto &&g) {
    return (-g(2 * h) + 16.0 * g(h) - 30.0 * u0 + 16.0 * g(-h) - g(-2 * h)) / (12.0 * h * h);
  };
  double lap = 0.0;
  for (int k = 0; k <= N; ++k) {
    for (int part = 0; part < 2; ++part) {
      lap += second([&](double e) {
        auto x = s.zeta;
        x[k] += part == 0 ? cplx(e, 0.0) : cplx(0.0, e);
        return ext(x);
      });
    }
  }
  const double hopf = second([&](double th) {
    auto x = s.zeta;
    const cplx ph = std::polar(1.0, th);
    for (int k = 0; k <= N; ++k)
      x[k] *= ph;
    return ext(x);
  });
  return -0.25 * lap + 0.25 * hopf + 0.25 * N * N * u0;
}

//------------------------------------------------------------------------------
// Real orthonormal bidegree basis.
//
// Complex elements of H_{j,l} split by torus weight w = alpha - beta; on the sphere
// an element of weight w is P_w(zeta) p(rho), P_w = zeta^{w+} zbar^{w-},
// rho_k = |zeta_k|^2 and p homogeneous of degree d = j - |w+|. Real basis: for
// w = 0 the element itself; otherwise sqrt2 Re goes to block (j,l) and sqrt2 Im to
// block (l,j) (only one of w, -w is visited).

enum class Part { Real, Re, Im };

struct BasisElement {
  Bidegree block;           // block this real element is filed under
  Bidegree complex_bidegree; // bidegree of the complex element it comes from
  Multi weight{};           // torus weight w
  Part part = Part::Real;
  // radial polynomial p(rho), homogeneous in rho
  std::vector<std::pair<Multi, long double>> radial;
};

struct HarmonicBasis {
  int N = 1;
  int jmax = 0;
  int lmax = 0;
  double total_mass = 1.0;
  std::vector<BasisElement> elements;      // ordered by block, then m
  std::map<Bidegree, std::pair<int, int>> blocks; // (offset, count)

  int size() const { return static_cast<int>(elements.size()); }

  int index(int j, int l, int m) const {
    auto it = blocks.find({j, l});
    require(it != blocks.end(), "HarmonicBasis: block outside truncation");
    require(m >= 0 && m < it->second.second, "HarmonicBasis: m out of range");
    return it->second.first + m;
  }

  int block_size(int j, int l) const {
    auto it = blocks.find({j, l});
    return it == blocks.end() ? 0 : it->second.second;
  }

  // Complex polynomial (ambient) of the element at global index i, real valued on
  // the sphere.
  Polynomial polynomial(int i) const {
    const BasisElement &e = elements[i];
    Polynomial p{N, {}};
    for (const auto &[ex, c] : e.radial) {
      Multi a{}, b{};
      for (int k = 0; k <= N; ++k) {
        a[k] = ex[k] + std::max(e.weight[k], 0);
        b[k] = ex[k] + std::max(-e.weight[k], 0);
      }
      p.add(a, b, static_cast<double>(c));
    }
    if (e.part == Part::Real)
      return p;
    const double r2 = std::numbers::sqrt2;
    Polynomial q = p.conj();
    if (e.part == Part::Re) {
      // sqrt2 Re Y = (Y + conj Y)/sqrt2
      Polynomial out = p.scaled(1.0 / r2);
      out += q.scaled(1.0 / r2);
      return out;
    }
    // sqrt2 Im Y = (Y - conj Y)/(i sqrt2)
    Polynomial out = p.scaled(cplx(0.0, -1.0 / r2));
    out += q.scaled(cplx(0.0, 1.0 / r2));
    return out;
  }

  double radial_value(int i, const std::array<double, kMaxN + 1> &rho) const {
    const BasisElement &e = elements[i];
    long double s = 0;
    for (const auto &[ex, c] : e.radial) {
      long double m = c;
      for (int k = 0; k <= N; ++k)
        for (int q = 0; q < ex[k]; ++q)
          m *= rho[k];
      s += m;
    }
    long double mag = 1;
    for (int k = 0; k <= N; ++k)
      if (e.weight[k] != 0)
        mag *= std::pow(static_cast<long double>(rho[k]), std::abs(e.weight[k]) * 0.5L);
    return static_cast<double>(s * mag);
  }

  double eval(int i, const SpherePoint &s) const {
    std::array<double, kMaxN + 1> rho{};
    cplx phase = 1.0;
    const BasisElement &e = elements[i];
    for (int k = 0; k <= N; ++k) {
      rho[k] = std::norm(s.zeta[k]);
      const double a = std::abs(s.zeta[k]);
      const cplx u = a > 0.0 ? s.zeta[k] / a : cplx(1.0);
      const int w = e.weight[k];
      for (int q = 0; q < std::abs(w); ++q)
        phase *= w > 0 ? u : std::conj(u);
    }
    const double r = radial_value(i, rho);
    switch (e.part) {
    case Part::Real:
      return r * phase.real();
    case Part::Re:
      return std::numbers::sqrt2 * r * phase.real();
    case Part::Im:
      return std::numbers::sqrt2 * r * phase.imag();
    }
    return 0.0;
  }
};

using BasisPtr = std::shared_ptr<const HarmonicBasis>;

namespace detail {

inline bool canonical_weight(const Multi &w, int N) {
  for (int k = 0; k <= N; ++k) {
    if (w[k] > 0)
      return true;
    if (w[k] < 0)
      return false;
  }
  return true; // w = 0
}

// All multi-indices e over N+1 slots with |e| = d (lexicographic).
inline std::vector<Multi> compositions(int N, int d) {
  std::vector<Multi> out;
  Multi e{};
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == N) {
      e[k] = left;
      out.push_back(e);
      return;
    }
    for (int v = left; v >= 0; --v) {
      e[k] = v;
      rec(k + 1, left - v);
    }
  };
  rec(0, d);
  return out;
}

using RadialPoly = std::map<Multi, long double>;

inline RadialPoly times_sum_rho(const RadialPoly &p, int N) {
  RadialPoly r;
  for (const auto &[e, c] : p)
    for (int k = 0; k <= N; ++k) {
      Multi f = e;
      ++f[k];
      r[f] += c;
    }
  return r;
}

struct MomentTable {
  int N;
  Multi absw;
  long double mass;
  long double operator()(const Multi &e, const Multi &f) const {
    long double lg = std::lgamma(static_cast<long double>(N + 1));
    int s = 0;
    for (int k = 0; k <= N; ++k) {
      const int a = e[k] + f[k] + absw[k];
      lg += std::lgamma(static_cast<long double>(a + 1));
      s += a;
    }
    lg -= std::lgamma(static_cast<long double>(N + s + 1));
    return mass * std::exp(lg);
  }
};

inline long double inner(const RadialPoly &p, const RadialPoly &q, const MomentTable &mt) {
  long double s = 0;
  for (const auto &[e, c] : p)
    for (const auto &[f, d] : q)
      s += c * d * mt(e, f);
  return s;
}

} // namespace detail

inline BasisPtr build_basis(int N, int jmax, int lmax, double total_mass = 0.0) {
  check_dimension(N);
  require(jmax >= 0 && lmax >= 0, "build_basis: negative truncation");
  require(jmax == lmax, "build_basis: the real basis pairs (j,l) with (l,j); use jmax == lmax");
  require(jmax <= 32, "build_basis: truncation above 32");
  auto B = std::make_shared<HarmonicBasis>();
  B->N = N;
  B->jmax = jmax;
  B->lmax = lmax;
  B->total_mass = total_mass > 0.0 ? total_mass : default_sphere_mass(N);

  std::map<Bidegree, std::vector<BasisElement>> by_block;
  // enumerate weights w with |w+| <= jmax, |w-| <= lmax
  const int W = std::max(jmax, lmax);
  Multi w{};
  std::function<void(int)> rec = [&](int k) {
    if (k <= N) {
      for (int v = -W; v <= W; ++v) {
        w[k] = v;
        rec(k + 1);
      }
      w[k] = 0;
      return;
    }
    int wp = 0, wm = 0;
    for (int q = 0; q <= N; ++q)
      (w[q] > 0 ? wp : wm) += std::abs(w[q]);
    if (wp > jmax || wm > lmax || !detail::canonical_weight(w, N))
      return;
    detail::MomentTable mt{N, {}, static_cast<long double>(B->total_mass)};
    for (int q = 0; q <= N; ++q)
      mt.absw[q] = std::abs(w[q]);
    const int dmax = std::min(jmax - wp, lmax - wm);
    std::vector<detail::RadialPoly> ortho; // orthonormal, all lifted to current degree
    for (int d = 0; d <= dmax; ++d) {
      if (d > 0)
        for (auto &p : ortho)
          p = detail::times_sum_rho(p, N);
      const std::size_t lower = ortho.size();
      for (const Multi &e : detail::compositions(N, d)) {
        if (e[N] != 0)
          continue;
        detail::RadialPoly v{{e, 1.0L}};
        for (int pass = 0; pass < 2; ++pass) {
          for (const auto &u : ortho) {
            const long double c = detail::inner(u, v, mt);
            for (const auto &[f, a] : u)
              v[f] -= c * a;
          }
        }
        const long double nrm2 = detail::inner(v, v, mt);
        const long double ref = detail::inner(detail::RadialPoly{{e, 1.0L}}, detail::RadialPoly{{e, 1.0L}}, mt);
        if (!(nrm2 > 1e-24L * ref)) {
          std::ostringstream os;
          os << "build_basis: numerically singular Gram matrix in block (" << wp + d << "," << wm + d << ")";
          throw BasisConstructionError(os.str());
        }
        const long double inv = 1.0L / std::sqrt(nrm2);
        for (auto &[f, a] : v)
          a *= inv;
        ortho.push_back(v);
      }
      const int j = wp + d, l = wm + d;
      const bool zero_weight = wp == 0 && wm == 0;
      for (std::size_t q = lower; q < ortho.size(); ++q) {
        BasisElement el;
        el.complex_bidegree = {j, l};
        el.weight = w;
        for (const auto &[f, a] : ortho[q])
          if (a != 0.0L)
            el.radial.emplace_back(f, a);
        if (zero_weight) {
          el.part = Part::Real;
          el.block = {j, j};
          by_block[el.block].push_back(el);
        } else {
          el.part = Part::Re;
          el.block = {j, l};
          by_block[el.block].push_back(el);
          el.part = Part::Im;
          el.block = {l, j};
          by_block[el.block].push_back(el);
        }
      }
    }
  };
  rec(0);

  for (int j = 0; j <= jmax; ++j)
    for (int l = 0; l <= lmax; ++l) {
      auto &v = by_block[{j, l}];
      if (v.size() != dim_H(j, l, N)) {
        std::ostringstream os;
        os << "build_basis: block (" << j << "," << l << ") has " << v.size() << " elements, expected "
           << dim_H(j, l, N);
        throw BasisConstructionError(os.str());
      }
      B->blocks[{j, l}] = {B->size(), static_cast<int>(v.size())};
      for (auto &e : v)
        B->elements.push_back(std::move(e));
    }
  return B;
}

//------------------------------------------------------------------------------
// Product quadrature on S^{2N+1} scaled to the dv_S mass.

struct SphereQuadrature {
  int N = 1;
  int degree = 0;
  double total_mass = 1.0;
  ComplexSphereRule rule;
  std::vector<SpherePoint> nodes;
  std::vector<double> weights;

  long size() const { return static_cast<long>(weights.size()); }
};

using QuadPtr = std::shared_ptr<const SphereQuadrature>;

inline QuadPtr make_sphere_quadrature(int N, int degree, double total_mass = 0.0) {
  check_dimension(N);
  auto q = std::make_shared<SphereQuadrature>();
  q->N = N;
  q->degree = degree;
  q->total_mass = total_mass > 0.0 ? total_mass : default_sphere_mass(N);
  q->rule = complex_sphere_rule(N + 1, degree);
  q->nodes.reserve(q->rule.nodes.size());
  for (std::size_t i = 0; i < q->rule.nodes.size(); ++i) {
    SpherePoint s(N);
    s.zeta = q->rule.nodes[i];
    q->nodes.push_back(s);
    q->weights.push_back(q->rule.weights[i] * q->total_mass);
  }
  return q;
}

template <class F> double sphere_integral(const F &f, const SphereQuadrature &q) {
  std::vector<double> v(q.size());
  parallel_for(q.size(), [&](long i) { v[i] = q.weights[i] * f(q.nodes[i]); });
  double s = 0.0;
  for (double x : v)
    s += x;
  return s;
}

//------------------------------------------------------------------------------
// Spectral functions.

struct SpectralFunction {
  BasisPtr basis;
  std::vector<double> c;

  SpectralFunction() = default;
  explicit SpectralFunction(BasisPtr b) : basis(std::move(b)), c(basis->size(), 0.0) {}

  double &at(int j, int l, int m) { return c[basis->index(j, l, m)]; }
  double at(int j, int l, int m) const { return c[basis->index(j, l, m)]; }
  int jmax() const { return basis->jmax; }
  int lmax() const { return basis->lmax; }

  double norm_L2() const {
    double s = 0.0;
    for (double x : c)
      s += x * x;
    return std::sqrt(s);
  }

  // Fraction of L2 energy in the outermost shell (j = jmax or l = lmax).
  double tail_energy() const {
    double all = 0.0, tail = 0.0;
    for (const auto &[b, ofs] : basis->blocks)
      for (int m = 0; m < ofs.second; ++m) {
        const double v = c[ofs.first + m] * c[ofs.first + m];
        all += v;
        if (b.j == basis->jmax || b.l == basis->lmax)
          tail += v;
      }
    return all > 0.0 ? tail / all : 0.0;
  }

  SpectralFunction &operator+=(const SpectralFunction &o) {
    require(o.c.size() == c.size(), "SpectralFunction: size mismatch");
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] += o.c[i];
    return *this;
  }
  SpectralFunction &operator-=(const SpectralFunction &o) {
    require(o.c.size() == c.size(), "SpectralFunction: size mismatch");
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] -= o.c[i];
    return *this;
  }
  SpectralFunction &operator*=(double a) {
    for (double &x : c)
      x *= a;
    return *this;
  }
  friend SpectralFunction operator+(SpectralFunction a, const SpectralFunction &b) { return a += b; }
  friend SpectralFunction operator-(SpectralFunction a, const SpectralFunction &b) { return a -= b; }
  friend SpectralFunction operator*(double s, SpectralFunction a) { return a *= s; }
};

inline double synthesize(const SpectralFunction &f, const SpherePoint &s) {
  double acc = 0.0;
  for (int i = 0; i < f.basis->size(); ++i)
    if (f.c[i] != 0.0)
      acc += f.c[i] * f.basis->eval(i, s);
  return acc;
}

// Multiplies each coefficient by g(j, l).
template <class G> SpectralFunction block_multiply(const SpectralFunction &u, G &&g) {
  SpectralFunction r = u;
  for (const auto &[b, ofs] : u.basis->blocks) {
    const double f = g(b.j, b.l);
    for (int m = 0; m < ofs.second; ++m)
      r.c[ofs.first + m] *= f;
  }
  return r;
}

inline double symbol(int j, int l, double k, int N) {
  const int Q = homogeneous_dimension(N);
  return lambda_jk(j, k, Q) * lambda_jk(l, k, Q);
}

inline SpectralFunction apply_A2k(const SpectralFunction &u, double k) {
  const int N = u.basis->N;
  return block_multiply(u, [&](int j, int l) { return symbol(j, l, k, N); });
}

inline SpectralFunction apply_A2k_inverse(const SpectralFunction &u, double k) {
  const int N = u.basis->N;
  return block_multiply(u, [&](int j, int l) { return 1.0 / symbol(j, l, k, N); });
}

inline double pairing(const SpectralFunction &f, const SpectralFunction &u) {
  require(f.c.size() == u.c.size(), "pairing: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.c.size(); ++i)
    s += f.c[i] * u.c[i];
  return s;
}

inline double norm_Hk(const SpectralFunction &u, double k) {
  return std::sqrt(std::max(0.0, pairing(apply_A2k(u, k), u)));
}

inline double norm_H_minus_k(const SpectralFunction &f, double k) {
  return std::sqrt(std::max(0.0, pairing(apply_A2k_inverse(f, k), f)));
}

//------------------------------------------------------------------------------
// Fast transform between coefficients and quadrature node values. For each radial
// node the phase dependence is a trigonometric polynomial in the N+1 phases, so
// analysis/synthesis factor into per-axis phase sums.

class SpectralTransform {
public:
  SpectralTransform(BasisPtr basis, QuadPtr quad) : B_(std::move(basis)), Qd_(std::move(quad)) {
    require(B_->N == Qd_->N, "SpectralTransform: dimension mismatch");
    n_ = B_->N + 1;
    W_ = std::max(B_->jmax, B_->lmax);
    M_ = Qd_->rule.phases;
    nr_ = static_cast<long>(Qd_->rule.radial.points.size());
    pc_ = Qd_->rule.phase_count();
    ws_ = 2 * W_ + 1;
    wc_ = 1;
    for (int k = 0; k < n_; ++k)
      wc_ *= ws_;
    radial_.assign(static_cast<std::size_t>(B_->size()) * nr_, 0.0);
    for (int i = 0; i < B_->size(); ++i)
      for (long a = 0; a < nr_; ++a) {
        std::array<double, kMaxN + 1> rho{};
        for (int k = 0; k < n_; ++k)
          rho[k] = Qd_->rule.radial.points[a][k];
        radial_[i * nr_ + a] = B_->radial_value(i, rho);
      }
    windex_.resize(B_->size());
    nwindex_.resize(B_->size());
    for (int i = 0; i < B_->size(); ++i) {
      long p = 0, q = 0;
      for (int k = 0; k < n_; ++k) {
        p = p * ws_ + (B_->elements[i].weight[k] + W_);
        q = q * ws_ + (-B_->elements[i].weight[k] + W_);
      }
      windex_[i] = p;
      nwindex_[i] = q;
    }
    tw_.resize(static_cast<std::size_t>(M_) * ws_);
    for (int m = 0; m < M_; ++m)
      for (int w = -W_; w <= W_; ++w)
        tw_[m * ws_ + (w + W_)] = std::polar(1.0, 2.0 * std::numbers::pi * ((static_cast<long>(m) * w) % M_) / M_);
  }

  const HarmonicBasis &basis() const { return *B_; }
  const SphereQuadrature &quadrature() const { return *Qd_; }
  BasisPtr basis_ptr() const { return B_; }
  QuadPtr quadrature_ptr() const { return Qd_; }

  // Values at all quadrature nodes (node order of the quadrature).
  std::vector<double> synthesize_nodes(const SpectralFunction &f) const {
    std::vector<double> out(static_cast<std::size_t>(nr_) * pc_);
    parallel_for(nr_, [&](long a) {
      std::vector<cplx> A(wc_, 0.0);
      for (int i = 0; i < B_->size(); ++i) {
        const double v = f.c[i] * radial_[i * nr_ + a];
        if (v == 0.0)
          continue;
        add_element(A, i, v);
      }
      const std::vector<cplx> vals = to_phases(std::move(A));
      for (long q = 0; q < pc_; ++q)
        out[a * pc_ + q] = vals[q].real();
    });
    return out;
  }

  SpectralFunction analyze_nodes(const std::vector<double> &vals) const {
    require(static_cast<long>(vals.size()) == nr_ * pc_, "analyze_nodes: wrong sample count");
    std::vector<std::vector<cplx>> Bw(nr_);
    parallel_for(nr_, [&](long a) {
      std::vector<cplx> in(vals.begin() + a * pc_, vals.begin() + (a + 1) * pc_);
      Bw[a] = from_phases(std::move(in));
    });
    SpectralFunction f(B_);
    const double r2 = std::numbers::sqrt2;
    parallel_for(B_->size(), [&](long i) {
      double acc = 0.0;
      const Part part = B_->elements[i].part;
      for (long a = 0; a < nr_; ++a) {
        const double w = Qd_->weights[a * pc_] * static_cast<double>(pc_) * radial_[i * nr_ + a];
        const cplx bp = Bw[a][windex_[i]];
        double v = 0.0;
        switch (part) {
        case Part::Real:
          v = bp.real();
          break;
        case Part::Re:
          v = r2 * bp.real();
          break;
        case Part::Im:
          v = r2 * bp.imag();
          break;
        }
        acc += w * v;
      }
      f.c[i] = acc;
    });
    return f;
  }

  template <class F> SpectralFunction analyze(const F &u) const {
    std::vector<double> v(Qd_->size());
    parallel_for(Qd_->size(), [&](long i) { v[i] = u(Qd_->nodes[i]); });
    return analyze_nodes(v);
  }

  double integrate(const std::vector<double> &vals) const {
    double s = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      s += Qd_->weights[i] * vals[i];
    return s;
  }

private:
  void add_element(std::vector<cplx> &A, int i, double v) const {
    const double h = 1.0 / std::numbers::sqrt2;
    switch (B_->elements[i].part) {
    case Part::Real:
      A[windex_[i]] += v;
      break;
    case Part::Re: // sqrt2 Re(Y) = (Y + conj Y)/sqrt2
      A[windex_[i]] += h * v;
      A[nwindex_[i]] += h * v;
      break;
    case Part::Im: // sqrt2 Im(Y) = (Y - conj Y)/(i sqrt2)
      A[windex_[i]] += cplx(0.0, -h * v);
      A[nwindex_[i]] += cplx(0.0, h * v);
      break;
    }
  }

  // (2W+1)^n weight coefficients -> M^n phase values: u(m) = sum_w A_w e^{i w.phi_m}.
  std::vector<cplx> to_phases(std::vector<cplx> A) const {
    std::vector<long> shape(n_, ws_);
    for (int ax = 0; ax < n_; ++ax) {
      std::vector<long> nshape = shape;
      nshape[ax] = M_;
      A = transform_axis(A, shape, nshape, ax, [&](long out, long in) { return tw_[out * ws_ + in]; });
      shape = nshape;
    }
    return A;
  }

  // M^n phase samples -> mean over phases of u e^{i w.phi} for each weight w.
  std::vector<cplx> from_phases(std::vector<cplx> U) const {
    std::vector<long> shape(n_, M_);
    for (int ax = 0; ax < n_; ++ax) {
      std::vector<long> nshape = shape;
      nshape[ax] = ws_;
      U = transform_axis(U, shape, nshape, ax,
                         [&](long out, long in) { return tw_[in * ws_ + out] / static_cast<double>(M_); });
      shape = nshape;
    }
    return U;
  }

  template <class Kern>
  static std::vector<cplx> transform_axis(const std::vector<cplx> &in, const std::vector<long> &shape,
                                          const std::vector<long> &nshape, int ax, Kern &&kern) {
    long outer = 1, inner = 1;
    for (int k = 0; k < ax; ++k)
      outer *= shape[k];
    for (std::size_t k = ax + 1; k < shape.size(); ++k)
      inner *= shape[k];
    const long nin = shape[ax], nout = nshape[ax];
    std::vector<cplx> out(static_cast<std::size_t>(outer) * nout * inner, 0.0);
    std::vector<cplx> K(static_cast<std::size_t>(nout) * nin);
    for (long o = 0; o < nout; ++o)
      for (long i = 0; i < nin; ++i)
        K[o * nin + i] = kern(o, i);
    for (long a = 0; a < outer; ++a)
      for (long i = 0; i < nin; ++i) {
        const cplx *src = &in[(a * nin + i) * inner];
        bool nz = false;
        for (long b = 0; b < inner; ++b)
          if (src[b] != cplx(0.0)) {
            nz = true;
            break;
          }
        if (!nz)
          continue;
        for (long o = 0; o < nout; ++o) {
          const cplx k = K[o * nin + i];
          cplx *dst = &out[(a * nout + o) * inner];
          for (long b = 0; b < inner; ++b)
            dst[b] += k * src[b];
        }
      }
    return out;
  }

  BasisPtr B_;
  QuadPtr Qd_;
  int n_ = 0, W_ = 0, M_ = 0;
  long nr_ = 0, pc_ = 0, ws_ = 0, wc_ = 0;
  std::vector<double> radial_;
  std::vector<long> windex_, nwindex_;
  std::vector<cplx> tw_;
};

using TransformPtr = std::shared_ptr<const SpectralTransform>;

// Default quadrature degree: 4 (jmax + lmax), exact for quartic nonlinearities of
// band-limited functions.
inline TransformPtr make_transform(int N, int L, int degree = 0, double total_mass = 0.0) {
  BasisPtr b = build_basis(N, L, L, total_mass);
  QuadPtr q = make_sphere_quadrature(N, degree > 0 ? degree : 4 * (2 * L), b->total_mass);
  return std::make_shared<SpectralTransform>(b, q);
}

template <class F> SpectralFunction analyze(const F &u, const SpectralTransform &T) { return T.analyze(u); }

//------------------------------------------------------------------------------
// Random band-limited functions with coefficients decaying in j + l.

inline SpectralFunction random_band_limited(BasisPtr b, std::mt19937_64 &rng, int band = -1,
                                            double decay = 1.0) {
  std::normal_distribution<double> G;
  SpectralFunction f(b);
  for (const auto &[bd, ofs] : b->blocks) {
    if (band >= 0 && (bd.j > band || bd.l > band))
      continue;
    const double s = 1.0 / std::pow(1.0 + bd.j + bd.l, decay);
    for (int m = 0; m < ofs.second; ++m)
      f.c[ofs.first + m] = s * G(rng);
  }
  return f;
}

//------------------------------------------------------------------------------
// Disk cache: basis.csv (one row per polynomial coefficient), quadrature.csv (one
// row per node) and a JSON header. No binary formats.

inline void save_basis_csv(const HarmonicBasis &b, const std::filesystem::path &file) {
  std::ostringstream os;
  os.precision(21);
  os << "index,j,l,part";
  for (int k = 0; k <= b.N; ++k)
    os << ",w" << k;
  for (int k = 0; k <= b.N; ++k)
    os << ",e" << k;
  os << ",coeff\n";
  for (int i = 0; i < b.size(); ++i) {
    const BasisElement &e = b.elements[i];
    for (const auto &[ex, c] : e.radial) {
      os << i << ',' << e.block.j << ',' << e.block.l << ','
         << (e.part == Part::Real ? "real" : e.part == Part::Re ? "re" : "im");
      for (int k = 0; k <= b.N; ++k)
        os << ',' << e.weight[k];
      for (int k = 0; k <= b.N; ++k)
        os << ',' << ex[k];
      os << ',' << c << '\n';
    }
  }
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << os.str();
    if (!f)
      throw std::runtime_error("save_basis_csv: write failed");
  }
  std::filesystem::rename(tmp, file);
}

inline BasisPtr load_basis_csv(const std::filesystem::path &file, int N, int jmax, int lmax, double mass) {
  std::ifstream f(file);
  if (!f)
    throw std::runtime_error("load_basis_csv: cannot open " + file.string());
  auto B = std::make_shared<HarmonicBasis>();
  B->N = N;
  B->jmax = jmax;
  B->lmax = lmax;
  B->total_mass = mass;
  std::string line;
  std::getline(f, line);
  int last = -1;
  while (std::getline(f, line)) {
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::string tok;
    auto next = [&]() {
      std::getline(ss, tok, ',');
      return tok;
    };
    const int idx = std::stoi(next());
    const int j = std::stoi(next());
    const int l = std::stoi(next());
    const std::string part = next();
    Multi w{}, e{};
    for (int k = 0; k <= N; ++k)
      w[k] = std::stoi(next());
    for (int k = 0; k <= N; ++k)
      e[k] = std::stoi(next());
    const long double c = std::stold(next());
    if (idx != last) {
      BasisElement el;
      el.block = {j, l};
      el.weight = w;
      el.part = part == "real" ? Part::Real : part == "re" ? Part::Re : Part::Im;
      int wp = 0, wm = 0;
      for (int k = 0; k <= N; ++k)
        (w[k] > 0 ? wp : wm) += std::abs(w[k]);
      int d = 0;
      for (int k = 0; k <= N; ++k)
        d += e[k];
      el.complex_bidegree = {wp + d, wm + d};
      B->elements.push_back(el);
      last = idx;
    }
    B->elements.back().radial.emplace_back(e, c);
  }
  int ofs = 0;
  std::map<Bidegree, int> count;
  for (const auto &e : B->elements)
    ++count[e.block];
  for (const auto &[b, n] : count) {
    B->blocks[b] = {ofs, n};
    ofs += n;
  }
  return B;
}

inline void save_quadrature_csv(const SphereQuadrature &q, const std::filesystem::path &file) {
  std::ostringstream os;
  os.precision(17);
  os << "index";
  for (int k = 0; k <= q.N; ++k)
    os << ",re" << k << ",im" << k;
  os << ",weight\n";
  for (long i = 0; i < q.size(); ++i) {
    os << i;
    for (int k = 0; k <= q.N; ++k)
      os << ',' << q.nodes[i].zeta[k].real() << ',' << q.nodes[i].zeta[k].imag();
    os << ',' << q.weights[i] << '\n';
  }
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << os.str();
    if (!f)
      throw std::runtime_error("save_quadrature_csv: write failed");
  }
  std::filesystem::rename(tmp, file);
}

} // namespace cryamabe
