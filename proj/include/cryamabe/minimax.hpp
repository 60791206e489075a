#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "energy.hpp"

namespace cryamabe {

// Subgroups acting diagonally on the bidegree basis.
//   hopf_invariant:       u(e^{i theta} zeta) = u(zeta)     keeps j = l
//   antipodal_odd:        u(-zeta) = -u(zeta)              keeps j + l odd
//   first_coordinate_odd: u(-zeta_1, zeta') = -u(zeta)     keeps w_1 odd
struct SubgroupSpec {
  bool hopf_invariant = false;
  bool antipodal_odd = false;
  bool first_coordinate_odd = false;

  bool keeps(const BasisElement &e) const {
    if (hopf_invariant && e.block.j != e.block.l)
      return false;
    if (antipodal_odd && (e.block.j + e.block.l) % 2 == 0)
      return false;
    if (first_coordinate_odd && (e.weight[0] % 2) == 0)
      return false;
    return true;
  }

  std::string label() const {
    std::string s;
    auto add = [&](const char *x) { s += s.empty() ? x : std::string("+") + x; };
    if (hopf_invariant)
      add("hopf");
    if (antipodal_odd)
      add("antipodal_odd");
    if (first_coordinate_odd)
      add("first_coordinate_odd");
    return s.empty() ? "none" : s;
  }
};

inline int mask_size(const HarmonicBasis &b, const SubgroupSpec &G) {
  int n = 0;
  for (const auto &e : b.elements)
    n += G.keeps(e) ? 1 : 0;
  return n;
}

inline SpectralFunction project_XG(const SpectralFunction &u, const SubgroupSpec &G) {
  SpectralFunction r = u;
  for (int i = 0; i < u.basis->size(); ++i)
    if (!G.keeps(u.basis->elements[i]))
      r.c[i] = 0.0;
  return r;
}

//------------------------------------------------------------------------------
// Unitary maps of C^{N+1}.

struct Unitary {
  int n = 2; // N + 1
  std::array<std::array<cplx, kMaxN + 1>, kMaxN + 1> a{};

  static Unitary identity(int n) {
    Unitary u;
    u.n = n;
    for (int i = 0; i < n; ++i)
      u.a[i][i] = 1.0;
    return u;
  }

  static Unitary phase(int n, double theta) {
    Unitary u = identity(n);
    for (int i = 0; i < n; ++i)
      u.a[i][i] = std::polar(1.0, theta);
    return u;
  }

  double unitarity_defect() const {
    double d = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx s = 0.0;
        for (int k = 0; k < n; ++k)
          s += std::conj(a[k][i]) * a[k][j];
        d = std::max(d, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    return d;
  }

  SpherePoint apply(const SpherePoint &s) const {
    SpherePoint r(s.N);
    for (int i = 0; i < n; ++i) {
      cplx v = 0.0;
      for (int k = 0; k < n; ++k)
        v += a[i][k] * s.zeta[k];
      r.zeta[i] = v;
    }
    return r;
  }

  Unitary operator*(const Unitary &o) const {
    Unitary r;
    r.n = n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx s = 0.0;
        for (int k = 0; k < n; ++k)
          s += a[i][k] * o.a[k][j];
        r.a[i][j] = s;
      }
    return r;
  }
};

// Haar-random unitary by Gram-Schmidt on a complex Gaussian matrix.
inline Unitary random_unitary(int n, std::mt19937_64 &rng) {
  std::normal_distribution<double> G;
  Unitary u;
  u.n = n;
  for (int j = 0; j < n; ++j) {
    std::array<cplx, kMaxN + 1> v{};
    for (int i = 0; i < n; ++i)
      v[i] = cplx(G(rng), G(rng));
    for (int pass = 0; pass < 2; ++pass)
      for (int q = 0; q < j; ++q) {
        cplx d = 0.0;
        for (int i = 0; i < n; ++i)
          d += std::conj(u.a[i][q]) * v[i];
        for (int i = 0; i < n; ++i)
          v[i] -= d * u.a[i][q];
      }
    double nr = 0.0;
    for (int i = 0; i < n; ++i)
      nr += std::norm(v[i]);
    nr = std::sqrt(nr);
    for (int i = 0; i < n; ++i)
      u.a[i][j] = v[i] / nr;
  }
  return u;
}

// |E(u) - E(u o g)|, with u o g analyzed on the same quadrature.
inline double invariance_check(const YamabeFunctional &E, const SpectralFunction &u, const Unitary &g) {
  require(g.n == E.constants().N + 1, "invariance_check: wrong matrix size");
  require(g.unitarity_defect() < 1e-10, "invariance_check: matrix is not unitary");
  const SpectralFunction ug = E.transform().analyze([&](const SpherePoint &s) { return synthesize(u, g.apply(s)); });
  return std::abs(E.energy(u) - E.energy(ug));
}

// Orbit of zeta under the cyclic group generated by g: accumulates iff the orbit
// does not close up and its samples come arbitrarily close to each other.
// Coordinate distance: the CR distance square-roots roundoff.
inline double coordinate_dist(const SpherePoint &a, const SpherePoint &b) {
  double s = 0.0;
  for (int i = 0; i <= a.N; ++i)
    s += std::norm(a.zeta[i] - b.zeta[i]);
  return std::sqrt(s);
}

inline bool orbit_accumulation_check(const SpherePoint &zeta, const Unitary &g, int samples = 4096,
                                     double gap = 1e-2) {
  std::vector<SpherePoint> orbit{zeta};
  SpherePoint cur = zeta;
  for (int i = 1; i < samples; ++i) {
    cur = g.apply(cur);
    if (coordinate_dist(cur, zeta) < 1e-9)
      return false; // finite orbit
    orbit.push_back(cur);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < orbit.size(); ++i)
    best = std::min(best, coordinate_dist(orbit[i], zeta));
  return best < gap;
}

// Group given by flags: the Hopf circle always has accumulating orbits; the
// remaining (finite) constraints alone do not.
inline bool orbit_accumulation_check(const SpherePoint &zeta, const SubgroupSpec &G) {
  if (G.hopf_invariant) {
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    return orbit_accumulation_check(zeta, Unitary::phase(zeta.N + 1, 2.0 * std::numbers::pi * golden));
  }
  return false;
}

//------------------------------------------------------------------------------
// Nehari-constrained descent inside X_G.

struct CriticalPointReport {
  SpectralFunction candidate;
  double energy = 0.0;
  double residual = 0.0;      // masked H^{-k} gradient norm
  double residual_full = 0.0; // unmasked H^{-k} gradient norm
  double distance_to_bubble_level = 0.0;
  double lp_mass = 0.0;
  double tail = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::uint64_t seed = 0;
  std::string mask;
};

struct MinimaxOptions {
  int budget = 3000;
  double tol = 1e-5;
  int seed_band = -1; // random seeds restricted to j, l <= seed_band (all if < 0)
};

inline CriticalPointReport nehari_descent(const YamabeFunctional &E, const SubgroupSpec &G, SpectralFunction u,
                                          const MinimaxOptions &o) {
  const double k = E.constants().k;
  CriticalPointReport rep;
  rep.mask = G.label();
  u = E.nehari_rescale(project_XG(u, G));
  double e = E.energy(u);
  for (int it = 0; it < o.budget; ++it) {
    const SpectralFunction g = project_XG(E.gradient(u), G);
    const SpectralFunction d = apply_A2k_inverse(g, k);
    const double slope = pairing(g, d);
    rep.residual = std::sqrt(std::max(0.0, slope));
    rep.iterations = it;
    if (rep.residual < o.tol) {
      rep.converged = true;
      break;
    }
    double tau = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      SpectralFunction trial = u;
      for (std::size_t i = 0; i < trial.c.size(); ++i)
        trial.c[i] -= tau * d.c[i];
      trial = E.nehari_rescale(trial);
      const double et = E.energy(trial);
      if (std::isfinite(et) && et <= e - 1e-4 * tau * slope) {
        u = std::move(trial);
        e = et;
        ok = true;
        break;
      }
      tau *= 0.5;
    }
    if (!ok) {
      // no decrease possible at this precision: accept the iterate as is
      rep.line_search_failed = true;
      break;
    }
  }
  rep.residual = norm_H_minus_k(project_XG(E.gradient(u), G), k);
  rep.converged = rep.residual < o.tol;
  rep.residual_full = E.residual(u);
  rep.energy = e;
  rep.distance_to_bubble_level = std::abs(e - E.constants().C_E);
  rep.lp_mass = E.lp_integral(u);
  rep.tail = u.tail_energy();
  rep.candidate = std::move(u);
  return rep;
}

inline std::vector<CriticalPointReport> minimax_search(const YamabeFunctional &E, const SubgroupSpec &G,
                                                       const std::vector<SpectralFunction> &seeds,
                                                       const MinimaxOptions &o = {}) {
  if (mask_size(E.transform().basis(), G) == 0)
    throw EmptyMaskError("minimax_search: the symmetry mask " + G.label() +
                         " is empty at this truncation");
  std::vector<CriticalPointReport> out(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const SpectralFunction p = project_XG(seeds[s], G);
    require(p.norm_L2() > 0.0, "minimax_search: seed vanishes inside the mask");
    out[s] = nehari_descent(E, G, p, o);
    out[s].seed = s;
  }
  return out;
}

inline std::vector<SpectralFunction> random_seeds(BasisPtr b, const SubgroupSpec &G, int count, std::uint64_t seed,
                                                  int band = -1) {
  std::mt19937_64 rng(seed);
  std::vector<SpectralFunction> out;
  for (int i = 0; i < count; ++i)
    out.push_back(project_XG(random_band_limited(b, rng, band), G));
  return out;
}

} // namespace cryamabe
