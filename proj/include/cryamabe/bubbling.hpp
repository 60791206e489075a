#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "energy.hpp"

namespace cryamabe {

//------------------------------------------------------------------------------
// Cutoff: 1 on B_{1/4}(center), 0 outside B_1(center), quintic smoothstep in the
// squared sphere distance in between.

struct CutoffSpec {
  SpherePoint center;
  double r_inner = 0.25;
  double r_outer = 1.0;

  double value(const SpherePoint &s) const {
    const double d = sphere_dist(s, center);
    const double a = r_inner * r_inner, b = r_outer * r_outer;
    return 1.0 - smoothstep5((d * d - a) / (b - a));
  }
  double operator()(const SpherePoint &s) const { return value(s); }
};

inline CutoffSpec make_cutoff(const SpherePoint &center) { return CutoffSpec{center, 0.25, 1.0}; }

//------------------------------------------------------------------------------
// Bubble charts and Palais-Smale sequence specs.

struct BubbleProfile {
  BubbleParams params;    // U = amplitude * omega_{lambda,xi}
  double amplitude = 1.0; // 1 gives a solution; anything else is a non-solution control

  double operator()(const HeisPoint &p, const YamabeConstants &c) const {
    return amplitude * bubble_eval(params, p, c);
  }
};

inline std::vector<double> default_ladder() { return {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}; }

struct BubbleChart {
  SpherePoint center;                               // limit center zeta^l (cutoff center)
  std::function<SpherePoint(int)> center_seq;       // zeta_n; constant when empty
  std::vector<double> radius_seq = default_ladder(); // R_n
  BubbleProfile profile;
  CutoffSpec cutoff;

  BubbleChart() = default;
  BubbleChart(const SpherePoint &zeta, std::vector<double> radii, BubbleProfile prof = {})
      : center(zeta), radius_seq(std::move(radii)), profile(prof), cutoff(make_cutoff(zeta)) {
    validate();
  }

  void validate() const {
    require(!radius_seq.empty(), "BubbleChart: empty radius sequence");
    for (std::size_t i = 0; i < radius_seq.size(); ++i) {
      require(radius_seq[i] > 0.0, "BubbleChart: radii must be positive");
      if (i > 0)
        require(radius_seq[i] < radius_seq[i - 1], "BubbleChart: radii must strictly decrease");
    }
  }

  SpherePoint center_at(int n) const { return center_seq ? center_seq(n) : center; }

  // rho_n = C o tau_{w_n} o delta_{R_n} with w_n = C^{-1}(zeta_n).
  ConformalChart chart(int n) const {
    require(n >= 0 && n < static_cast<int>(radius_seq.size()), "BubbleChart: index out of range");
    return ConformalChart(cayley_inv(center_at(n)), radius_seq[n]);
  }
};

struct PSSequenceSpec {
  SpectralFunction u_infty;
  std::vector<BubbleChart> bubbles;

  int length() const {
    int n = bubbles.empty() ? 1 : static_cast<int>(bubbles.front().radius_seq.size());
    for (const auto &b : bubbles)
      n = std::min(n, static_cast<int>(b.radius_seq.size()));
    return n;
  }

  void validate() const {
    for (std::size_t a = 0; a < bubbles.size(); ++a)
      for (std::size_t b = a + 1; b < bubbles.size(); ++b)
        require(sphere_dist(bubbles[a].center, bubbles[b].center) > 1e-6,
                "PSSequenceSpec: bubble limits must be distinct");
  }
};

// Chart pullback of the cut bubble: V(w) = beta(rho(w)) U(w).
inline double cut_profile(const BubbleChart &b, const ConformalChart &ch, const HeisPoint &w,
                          const YamabeConstants &c) {
  const double beta = b.cutoff(ch.map(w));
  return beta == 0.0 ? 0.0 : beta * b.profile(w, c);
}

// v_n(zeta) = Lambda_sigma^{(Q-2k)/2Q} beta U(sigma(zeta)).
inline double vn_value(const BubbleChart &b, int n, const SpherePoint &s, const YamabeConstants &c) {
  const double beta = b.cutoff(s);
  if (beta == 0.0)
    return 0.0;
  const ConformalChart ch = b.chart(n);
  const HeisPoint w = ch.inverse(s);
  return std::pow(ch.jacobian(w), -pullback_exponent(c.N, c.k)) * beta * b.profile(w, c);
}

inline SpectralFunction synthesize_vn(const BubbleChart &b, int n, const YamabeConstants &c,
                                      const SpectralTransform &T) {
  return T.analyze([&](const SpherePoint &s) { return vn_value(b, n, s, c); });
}

inline SpectralFunction ps_term(const PSSequenceSpec &spec, int n, const YamabeConstants &c,
                                const SpectralTransform &T) {
  SpectralFunction u = spec.u_infty;
  for (const auto &b : spec.bubbles)
    u += synthesize_vn(b, n, c, T);
  return u;
}

//------------------------------------------------------------------------------
// Multiscale evaluation of u_n = u_infty + sum v_n^l (k = 1).
//
// The sphere is covered by chart quadratures: with one bubble a single
// whole-space polar rule in the chart of that bubble; with several, smooth caps
// around each center (partition of unity) plus a background sphere rule for the
// uncovered part. Pointwise A_2 of a cut bubble comes from the chart identity
//   A_2 v (zeta) = Lambda_rho^{-3/4} (-Delta_b V)(sigma(zeta)).

struct SphereNode {
  SpherePoint zeta;
  double weight = 0.0; // dv_S weight, partition factor included
  int chart = -1;      // -1: background rule
  HeisPoint w;         // chart coordinates (if chart >= 0)
};

struct NodeValues {
  std::vector<double> u, Au;     // u_n and A_2 u_n
  std::vector<double> uinf, Auinf;
  std::vector<double> v, Av;     // sum of cut bubbles
};

struct PSMetrics {
  int n = 0;
  double R = 0.0;
  double energy = 0.0;          // E(u_n)
  double energy_infty = 0.0;    // E(u_infty) on the same nodes
  double gap = 0.0;             // E(u_n) - E(u_infty)
  double gap_error = 0.0;       // |gap - m C_E| / C_E
  double lp_n = 0.0;            // int |u_n|^{p*}
  double lp_infty = 0.0;
  double mass_defect = 0.0;     // lp_n - lp_infty - m * bubble mass
  double norm_Hk = 0.0;         // ||u_n||_{H^k}
  double splitting = 0.0;       // E(u_n - u_infty) - (E(u_n) - E(u_infty))
  double residual_upper = 0.0;  // sqrt(C_S) ||dE(u_n)||_{L^{p_bar}} >= ||dE(u_n)||_{H^{-k}}
  double residual_lower = 0.0;  // |<dE(u_n), v_n>| / ||v_n||_{H^k} <= ||dE(u_n)||_{H^{-k}}
  std::vector<double> ball_masses; // int_{B_{1/4}(zeta^l)} |u_n|^{p*}
  long nodes = 0;
};

struct MultiscaleOptions {
  PolarOptions polar{-10.0, 10.0, 0, 8, 32, 24}; // panels = 0: two per unit of ln r
  double fd_step = 1e-3;
  double cap_inner2 = 2.9; // squared sphere radius of the cap core
  double cap_outer2 = 3.5; // squared sphere radius of the cap support
  int background_degree = 24;
};

class PSSequenceLab {
public:
  PSSequenceLab(PSSequenceSpec spec, YamabeConstants c, MultiscaleOptions opt = {})
      : spec_(std::move(spec)), c_(c), opt_(opt) {
    require(std::abs(c_.k - 1.0) < 1e-12, "PSSequenceLab: the multiscale route needs k = 1");
    require(spec_.u_infty.basis != nullptr, "PSSequenceLab: u_infty needs a basis");
    spec_.validate();
    for (const auto &b : spec_.bubbles)
      b.validate();
    Auinf_ = apply_A2k(spec_.u_infty, c_.k);
    for (int i = 0; i < spec_.u_infty.basis->size(); ++i)
      if (spec_.u_infty.c[i] != 0.0)
        support_.push_back(i);
  }

  const PSSequenceSpec &spec() const { return spec_; }
  const YamabeConstants &constants() const { return c_; }

  std::vector<SphereNode> nodes(int n) const {
    std::vector<SphereNode> out;
    const int m = static_cast<int>(spec_.bubbles.size());
    if (m == 0) {
      append_background(out, {});
      return out;
    }
    std::vector<ConformalChart> charts;
    for (const auto &b : spec_.bubbles)
      charts.push_back(b.chart(n));
    for (int l = 0; l < m; ++l) {
      PolarOptions po = opt_.polar;
      po.s_max = opt_.polar.s_max + std::log(1.0 / charts[l].R);
      if (po.panels <= 0)
        po.panels = static_cast<int>(std::ceil(2.0 * (po.s_max - po.s_min)));
      const HeisQuadrature q = polar_quadrature(HeisPoint::origin(c_.N), po);
      const double kappa = HaarMeasure::calibrated(c_.N).kappa;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        SphereNode nd;
        nd.w = q.nodes[i];
        nd.zeta = charts[l].map(nd.w);
        double chi = 1.0;
        if (m > 1)
          chi = partition(l, nd.zeta);
        if (chi == 0.0)
          continue;
        nd.weight = chi * kappa * q.weights[i] * charts[l].jacobian(nd.w);
        nd.chart = l;
        out.push_back(nd);
      }
    }
    if (m > 1)
      append_background(out, charts);
    return out;
  }

  NodeValues values(int n, const std::vector<SphereNode> &nodes) const {
    const long cnt = static_cast<long>(nodes.size());
    NodeValues v;
    v.u.resize(cnt);
    v.Au.resize(cnt);
    v.uinf.resize(cnt);
    v.Auinf.resize(cnt);
    v.v.resize(cnt);
    v.Av.resize(cnt);
    std::vector<ConformalChart> charts;
    for (const auto &b : spec_.bubbles)
      charts.push_back(b.chart(n));
    parallel_for(cnt, [&](long i) {
      const SphereNode &nd = nodes[i];
      double ui = 0.0, Aui = 0.0;
      for (int idx : support_) {
        const double y = spec_.u_infty.basis->eval(idx, nd.zeta);
        ui += spec_.u_infty.c[idx] * y;
        Aui += Auinf_.c[idx] * y;
      }
      double vs = 0.0, Avs = 0.0;
      for (std::size_t l = 0; l < spec_.bubbles.size(); ++l) {
        const BubbleChart &b = spec_.bubbles[l];
        HeisPoint w;
        if (nd.chart == static_cast<int>(l)) {
          w = nd.w;
        } else {
          if (sphere_dist(nd.zeta, b.cutoff.center) > 1.05 * b.cutoff.r_outer)
            continue;
          w = charts[l].inverse(nd.zeta);
        }
        const ConformalChart &ch = charts[l];
        auto V = [&](const HeisPoint &p) { return cut_profile(b, ch, p, c_); };
        const double J = ch.jacobian(w);
        const double h = opt_.fd_step * std::max(1.0, koranyi_gauge(w));
        vs += std::pow(J, -0.25) * V(w);
        Avs += std::pow(J, -0.75) * (-sub_laplacian(V, w, h, 4));
      }
      v.uinf[i] = ui;
      v.Auinf[i] = Aui;
      v.v[i] = vs;
      v.Av[i] = Avs;
      v.u[i] = ui + vs;
      v.Au[i] = Aui + Avs;
    });
    return v;
  }

  PSMetrics metrics(int n) const {
    const std::vector<SphereNode> nd = nodes(n);
    const NodeValues v = values(n, nd);
    PSMetrics r;
    r.n = n;
    r.R = spec_.bubbles.empty() ? 0.0 : spec_.bubbles.front().radius_seq[n];
    r.nodes = static_cast<long>(nd.size());
    const double p = c_.p_star, pb = c_.p_bar();
    double e_n = 0, e_i = 0, e_v = 0, lp_n = 0, lp_i = 0, q_n = 0, g_pb = 0, g_v = 0, q_v = 0;
    r.ball_masses.assign(spec_.bubbles.size(), 0.0);
    for (std::size_t i = 0; i < nd.size(); ++i) {
      const double w = nd[i].weight;
      const double an = std::pow(std::abs(v.u[i]), p);
      const double ai = std::pow(std::abs(v.uinf[i]), p);
      const double av = std::pow(std::abs(v.v[i]), p);
      e_n += w * (0.5 * v.u[i] * v.Au[i] - an / p);
      e_i += w * (0.5 * v.uinf[i] * v.Auinf[i] - ai / p);
      e_v += w * (0.5 * v.v[i] * v.Av[i] - av / p);
      lp_n += w * an;
      lp_i += w * ai;
      q_n += w * v.u[i] * v.Au[i];
      const double g = v.Au[i] - std::pow(std::abs(v.u[i]), p - 2.0) * v.u[i];
      g_pb += w * std::pow(std::abs(g), pb);
      g_v += w * g * v.v[i];
      q_v += w * v.v[i] * v.Av[i];
      for (std::size_t l = 0; l < spec_.bubbles.size(); ++l)
        if (sphere_dist(nd[i].zeta, spec_.bubbles[l].center_at(n)) < 0.25)
          r.ball_masses[l] += w * an;
    }
    const double m = static_cast<double>(spec_.bubbles.size());
    r.energy = e_n;
    r.energy_infty = e_i;
    r.gap = e_n - e_i;
    r.gap_error = std::abs(r.gap - m * c_.C_E) / c_.C_E;
    r.lp_n = lp_n;
    r.lp_infty = lp_i;
    r.mass_defect = lp_n - lp_i - m * c_.bubble_mass();
    r.norm_Hk = std::sqrt(std::max(0.0, q_n));
    r.splitting = e_v - (e_n - e_i);
    r.residual_upper = std::sqrt(c_.C_S) * std::pow(g_pb, 1.0 / pb);
    r.residual_lower = q_v > 0.0 ? std::abs(g_v) / std::sqrt(q_v) : 0.0;
    return r;
  }

private:
  double cap(int l, const SpherePoint &s) const {
    const double d = sphere_dist(s, spec_.bubbles[l].center);
    return 1.0 - smoothstep5((d * d - opt_.cap_inner2) / (opt_.cap_outer2 - opt_.cap_inner2));
  }

  // chi_l = phi_l / max(1, sum phi); the background carries 1 - sum chi.
  double partition(int l, const SpherePoint &s) const {
    const double own = cap(l, s);
    if (own == 0.0)
      return 0.0;
    double sum = 0.0;
    for (std::size_t q = 0; q < spec_.bubbles.size(); ++q)
      sum += cap(static_cast<int>(q), s);
    return own / std::max(1.0, sum);
  }

  void append_background(std::vector<SphereNode> &out, const std::vector<ConformalChart> &charts) const {
    const QuadPtr q = make_sphere_quadrature(c_.N, opt_.background_degree, c_.total_mass);
    for (long i = 0; i < q->size(); ++i) {
      double covered = 0.0;
      if (!charts.empty()) {
        double sum = 0.0;
        for (std::size_t l = 0; l < charts.size(); ++l)
          sum += cap(static_cast<int>(l), q->nodes[i]);
        covered = std::min(1.0, sum);
      }
      if (covered >= 1.0)
        continue;
      SphereNode nd;
      nd.zeta = q->nodes[i];
      nd.weight = (1.0 - covered) * q->weights[i];
      out.push_back(nd);
    }
  }

  PSSequenceSpec spec_;
  YamabeConstants c_;
  MultiscaleOptions opt_;
  SpectralFunction Auinf_;
  std::vector<int> support_;
};

//------------------------------------------------------------------------------
// Concentration.

// Quasi-uniform grid: squared moduli on a stratified simplex grid, equispaced
// phases (N = 1, per_axis = 8 gives 512 points).
inline std::vector<SpherePoint> center_grid(int N, int per_axis = 8) {
  check_dimension(N);
  std::vector<SpherePoint> g;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<int> rad(N, 0);
  std::vector<int> ph(N + 1, 0);
  std::function<void(int, double)> rec_r;
  std::vector<std::array<double, kMaxN + 1>> rhos;
  std::array<double, kMaxN + 1> rho{};
  // stick-breaking on stratified uniforms keeps the moduli uniform on the simplex
  rec_r = [&](int k, double rest) {
    if (k == N) {
      rho[N] = rest;
      rhos.push_back(rho);
      return;
    }
    for (int i = 0; i < per_axis; ++i) {
      const double u = (i + 0.5) / per_axis;
      const double f = 1.0 - std::pow(1.0 - u, 1.0 / (N - k));
      rho[k] = rest * f;
      rec_r(k + 1, rest * (1.0 - f));
    }
  };
  rec_r(0, 1.0);
  long phase_count = 1;
  for (int k = 0; k <= N; ++k)
    phase_count *= per_axis;
  for (const auto &r : rhos)
    for (long q = 0; q < phase_count; ++q) {
      std::array<cplx, kMaxN + 1> z{};
      long rem = q;
      for (int k = N; k >= 0; --k) {
        const int m = static_cast<int>(rem % per_axis);
        rem /= per_axis;
        z[k] = std::polar(std::sqrt(r[k]), two_pi * (m + 0.5 * (k % 2)) / per_axis);
      }
      g.push_back(SpherePoint::from(N, z, true));
    }
  return g;
}

struct ConcentrationResult {
  double value = 0.0;
  SpherePoint argmax;
};

// Q(r) = max over centers of int_{B_r(center)} |u|^{p*} dv_S, on weighted nodes.
inline ConcentrationResult concentration_function(const std::vector<SpherePoint> &nodes,
                                                  const std::vector<double> &weights,
                                                  const std::vector<double> &values, double p, double r,
                                                  const std::vector<SpherePoint> &centers) {
  require(r > 0.0, "concentration_function: r must be positive");
  require(!centers.empty(), "concentration_function: empty center grid");
  std::vector<double> mass(centers.size(), 0.0);
  std::vector<double> a(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    a[i] = weights[i] * std::pow(std::abs(values[i]), p);
  parallel_for(static_cast<long>(centers.size()), [&](long c) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (a[i] != 0.0 && sphere_dist(nodes[i], centers[c]) < r)
        s += a[i];
    mass[c] = s;
  });
  ConcentrationResult res;
  std::size_t best = 0;
  for (std::size_t c = 1; c < centers.size(); ++c)
    if (mass[c] > mass[best])
      best = c;
  res.value = mass[best];
  res.argmax = centers[best];
  return res;
}

inline ConcentrationResult concentration_function(const SpectralFunction &u, const YamabeFunctional &E,
                                                  double r, const std::vector<SpherePoint> &centers) {
  const auto &q = E.transform().quadrature();
  return concentration_function(q.nodes, q.weights, E.transform().synthesize_nodes(u), E.constants().p_star,
                                r, centers);
}

// Grid centers whose small-ball p*-mass stays >= eps0 for every r and n, merged
// into clusters (points closer than twice the largest radius); one representative
// per cluster.
inline std::vector<SpherePoint> detect_concentration(const PSSequenceLab &lab, double eps0,
                                                     const std::vector<double> &r_list,
                                                     const std::vector<int> &n_list,
                                                     std::vector<SpherePoint> centers = {}) {
  require(!r_list.empty() && !n_list.empty(), "detect_concentration: empty ladders");
  const int N = lab.constants().N;
  if (centers.empty())
    centers = center_grid(N);
  for (const auto &b : lab.spec().bubbles)
    centers.push_back(b.center);
  std::vector<double> minmass(centers.size(), std::numeric_limits<double>::infinity());
  for (int n : n_list) {
    const auto nd = lab.nodes(n);
    const auto v = lab.values(n, nd);
    std::vector<double> a(nd.size());
    for (std::size_t i = 0; i < nd.size(); ++i)
      a[i] = nd[i].weight * std::pow(std::abs(v.u[i]), lab.constants().p_star);
    for (double r : r_list) {
      parallel_for(static_cast<long>(centers.size()), [&](long c) {
        double s = 0.0;
        for (std::size_t i = 0; i < nd.size(); ++i)
          if (a[i] != 0.0 && sphere_dist(nd[i].zeta, centers[c]) < r)
            s += a[i];
        minmass[c] = std::min(minmass[c], s);
      });
    }
  }
  const double rmax = *std::max_element(r_list.begin(), r_list.end());
  std::vector<int> order(centers.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return minmass[a] > minmass[b]; });
  std::vector<SpherePoint> reps;
  for (int i : order) {
    if (minmass[i] < eps0)
      break;
    bool near = false;
    for (const auto &r : reps)
      if (sphere_dist(r, centers[i]) < 2.0 * rmax)
        near = true;
    if (!near)
      reps.push_back(centers[i]);
  }
  return reps;
}

//------------------------------------------------------------------------------
// Gradient decay along the ladder.

struct GradientDecayReport {
  std::vector<PSMetrics> rows;
  double decay_factor = 0.0; // first / last upper residual
  bool monotone = true;      // each rung <= 1.1 x previous
  bool decays = false;       // decay_factor >= 10
};

inline GradientDecayReport gradient_decay_check(const PSSequenceLab &lab, const std::vector<int> &n_list) {
  GradientDecayReport rep;
  for (int n : n_list)
    rep.rows.push_back(lab.metrics(n));
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].residual_upper > 1.1 * rep.rows[i - 1].residual_upper)
      rep.monotone = false;
  if (!rep.rows.empty() && rep.rows.back().residual_upper > 0.0)
    rep.decay_factor = rep.rows.front().residual_upper / rep.rows.back().residual_upper;
  rep.decays = rep.decay_factor >= 10.0;
  return rep;
}

//------------------------------------------------------------------------------
// Sub-critical threshold: H^k-preconditioned gradient flow
//   u <- u - tau A_2k^{-1} dE(u)
// with Armijo backtracking on E.

struct FlowReport {
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double final_norm = 0.0;
  double final_residual = 0.0;
  int iterations = 0;
  bool converged_to_zero = false;
  bool diverged = false;
  std::vector<double> norm_history;
};

inline FlowReport subcritical_flow(const YamabeFunctional &E, SpectralFunction u, int max_iter = 200,
                                   double tol = 1e-4) {
  FlowReport rep;
  const double k = E.constants().k;
  rep.initial_energy = E.energy(u);
  double e = rep.initial_energy;
  for (int it = 0; it < max_iter; ++it) {
    const SpectralFunction g = E.gradient(u);
    const SpectralFunction d = apply_A2k_inverse(g, k);
    const double slope = pairing(g, d); // = ||dE||_{H^{-k}}^2
    rep.norm_history.push_back(norm_Hk(u, k));
    rep.final_residual = std::sqrt(std::max(0.0, slope));
    if (rep.norm_history.back() < tol || rep.final_residual < 1e-14) {
      rep.iterations = it;
      break;
    }
    double tau = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      SpectralFunction trial = u;
      for (std::size_t i = 0; i < trial.c.size(); ++i)
        trial.c[i] -= tau * d.c[i];
      const double et = E.energy(trial);
      if (std::isfinite(et) && et <= e - 1e-4 * tau * slope) {
        u = std::move(trial);
        e = et;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    rep.iterations = it + 1;
    if (!accepted) {
      rep.diverged = !std::isfinite(e);
      break;
    }
  }
  rep.final_energy = e;
  rep.final_norm = norm_Hk(u, k);
  rep.converged_to_zero = rep.final_norm < tol;
  return rep;
}

// Scale t phi so that t stays below the Nehari value and E(t phi) <= fraction * C_E.
inline SpectralFunction subcritical_seed(const YamabeFunctional &E, const SpectralFunction &phi,
                                         double fraction = 0.85) {
  const SpectralFunction on = E.nehari_rescale(phi);
  const double tn = on.norm_L2() / phi.norm_L2();
  const double target = fraction * E.constants().C_E;
  auto energy_at = [&](double t) {
    SpectralFunction f = phi;
    f *= t;
    return E.energy(f);
  };
  double lo = 0.0, hi = tn;
  if (energy_at(hi) <= target) {
    hi *= 0.95; // stay strictly inside the Nehari region
  } else {
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      (energy_at(mid) <= target ? lo : hi) = mid;
    }
    hi = lo;
  }
  SpectralFunction f = phi;
  f *= hi;
  return f;
}

//------------------------------------------------------------------------------
// Three-commutator H(u,v) = L(uv) - u L v - v L u for L = -Delta_b (k = 1).

template <class U, class V>
double three_commutator(const U &u, const V &v, double k, const HeisPoint &p, double h = 1e-3) {
  require(std::abs(k - 1.0) < 1e-12, "three_commutator: pointwise route needs k = 1");
  auto uv = [&](const HeisPoint &q) { return u(q) * v(q); };
  const double L_uv = -sub_laplacian(uv, p, h, 4);
  const double L_v = -sub_laplacian(v, p, h, 4);
  const double L_u = -sub_laplacian(u, p, h, 4);
  return L_uv - u(p) * L_v - v(p) * L_u;
}

// Closed form for k = 1: -1/2 sum_j (X_j u X_j v + Y_j u Y_j v).
template <class U, class V>
double three_commutator_closed(const U &u, const V &v, const HeisPoint &p, double h = 1e-3) {
  const auto gu = horizontal_gradient(u, p, h, 4);
  const auto gv = horizontal_gradient(v, p, h, 4);
  double s = 0.0;
  for (int i = 0; i < 2 * p.N; ++i)
    s += gu[i] * gv[i];
  return -0.5 * s;
}

} // namespace cryamabe
