#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cayley.hpp"
#include "heisenberg.hpp"
#include "spectral.hpp"

namespace cryamabe {

inline void check_order(int N, double k) {
  check_dimension(N);
  const int Q = homogeneous_dimension(N);
  require(k > 0.0 && 2.0 * k < Q, "order k must satisfy 0 < 2k < Q");
}

inline double p_star(int N, double k) {
  check_order(N, k);
  const double Q = homogeneous_dimension(N);
  return 2.0 * Q / (Q - 2.0 * k);
}

// C_S = lambda_0(k)^{-2} mass^{-2k/Q}.
inline double sobolev_constant(int N, double k, double mass = 0.0) {
  check_order(N, k);
  const int Q = homogeneous_dimension(N);
  const double m = mass > 0.0 ? mass : default_sphere_mass(N);
  const double l0 = lambda_jk(0, k, Q);
  return std::pow(m, -2.0 * k / Q) / (l0 * l0);
}

// Gamma((N+1-k)/2)^2 / Gamma((N+1+k)/2)^2 * (omega 2^{2N+1} N!)^{-2k/Q} with omega the
// Euclidean area of S^{2N+1}.
inline double sobolev_constant_gamma_form(int N, double k) {
  check_order(N, k);
  const double Q = homogeneous_dimension(N);
  const double omega = 2.0 * std::pow(std::numbers::pi, N + 1) / std::tgamma(N + 1.0);
  const double g = std::exp(std::lgamma((N + 1 - k) / 2.0) - std::lgamma((N + 1 + k) / 2.0));
  return g * g * std::pow(omega * std::ldexp(1.0, 2 * N + 1) * std::tgamma(N + 1.0), -2.0 * k / Q);
}

inline double constant_solution(int N, double k) {
  check_order(N, k);
  const int Q = homogeneous_dimension(N);
  return std::pow(lambda_jk(0, k, Q), (Q - 2.0 * k) / (2.0 * k));
}

struct YamabeConstants {
  int N = 1;
  double k = 1.0;
  int Q = 4;
  double p_star = 4.0;
  double lambda0 = 0.5;
  double total_mass = 0.0;
  double C_S = 0.0;
  double C_E = 0.0;
  double u0 = 0.0;
  double cQ = 0.0;

  static YamabeConstants make(int N, double k, double mass = 0.0) {
    check_order(N, k);
    YamabeConstants c;
    c.N = N;
    c.k = k;
    c.Q = homogeneous_dimension(N);
    c.p_star = cryamabe::p_star(N, k);
    c.lambda0 = lambda_jk(0, k, c.Q);
    c.total_mass = mass > 0.0 ? mass : default_sphere_mass(N);
    c.C_S = sobolev_constant(N, k, c.total_mass);
    c.C_E = (k / c.Q) * std::pow(c.C_S, -c.Q / (2.0 * k));
    c.u0 = constant_solution(N, k);
    c.cQ = std::pow(2.0, (c.Q - 2.0 * k) / 2.0) * c.u0;
    return c;
  }

  // Dual exponent of p*: 2Q/(Q+2k).
  double p_bar() const { return 2.0 * Q / (Q + 2.0 * k); }
  // Integral of the bubble's p*-th power: (Q/k) C_E.
  double bubble_mass() const { return C_E * Q / k; }
};

struct BubbleParams {
  double lambda = 1.0;
  HeisPoint xi;

  BubbleParams() = default;
  BubbleParams(double l, const HeisPoint &x) : lambda(l), xi(x) {
    require(l > 0.0 && std::isfinite(l), "BubbleParams: lambda must be positive");
  }
};

// omega(z,t) = cQ / ((1+|z|^2)^2 + t^2)^{(Q-2k)/4}
inline double bubble_standard(const HeisPoint &p, const YamabeConstants &c) {
  const double a = 1.0 + p.z_norm2();
  return c.cQ * std::pow(a * a + p.t * p.t, -(c.Q - 2.0 * c.k) / 4.0);
}

// omega_{lambda,xi} = lambda^{(2k-Q)/2} omega o delta_{1/lambda} o tau_{xi^{-1}}
inline double bubble_eval(const BubbleParams &b, const HeisPoint &p, const YamabeConstants &c) {
  const HeisPoint w = dilate(1.0 / b.lambda, group_mul(group_inv(b.xi), p));
  return std::pow(b.lambda, (2.0 * c.k - c.Q) / 2.0) * bubble_standard(w, c);
}

// Spectral coefficients of the constant function `value`.
inline SpectralFunction constant_function(BasisPtr b, double value) {
  SpectralFunction f(b);
  f.at(0, 0, 0) = value * std::sqrt(b->total_mass);
  return f;
}

//------------------------------------------------------------------------------
// E(u) = 1/2 <A_2k u, u> - 1/p* int |u|^{p*} dv_S on a spectral transform.

class YamabeFunctional {
public:
  YamabeFunctional(TransformPtr T, YamabeConstants c) : T_(std::move(T)), c_(c) {
    require(T_->basis().N == c_.N, "YamabeFunctional: dimension mismatch");
  }

  const YamabeConstants &constants() const { return c_; }
  const SpectralTransform &transform() const { return *T_; }
  TransformPtr transform_ptr() const { return T_; }
  BasisPtr basis() const { return T_->basis_ptr(); }

  double lp_integral(const std::vector<double> &vals) const {
    double s = 0.0;
    const auto &w = T_->quadrature().weights;
    for (std::size_t i = 0; i < vals.size(); ++i)
      s += w[i] * std::pow(std::abs(vals[i]), c_.p_star);
    return s;
  }

  double lp_integral(const SpectralFunction &u) const { return lp_integral(T_->synthesize_nodes(u)); }

  double quadratic(const SpectralFunction &u) const { return pairing(apply_A2k(u, c_.k), u); }

  double energy(const SpectralFunction &u) const {
    return 0.5 * quadratic(u) - lp_integral(u) / c_.p_star;
  }

  // Coefficients of |u|^{p*-2} u.
  SpectralFunction nonlinearity(const SpectralFunction &u) const {
    std::vector<double> v = T_->synthesize_nodes(u);
    for (double &x : v)
      x = std::pow(std::abs(x), c_.p_star - 2.0) * x;
    return T_->analyze_nodes(v);
  }

  // dE(u) = A_2k u - |u|^{p*-2} u (Riesz representative in L^2 coefficients).
  SpectralFunction gradient(const SpectralFunction &u) const {
    return apply_A2k(u, c_.k) - nonlinearity(u);
  }

  double residual(const SpectralFunction &u) const { return norm_H_minus_k(gradient(u), c_.k); }

  double sobolev_quotient(const SpectralFunction &u) const {
    const double q = quadratic(u);
    require(q > 0.0, "sobolev_quotient: zero input");
    return std::pow(lp_integral(u), 2.0 / c_.p_star) / q;
  }

  // t u with ||t u||_{H^k}^2 = int |t u|^{p*}.
  SpectralFunction nehari_rescale(const SpectralFunction &u) const {
    const double q = quadratic(u);
    const double m = lp_integral(u);
    require(q > 0.0 && m > 0.0, "nehari_rescale: zero input");
    SpectralFunction r = u;
    r *= std::pow(q / m, 1.0 / (c_.p_star - 2.0));
    return r;
  }

private:
  TransformPtr T_;
  YamabeConstants c_;
};

//------------------------------------------------------------------------------
// E_H on the Heisenberg group.

struct HeisEnergyOptions {
  HeisPoint center;   // polar rule centered here
  double scale = 1.0; // characteristic length of U
  PolarOptions polar{};
  double step = 1e-3;         // relative finite-difference step
  double tail_tolerance = 1e-3; // outermost-panel share of the p*-mass that flags divergence
  // for k != 1: sphere transform used after transport (required then)
  TransformPtr transform;
};

struct HeisEnergyReport {
  double energy = 0.0;
  double quadratic = 0.0;  // int U L_2k U dv_H
  double lp = 0.0;         // int |U|^{p*} dv_H
  double tail_share = 0.0; // share of lp from the outermost panel
};

template <class F>
HeisEnergyReport energy_heis(const F &U, const YamabeConstants &c, const HeisEnergyOptions &opt) {
  HeisEnergyReport rep;
  if (std::abs(c.k - 1.0) > 1e-12) {
    // transport through the plain Cayley chart and evaluate on the sphere
    require(opt.transform != nullptr, "energy_heis: general k needs a sphere transform");
    const ConformalChart chart(HeisPoint::origin(c.N), 1.0);
    const double e = pullback_exponent(c.N, c.k);
    auto u = [&](const SpherePoint &s) {
      if (distance_to_pole(s) < kPoleTolerance)
        return 0.0;
      const HeisPoint w = chart.inverse(s);
      return std::pow(chart.jacobian(w), -e) * U(w);
    };
    const SpectralFunction f = opt.transform->analyze(u);
    YamabeFunctional E(opt.transform, c);
    rep.quadratic = E.quadratic(f);
    rep.lp = E.lp_integral(f);
    rep.energy = 0.5 * rep.quadratic - rep.lp / c.p_star;
    rep.tail_share = f.tail_energy();
    return rep;
  }
  PolarOptions po = opt.polar;
  const double ls = std::log(opt.scale);
  po.s_min += ls;
  po.s_max += ls;
  const HeisQuadrature q = polar_quadrature(opt.center, po);
  const HaarMeasure mu = HaarMeasure::calibrated(c.N);
  const long n = static_cast<long>(q.nodes.size());
  std::vector<double> quad(n), lp(n);
  const HeisPoint ci = group_inv(opt.center);
  parallel_for(n, [&](long i) {
    const HeisPoint &p = q.nodes[i];
    const double rel = koranyi_gauge(group_mul(ci, p)) / opt.scale;
    const double h = opt.step * opt.scale * std::max(1.0, rel);
    const double u = U(p);
    quad[i] = q.weights[i] * u * (-sub_laplacian(U, p, h, 4));
    lp[i] = q.weights[i] * std::pow(std::abs(u), c.p_star);
  });
  double sq = 0.0, sl = 0.0, tail = 0.0;
  const long per_panel = n / po.panels;
  for (long i = 0; i < n; ++i) {
    sq += quad[i];
    sl += lp[i];
    if (i >= n - per_panel)
      tail += lp[i];
  }
  rep.quadratic = mu.kappa * sq;
  rep.lp = mu.kappa * sl;
  rep.tail_share = sl > 0.0 ? tail / sl : 0.0;
  if (!std::isfinite(rep.quadratic) || !std::isfinite(rep.lp) || rep.tail_share > opt.tail_tolerance)
    throw NonIntegrableError("energy_heis: integrand does not decay within the radial range");
  rep.energy = 0.5 * rep.quadratic - rep.lp / c.p_star;
  return rep;
}

inline HeisEnergyReport energy_heis_bubble(const BubbleParams &b, const YamabeConstants &c,
                                           TransformPtr transform = nullptr) {
  HeisEnergyOptions o;
  o.center = b.xi;
  o.scale = b.lambda;
  o.transform = std::move(transform);
  return energy_heis([&](const HeisPoint &p) { return bubble_eval(b, p, c); }, c, o);
}

// k = 1 pointwise residual of the bubble equation, relative to omega^{p*-1}.
inline double bubble_pde_residual(const BubbleParams &b, const HeisPoint &p, const YamabeConstants &c,
                                  double step = 1e-3) {
  require(std::abs(c.k - 1.0) < 1e-12, "bubble_pde_residual: k = 1 only");
  auto U = [&](const HeisPoint &q) { return bubble_eval(b, q, c); };
  const double rel = koranyi_gauge(dilate(1.0 / b.lambda, group_mul(group_inv(b.xi), p)));
  const double h = step * b.lambda * std::max(1.0, rel);
  const double w = U(p);
  const double rhs = std::pow(w, c.p_star - 1.0);
  return std::abs(-sub_laplacian(U, p, h, 4) - rhs) / rhs;
}

} // namespace cryamabe
