#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bubbling.hpp"
#include "io.hpp"
#include "minimax.hpp"
#include "riesz.hpp"

namespace cryamabe {

// Settings shared by all checks. `extra` holds per-check overrides keyed by the
// check name, e.g. {"riesz_suite": {"green_resolutions": [48, 64]}}.
struct RunConfig {
  int N = 1;
  double k = 1.0;
  int jmax = -1; // -1: the check's own default
  std::uint64_t seed = 20240611;
  double tol_scale = 1.0;
  std::filesystem::path out = "out";
  json extra = json::object();

  template <class T> T opt(const std::string &check, const std::string &key, T def) const {
    if (extra.contains(check) && extra[check].contains(key))
      return extra[check][key].get<T>();
    return def;
  }
  int band(int def) const { return jmax >= 0 ? jmax : def; }
  double tol(double t) const { return t * tol_scale; }

  void validate() const {
    check_order(N, k);
    require(tol_scale > 0.0 && std::isfinite(tol_scale), "RunConfig: tol-scale must be positive");
    require(jmax == -1 || (jmax >= 0 && jmax <= 24), "RunConfig: jmax must lie in [0, 24]");
  }
};

inline RunConfig config_from_json(const json &j) {
  RunConfig c;
  if (j.contains("N"))
    c.N = j["N"].get<int>();
  if (j.contains("k"))
    c.k = j["k"].get<double>();
  if (j.contains("jmax"))
    c.jmax = j["jmax"].get<int>();
  if (j.contains("seed"))
    c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tol_scale"))
    c.tol_scale = j["tol_scale"].get<double>();
  if (j.contains("out"))
    c.out = j["out"].get<std::string>();
  if (j.contains("checks"))
    c.extra = j["checks"];
  return c;
}

struct Assertion {
  std::string what;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
};

struct CheckResult {
  int id = 0; // criterion number, 0 for calibration runs
  std::string name;
  std::vector<Assertion> assertions;
  json metrics = json::object();
  std::vector<std::pair<std::string, CsvTable>> tables;
  double seconds = 0.0;

  bool passed() const {
    for (const auto &a : assertions)
      if (!a.passed)
        return false;
    return true;
  }
  // value <= bound
  void at_most(const std::string &what, double value, double bound) {
    assertions.push_back({what, value, bound, std::isfinite(value) && value <= bound});
  }
  // value >= bound
  void at_least(const std::string &what, double value, double bound) {
    assertions.push_back({what, value, bound, std::isfinite(value) && value >= bound});
  }
  void holds(const std::string &what, bool ok) { assertions.push_back({what, ok ? 1.0 : 0.0, 1.0, ok}); }

  json report() const {
    json a = json::array(), failures = json::array();
    for (const auto &x : assertions) {
      json e{{"what", x.what}, {"value", x.value}, {"bound", x.bound}, {"passed", x.passed}};
      a.push_back(e);
      if (!x.passed)
        failures.push_back(e);
    }
    return json{{"criterion", id},  {"name", name},         {"passed", passed()}, {"assertions", a},
                {"failures", failures}, {"metrics", metrics}, {"seconds", seconds}};
  }

  void write(const std::filesystem::path &dir) const {
    save_json(dir / (name + ".json"), report());
    for (const auto &[tag, t] : tables)
      t.save(dir / (name + "_" + tag + ".csv"));
  }
};

inline double max_abs(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

//------------------------------------------------------------------------------
// 1. Group and metric axioms.

inline CheckResult check_group(const RunConfig &cfg) {
  CheckResult r;
  r.id = 1;
  r.name = "group_metric";
  const long cases = cfg.opt<long>(r.name, "cases", 10000);
  const double box = cfg.opt<double>(r.name, "box", 2.0);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> L(0.1, 10.0);
  double assoc = 0, ident = 0, inv = 0, homog = 0, left = 0, symm = 0, tri = 0;
  auto diff = [](const HeisPoint &a, const HeisPoint &b) {
    double d = std::abs(a.t - b.t) / (1.0 + std::abs(a.t));
    for (int j = 0; j < a.N; ++j)
      d = std::max(d, std::abs(a.z[j] - b.z[j]) / (1.0 + std::abs(a.z[j])));
    return d;
  };
  for (long i = 0; i < cases; ++i) {
    const HeisPoint p = random_point(cfg.N, rng, box), q = random_point(cfg.N, rng, box),
                    s = random_point(cfg.N, rng, box);
    const double lam = L(rng);
    const HeisPoint e = HeisPoint::origin(cfg.N);
    assoc = std::max(assoc, diff(group_mul(group_mul(p, q), s), group_mul(p, group_mul(q, s))));
    ident = std::max({ident, diff(group_mul(p, e), p), diff(group_mul(e, p), p)});
    inv = std::max({inv, diff(group_mul(p, group_inv(p)), e), diff(group_mul(group_inv(p), p), e)});
    homog = std::max(homog, std::abs(koranyi_gauge(dilate(lam, p)) - lam * koranyi_gauge(p)) / (lam * koranyi_gauge(p)));
    const double dpq = koranyi_dist(p, q);
    left = std::max(left, std::abs(koranyi_dist(group_mul(s, p), group_mul(s, q)) - dpq) / (1.0 + dpq));
    symm = std::max(symm, std::abs(koranyi_dist(q, p) - dpq) / (1.0 + dpq));
    tri = std::max(tri, koranyi_dist(p, s) - koranyi_dist(p, q) - koranyi_dist(q, s));
  }
  r.metrics = {{"N", cfg.N},          {"cases", cases},       {"associativity", assoc}, {"identity", ident},
               {"inverse", inv},      {"gauge_homogeneity", homog}, {"left_invariance", left},
               {"symmetry", symm},    {"triangle_excess", tri}};
  const double tol = cfg.tol(1e-12);
  r.at_most("associativity error", assoc, tol);
  r.at_most("identity error", ident, tol);
  r.at_most("inverse error", inv, tol);
  r.at_most("gauge homogeneity error", homog, tol);
  r.at_most("left invariance error", left, tol);
  r.at_most("distance symmetry error", symm, tol);
  r.at_most("triangle inequality excess", tri, tol);
  CsvTable t({"quantity", "max_error"});
  for (const char *key : {"associativity", "identity", "inverse", "gauge_homogeneity", "left_invariance", "symmetry",
                          "triangle_excess"})
    t.row() << key << r.metrics[key].get<double>();
  r.tables.emplace_back("errors", std::move(t));
  return r;
}

//------------------------------------------------------------------------------
// 2. Differential A_2 against the spectral multiplier on every basis element.

inline CheckResult check_spectral(const RunConfig &cfg) {
  CheckResult r;
  r.id = 2;
  r.name = "spectral_eigen";
  const int L = cfg.band(6);
  const int points = cfg.opt<int>(r.name, "points", 8);
  const BasisPtr B = build_basis(cfg.N, L, L);
  const int Q = homogeneous_dimension(cfg.N);
  std::mt19937_64 rng(cfg.seed);
  std::vector<SpherePoint> pts;
  for (int i = 0; i < points; ++i)
    pts.push_back(random_sphere_point(cfg.N, rng));
  std::vector<double> err_exact(B->size()), err_fd(B->size());
  parallel_for(B->size(), [&](long i) {
    const Polynomial P = B->polynomial(static_cast<int>(i));
    const auto &bl = B->elements[i].block;
    const double lam = lambda_jk(bl.j, 1.0, Q) * lambda_jk(bl.l, 1.0, Q);
    SphereFunction f = [&](const SpherePoint &s) { return P(s).real(); };
    double scale = 0.0, e1 = 0.0, e2 = 0.0;
    for (const auto &s : pts)
      scale = std::max(scale, std::abs(lam * P(s).real()));
    scale = std::max(scale, 1e-300);
    for (const auto &s : pts) {
      const double ref = lam * P(s).real();
      e1 = std::max(e1, std::abs(apply_A2_differential(P, s) - ref) / scale);
      e2 = std::max(e2, std::abs(apply_A2_differential(f, s) - ref) / scale);
    }
    err_exact[i] = e1;
    err_fd[i] = e2;
  });
  // Gram matrix by the transform quadrature
  const TransformPtr T = make_transform(cfg.N, L);
  double gram = 0.0;
  {
    const auto &nodes = T->quadrature().nodes;
    const auto &w = T->quadrature().weights;
    const int n = B->size();
    std::vector<std::vector<double>> vals(n, std::vector<double>(nodes.size()));
    parallel_for(n, [&](long i) {
      for (std::size_t q = 0; q < nodes.size(); ++q)
        vals[i][q] = T->basis().eval(static_cast<int>(i), nodes[q]);
    });
    std::vector<double> row(n);
    parallel_for(n, [&](long i) {
      double m = 0.0;
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q)
          s += w[q] * vals[i][q] * vals[j][q];
        m = std::max(m, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
      row[i] = m;
    });
    gram = max_abs(row);
  }
  CsvTable t({"index", "j", "l", "part", "eigenvalue", "error_exact", "error_fd"});
  for (int i = 0; i < B->size(); ++i) {
    const auto &e = B->elements[i];
    t.row() << i << e.block.j << e.block.l << static_cast<int>(e.part)
            << lambda_jk(e.block.j, 1.0, Q) * lambda_jk(e.block.l, 1.0, Q) << err_exact[i] << err_fd[i];
  }
  r.tables.emplace_back("elements", std::move(t));
  r.metrics = {{"N", cfg.N},
               {"jmax", L},
               {"elements", B->size()},
               {"max_error_exact", max_abs(err_exact)},
               {"max_error_fd", max_abs(err_fd)},
               {"gram_error", gram}};
  r.at_most("A_2 eigen-consistency (relative)", max_abs(err_exact), cfg.tol(1e-6));
  r.at_most("basis orthonormality", gram, cfg.tol(1e-10));
  return r;
}

//------------------------------------------------------------------------------
// 3. Conformal covariance of A_2 under the Cayley map (k = 1).

inline CheckResult check_cayley(const RunConfig &cfg) {
  CheckResult r;
  r.id = 3;
  r.name = "conformal_covariance";
  const int L = cfg.band(4);
  const int funcs = cfg.opt<int>(r.name, "functions", 20);
  const int points = cfg.opt<int>(r.name, "points", 100);
  const double box = cfg.opt<double>(r.name, "box", 1.5);
  const TransformPtr T = make_transform(cfg.N, L);
  const int Q = homogeneous_dimension(cfg.N);
  const double e_in = (Q - 2.0) / (2.0 * Q), e_out = (Q + 2.0) / (2.0 * Q);
  std::mt19937_64 rng(cfg.seed);
  std::vector<SpectralFunction> us;
  std::vector<std::vector<HeisPoint>> ps(funcs);
  for (int f = 0; f < funcs; ++f) {
    us.push_back(random_band_limited(T->basis_ptr(), rng, L));
    for (int i = 0; i < points; ++i)
      ps[f].push_back(random_point(cfg.N, rng, box));
  }
  std::vector<double> errs(funcs);
  CsvTable t({"function", "max_relative_error"});
  parallel_for(funcs, [&](long f) {
    const SpectralFunction &u = us[f];
    const SpectralFunction Au = apply_A2k(u, 1.0);
    auto U = [&](const HeisPoint &q) { return std::pow(lambda_cayley(q), e_in) * synthesize(u, cayley(q)); };
    std::vector<double> lhs(points), rhs(points);
    for (int i = 0; i < points; ++i) {
      const HeisPoint &p = ps[f][i];
      lhs[i] = -sub_laplacian(U, p, 1e-3, 4);
      rhs[i] = std::pow(lambda_cayley(p), e_out) * synthesize(Au, cayley(p));
    }
    const double floor = 1e-3 * max_abs(rhs);
    double e = 0.0;
    for (int i = 0; i < points; ++i)
      e = std::max(e, std::abs(lhs[i] - rhs[i]) / std::max(std::abs(rhs[i]), floor));
    errs[f] = e;
  });
  for (int f = 0; f < funcs; ++f)
    t.row() << f << errs[f];
  r.tables.emplace_back("errors", std::move(t));
  // chart round trip and ball inclusion
  double round = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const HeisPoint p = random_point(cfg.N, rng, 3.0);
    const HeisPoint q = cayley_inv(cayley(p));
    // coordinate error: the gauge distance would square-root the t error
    double e = std::abs(p.t - q.t) / (1.0 + std::abs(p.t));
    for (int j = 0; j < cfg.N; ++j)
      e = std::max(e, std::abs(p.z[j] - q.z[j]) / (1.0 + std::abs(p.z[j])));
    round = std::max(round, e);
  }
  const InclusionReport inc = ball_inclusion_check(cfg.N, 2000, cfg.seed);
  r.metrics = {{"N", cfg.N},
               {"band", L},
               {"functions", funcs},
               {"points", points},
               {"max_relative_error", max_abs(errs)},
               {"round_trip_error", round},
               {"inclusion_violations", inc.violations},
               {"inclusion_worst_ratio", inc.worst_ratio}};
  r.at_most("covariance relative error", max_abs(errs), cfg.tol(1e-4));
  r.at_most("Cayley round trip", round, cfg.tol(1e-10));
  return r;
}

//------------------------------------------------------------------------------
// 4. Sharp constant.

inline CheckResult check_sharp_constant(const RunConfig &cfg) {
  CheckResult r;
  r.id = 4;
  r.name = "sharp_constant";
  const YamabeConstants c = YamabeConstants::make(cfg.N, cfg.k);
  const TransformPtr T = make_transform(cfg.N, cfg.band(4));
  const YamabeFunctional E(T, c);
  const SpectralFunction u0 = constant_function(T->basis_ptr(), 1.0);
  const double quotient = E.sobolev_quotient(u0);
  const double rel = std::abs(quotient - c.C_S) / c.C_S;
  r.at_most("Sobolev quotient of constants vs C_S", rel, cfg.tol(5e-3));
  CsvTable t({"N", "k", "C_S", "C_S_gamma_form", "identity_residual"});
  double worst = 0.0;
  for (auto [N, k] : std::vector<std::pair<int, double>>{{1, 1.0}, {1, 0.5}, {2, 1.0}}) {
    const YamabeConstants d = YamabeConstants::make(N, k);
    const double id = std::abs(d.C_S * d.lambda0 * d.lambda0 * std::pow(d.total_mass, 2.0 * k / d.Q) - 1.0);
    worst = std::max(worst, id);
    t.row() << N << k << d.C_S << sobolev_constant_gamma_form(N, k) << id;
  }
  r.at_most("C_S lambda_0^2 mass^{2k/Q} = 1", worst, cfg.tol(1e-12));
  // random band-limited functions stay below the sharp constant
  std::mt19937_64 rng(cfg.seed);
  double qmax = 0.0;
  for (int i = 0; i < cfg.opt<int>(r.name, "random_functions", 20); ++i)
    qmax = std::max(qmax, E.sobolev_quotient(random_band_limited(T->basis_ptr(), rng, -1)));
  r.at_most("random quotients / C_S", qmax / c.C_S, 1.0 + cfg.tol(1e-9));
  r.tables.emplace_back("constants", std::move(t));
  r.metrics = {{"N", cfg.N},         {"k", cfg.k},  {"C_S", c.C_S}, {"quotient", quotient}, {"relative_error", rel},
               {"identity_worst", worst}, {"max_random_quotient_ratio", qmax / c.C_S}};
  return r;
}

//------------------------------------------------------------------------------
// 5. Bubble solution.

inline CheckResult check_bubble(const RunConfig &cfg) {
  CheckResult r;
  r.id = 5;
  r.name = "bubble_solution";
  const YamabeConstants c = YamabeConstants::make(cfg.N, 1.0);
  const int points = cfg.opt<int>(r.name, "points", 100);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  std::vector<double> res(points);
  std::vector<BubbleParams> bs;
  std::vector<HeisPoint> ps;
  for (int i = 0; i < points; ++i) {
    bs.emplace_back(U(rng), random_point(cfg.N, rng, 1.0));
    ps.push_back(random_point(cfg.N, rng, 2.0));
  }
  parallel_for(points, [&](long i) { res[i] = bubble_pde_residual(bs[i], ps[i], c); });
  r.at_most("|-Delta_b w - w^{p*-1}| / w^{p*-1}", max_abs(res), cfg.tol(1e-5));
  CsvTable t({"lambda", "xi_x", "energy", "C_E", "relative_error", "tail_share"});
  double worst = 0.0;
  for (double lam : {0.5, 1.0, 2.0}) {
    HeisPoint xi(cfg.N);
    xi.z[0] = cplx(0.3, -0.2);
    xi.t = 0.1;
    const HeisEnergyReport e = energy_heis_bubble(BubbleParams(lam, xi), c);
    const double rel = std::abs(e.energy - c.C_E) / c.C_E;
    worst = std::max(worst, rel);
    t.row() << lam << xi.z[0].real() << e.energy << c.C_E << rel << e.tail_share;
  }
  r.at_most("E_H(bubble) vs C_E", worst, cfg.tol(1e-2));
  r.tables.emplace_back("energies", std::move(t));
  r.metrics = {{"N", cfg.N}, {"cQ", c.cQ}, {"C_E", c.C_E}, {"max_pde_residual", max_abs(res)}, {"max_energy_error", worst}};
  return r;
}

//------------------------------------------------------------------------------
// 6 / 7. Synthesized Palais-Smale sequences.

inline PSSequenceSpec one_bubble_spec(const YamabeConstants &c, double amplitude = 1.0) {
  const BasisPtr B = build_basis(c.N, 2, 2);
  PSSequenceSpec spec;
  spec.u_infty = constant_function(B, c.u0);
  spec.bubbles.push_back(BubbleChart(sphere_north(c.N), default_ladder(),
                                     BubbleProfile{BubbleParams(1.0, HeisPoint::origin(c.N)), amplitude}));
  return spec;
}

inline PSSequenceSpec two_bubble_spec(const YamabeConstants &c) {
  PSSequenceSpec spec = one_bubble_spec(c);
  spec.bubbles.clear();
  std::array<cplx, kMaxN + 1> a{}, b{};
  a[0] = 1.0;
  b[0] = -1.0;
  for (const auto &z : {a, b})
    spec.bubbles.push_back(BubbleChart(SpherePoint::from(c.N, z), default_ladder(),
                                       BubbleProfile{BubbleParams(1.0, HeisPoint::origin(c.N)), 1.0}));
  return spec;
}

inline void metrics_row(CsvTable &t, const std::string &run, const PSMetrics &m) {
  t.row() << run << m.n << m.R << m.energy << m.energy_infty << m.gap << m.gap_error << m.lp_n << m.mass_defect
          << m.norm_Hk << m.splitting << m.residual_upper << m.residual_lower << m.nodes;
}

inline CsvTable metrics_table() {
  return CsvTable({"run", "n", "R", "energy", "energy_infty", "gap", "gap_error", "lp", "mass_defect", "norm_Hk",
                   "splitting", "residual_upper", "residual_lower", "nodes"});
}

inline CheckResult check_quantization(const RunConfig &cfg) {
  CheckResult r;
  r.id = 6;
  r.name = "bubbling_quantization";
  require(cfg.N == 1, "bubbling_quantization: the lab runs at N = 1");
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  CsvTable t = metrics_table();
  const PSSequenceLab one(one_bubble_spec(c), c);
  std::vector<double> gaps;
  for (int n = 0; n < static_cast<int>(default_ladder().size()); ++n) {
    const PSMetrics m = one.metrics(n);
    gaps.push_back(m.gap_error);
    metrics_row(t, "one_bubble", m);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < gaps.size(); ++i)
    decreasing = decreasing && gaps[i] < gaps[i - 1];
  r.holds("one-bubble gap error decreases along the ladder", decreasing);
  r.at_most("one-bubble gap error at the last rung", gaps.back(), cfg.tol(2e-2));
  const PSSequenceLab two(two_bubble_spec(c), c);
  const int last = static_cast<int>(default_ladder().size()) - 1;
  const PSMetrics m2 = two.metrics(last);
  metrics_row(t, "two_bubbles", m2);
  const double two_err = std::abs(m2.gap - 2.0 * c.C_E) / (2.0 * c.C_E);
  r.at_most("two-bubble gap vs 2 C_E", two_err, cfg.tol(4e-2));
  r.tables.emplace_back("ladder", std::move(t));
  r.metrics = {{"C_E", c.C_E}, {"gap_errors", gaps}, {"two_bubble_gap", m2.gap}, {"two_bubble_error", two_err}};
  return r;
}

inline CheckResult check_gradient_decay(const RunConfig &cfg) {
  CheckResult r;
  r.id = 7;
  r.name = "gradient_decay";
  require(cfg.N == 1, "gradient_decay: the lab runs at N = 1");
  const YamabeConstants c = YamabeConstants::make(1, 1.0);
  std::vector<int> ns;
  for (int n = 0; n < static_cast<int>(default_ladder().size()); ++n)
    ns.push_back(n);
  const double amp = cfg.opt<double>(r.name, "control_amplitude", 2.0);
  const GradientDecayReport good = gradient_decay_check(PSSequenceLab(one_bubble_spec(c), c), ns);
  const GradientDecayReport bad = gradient_decay_check(PSSequenceLab(one_bubble_spec(c, amp), c), ns);
  CsvTable t = metrics_table();
  for (const auto &m : good.rows)
    metrics_row(t, "bubble", m);
  for (const auto &m : bad.rows)
    metrics_row(t, "control", m);
  r.tables.emplace_back("ladder", std::move(t));
  r.at_least("residual decay factor (first / last rung)", good.decay_factor, 10.0 / cfg.tol_scale);
  // no decay for the control: its last-rung residual stays above half its first
  r.at_most("control decay factor", bad.decay_factor, 2.0);
  // the lower bound stays away from zero for the control
  r.at_least("control lower bound at the last rung", bad.rows.back().residual_lower, 1.0);
  r.metrics = {{"decay_factor", good.decay_factor},
               {"monotone", good.monotone},
               {"control_decay_factor", bad.decay_factor},
               {"control_amplitude", amp}};
  return r;
}

//------------------------------------------------------------------------------
// 8. Sub-critical threshold.

inline CheckResult check_subcritical(const RunConfig &cfg) {
  CheckResult r;
  r.id = 8;
  r.name = "subcritical_threshold";
  const YamabeConstants c = YamabeConstants::make(cfg.N, cfg.k);
  const TransformPtr T = make_transform(cfg.N, cfg.band(6));
  const YamabeFunctional E(T, c);
  const int seeds = cfg.opt<int>(r.name, "seeds", 20);
  const double fraction = cfg.opt<double>(r.name, "energy_fraction", 0.85);
  require(fraction < 0.9, "subcritical_threshold: energy fraction must stay below 0.9");
  std::mt19937_64 rng(cfg.seed);
  std::vector<SpectralFunction> us;
  for (int s = 0; s < seeds; ++s)
    us.push_back(subcritical_seed(E, random_band_limited(T->basis_ptr(), rng, 3), fraction));
  std::vector<FlowReport> reps(seeds);
  parallel_for(seeds, [&](long s) { reps[s] = subcritical_flow(E, us[s]); });
  CsvTable t({"seed", "initial_energy", "final_energy", "final_norm", "iterations", "converged"});
  double worst = 0.0, emax = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto &f = reps[s];
    t.row() << s << f.initial_energy << f.final_energy << f.final_norm << f.iterations << f.converged_to_zero;
    worst = std::max(worst, f.final_norm);
    emax = std::max(emax, f.initial_energy / c.C_E);
  }
  r.at_most("initial energy / C_E", emax, 0.9);
  r.at_most("final H^k norm", worst, cfg.tol(1e-4));
  const SpectralFunction u0 = constant_function(T->basis_ptr(), c.u0);
  const FlowReport st = subcritical_flow(E, u0);
  const double moved = std::abs(st.final_norm - norm_Hk(u0, c.k)) / norm_Hk(u0, c.k);
  r.at_most("u0 stationary (relative change of norm)", moved, cfg.tol(1e-8));
  t.row() << -1 << st.initial_energy << st.final_energy << st.final_norm << st.iterations << st.converged_to_zero;
  r.tables.emplace_back("flows", std::move(t));
  r.metrics = {{"seeds", seeds}, {"max_final_norm", worst}, {"max_energy_ratio", emax}, {"u0_relative_change", moved},
               {"u0_residual", st.final_residual}};
  return r;
}

//------------------------------------------------------------------------------
// 9. Riesz suite.

inline double bump(const HeisPoint &p, double sigma = 1.0) {
  const double a = p.z_norm2();
  return std::exp(-(a * a + p.t * p.t) / std::pow(sigma, 4));
}

inline CheckResult check_riesz(const RunConfig &cfg) {
  CheckResult r;
  r.id = 9;
  r.name = "riesz_suite";
  std::mt19937_64 rng(cfg.seed);
  // homogeneity and decay slope
  double homog = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const HeisPoint p = random_point(1, rng, 2.0);
    const double lam = std::exp(std::uniform_real_distribution<double>(-3, 3)(rng));
    for (double a : {0.5, 1.0, 2.0, 3.0}) {
      const KernelSpec k{a, 1.0, KernelKind::riesz, 1};
      const double ref = std::pow(lam, a - 4.0) * kernel_eval(k, p);
      homog = std::max(homog, std::abs(kernel_eval(k, dilate(lam, p)) - ref) / ref);
    }
  }
  r.at_most("kernel homogeneity", homog, cfg.tol(1e-13));
  HeisPoint dir(1);
  dir.z[0] = cplx(0.6, 0.3);
  dir.t = 0.5;
  const double slope = kernel_decay_slope(KernelSpec{1.0, 1.0, KernelKind::riesz, 1}, dir);
  r.at_most("decay slope error", std::abs(slope + 3.0), cfg.tol(1e-10));

  // semigroup
  const SemigroupReport sg = semigroup_check([](const HeisPoint &p) { return bump(p); }, 1.0, 1.0);
  r.at_most("R_1(R_1 f) vs c R_2 f (relative L2)", sg.relative_error, cfg.tol(5e-2));

  // Green inversion at two resolutions
  const auto res = cfg.opt<std::vector<int>>(r.name, "green_resolutions", {48, 64});
  require(res.size() == 2, "riesz_suite: green_resolutions needs two entries");
  const double half = cfg.opt<double>(r.name, "green_half_width", 2.5);
  const double half_t = cfg.opt<double>(r.name, "green_half_height", 4.0);
  CsvTable gt({"resolution", "fitted_constant", "residual"});
  std::vector<GreenReport> gr;
  for (int n : res) {
    const GridFieldH geo = GridFieldH::make({-half, -half, -half_t}, {half, half, half_t}, {n, n, n});
    gr.push_back(green_inversion_check([](const HeisPoint &p) { return bump(p); }, geo));
    gt.row() << n << gr.back().fitted_constant << gr.back().residual;
  }
  const double stab = std::abs(gr[0].fitted_constant - gr[1].fitted_constant) / std::abs(gr[1].fitted_constant);
  r.at_most("Green constant stability across resolutions", stab, cfg.tol(5e-2));
  r.at_most("Green residual at the finer resolution", gr[1].residual, cfg.tol(1e-1));
  r.tables.emplace_back("green", std::move(gt));

  // translation covariance on a small full grid (reported)
  double shift_rel = 0.0;
  {
    const int n = cfg.opt<int>(r.name, "translation_resolution", 16);
    const GridFieldH geo = GridFieldH::make({-2.5, -2.5, -4.0}, {2.5, 2.5, 4.0}, {n, n, n});
    HeisPoint a(1);
    a.z[0] = cplx(0.3125, 0.0);
    a.t = 0.25;
    GridFieldH f0 = geo, f1 = geo;
    f0.fill([](const HeisPoint &p) { return bump(p); });
    f1.fill([&](const HeisPoint &p) { return bump(group_mul(group_inv(a), p)); });
    const GreenReport g0 = green_inversion_check_grid(f0), g1 = green_inversion_check_grid(f1);
    shift_rel = std::abs(g0.fitted_constant - g1.fitted_constant) / std::abs(g0.fitted_constant);
  }

  // principal value: sign at the maximum, delta sensitivity, alpha -> 2 probe (reported)
  CsvTable pt({"alpha", "value", "value_half_delta", "sensitivity", "extrapolated", "limit_ratio"});
  const HeisPoint origin = HeisPoint::origin(1);
  const auto f = [](const HeisPoint &p) { return bump(p); };
  bool sign_ok = true;
  double probe = 0.0;
  HeisPoint q(1);
  q.z[0] = 0.3;
  q.t = 0.2;
  const double lap = -sub_laplacian(f, q, 1e-3, 4);
  // (2 - alpha) PV -> 2 m (-Delta_b u) with m = 6 int_{|w|<1} x^2 dw = 2 pi
  const double limit = 4.0 * std::numbers::pi;
  for (double alpha : {0.5, 1.0, 1.5, 1.9}) {
    const PVReport at_max = pv_fractional(f, alpha, origin);
    sign_ok = sign_ok && at_max.value >= 0.0 && at_max.extrapolated >= 0.0;
    const PVReport pv = pv_fractional(f, alpha, q);
    const double ratio = (2.0 - alpha) * pv.extrapolated / (limit * lap);
    if (alpha == 1.9)
      probe = ratio;
    pt.row() << alpha << pv.value << pv.value_half_delta << pv.sensitivity << pv.extrapolated << ratio;
  }
  r.holds("PV nonnegative at the maximum of a bump", sign_ok);
  r.tables.emplace_back("pv", std::move(pt));

  // mapping-bound probe (reported, assertion: finite and dilation stable)
  const int bumps = cfg.opt<int>(r.name, "mapping_bumps", 20);
  double ratio_max = 0.0, spread = 0.0;
  if (bumps > 0) {
    CsvTable mt({"bump", "shape", "sigma", "ratio"});
    SemigroupOptions so;
    so.table_r = 24;
    so.table_t = 48;
    so.inner.panels = 12;
    const std::vector<double> sigmas{0.5, 0.8, 1.25, 2.0};
    std::vector<double> by_shape_min(5, 1e300), by_shape_max(5, 0.0);
    for (int b = 0; b < bumps; ++b) {
      const int shape = b / static_cast<int>(sigmas.size()) % 5;
      const double sigma = sigmas[b % sigmas.size()];
      SemigroupOptions o = so;
      o.support_gauge = 3.5 * sigma;
      o.table_scale = 0.25 * sigma;
      o.table_gauge = 40.0 * sigma;
      auto u = [shape, sigma](const HeisPoint &p) {
        const double a = p.z_norm2() / (sigma * sigma), t = p.t / (sigma * sigma);
        const double g = a * a + t * t;
        switch (shape) {
        case 0: return std::exp(-g);
        case 1: return std::exp(-g * g);
        case 2: return (1.0 + a) * std::exp(-2.0 * g);
        case 3: return std::exp(-a * a - 4.0 * t * t);
        default: return std::exp(-4.0 * a * a - t * t);
        }
      };
      const double ratio = mapping_ratio(u, 1.0, 2.0, o);
      ratio_max = std::max(ratio_max, ratio);
      by_shape_min[shape] = std::min(by_shape_min[shape], ratio);
      by_shape_max[shape] = std::max(by_shape_max[shape], ratio);
      mt.row() << b << shape << sigma << ratio;
    }
    for (int s = 0; s < 5; ++s)
      if (by_shape_max[s] > 0.0)
        spread = std::max(spread, by_shape_max[s] / by_shape_min[s] - 1.0);
    r.at_most("mapping ratio finite", std::isfinite(ratio_max) ? 0.0 : 1.0, 0.0);
    r.at_most("mapping ratio dilation spread", spread, cfg.tol(1e-2));
    r.tables.emplace_back("mapping", std::move(mt));
  }
  r.metrics = {{"homogeneity_error", homog},
               {"decay_slope", slope},
               {"semigroup_constant", sg.fitted_constant},
               {"semigroup_error", sg.relative_error},
               {"green_constants", {gr[0].fitted_constant, gr[1].fitted_constant}},
               {"green_residuals", {gr[0].residual, gr[1].residual}},
               {"green_stability", stab},
               {"translation_relative_change", shift_rel},
               {"pv_alpha_1_9_limit_ratio", probe},
               {"mapping_ratio_max", ratio_max},
               {"mapping_dilation_spread", spread}};
  return r;
}

//------------------------------------------------------------------------------
// 10. Three-commutator identity for k = 1.

inline CheckResult check_commutator(const RunConfig &cfg) {
  CheckResult r;
  r.id = 10;
  r.name = "commutator_identity";
  const int points = cfg.opt<int>(r.name, "points", 1000);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> C(-1.0, 1.0);
  // cubic polynomials in (x_j, y_j, t)
  const int dim = 2 * cfg.N + 1;
  auto random_poly = [&]() {
    std::vector<std::pair<std::vector<int>, double>> terms;
    for (int m = 0; m < 8; ++m) {
      std::vector<int> e(dim, 0);
      for (int d = 0; d < 3; ++d)
        e[std::uniform_int_distribution<int>(0, dim - 1)(rng)] += std::uniform_int_distribution<int>(0, 1)(rng);
      terms.emplace_back(e, C(rng));
    }
    return terms;
  };
  auto eval = [dim](const std::vector<std::pair<std::vector<int>, double>> &P, const HeisPoint &p) {
    double s = 0.0;
    for (const auto &[e, c] : P) {
      double m = c;
      for (int i = 0; i < dim; ++i) {
        const double x = i == dim - 1 ? p.t : (i % 2 == 0 ? p.z[i / 2].real() : p.z[i / 2].imag());
        m *= std::pow(x, e[i]);
      }
      s += m;
    }
    return s;
  };
  double worst = 0.0;
  CsvTable t({"point", "commutator", "closed_form", "error"});
  for (int i = 0; i < points; ++i) {
    const auto P = random_poly(), R = random_poly();
    auto u = [&](const HeisPoint &p) { return eval(P, p); };
    auto v = [&](const HeisPoint &p) { return eval(R, p); };
    const HeisPoint p = random_point(cfg.N, rng, 1.0);
    const double a = three_commutator(u, v, 1.0, p), b = three_commutator_closed(u, v, p);
    const double e = std::abs(a - b) / std::max(1.0, std::abs(b));
    worst = std::max(worst, e);
    if (i < 50)
      t.row() << i << a << b << e;
  }
  r.at_most("three-commutator vs closed form", worst, cfg.tol(1e-6));
  r.tables.emplace_back("samples", std::move(t));
  r.metrics = {{"N", cfg.N}, {"points", points}, {"max_error", worst}};
  return r;
}

//------------------------------------------------------------------------------
// 11. Symmetry and minimax exploration.

inline CheckResult check_minimax(const RunConfig &cfg) {
  CheckResult r;
  r.id = 11;
  r.name = "symmetry_minimax";
  const YamabeConstants c = YamabeConstants::make(cfg.N, cfg.k);
  const int L = cfg.band(8);
  const TransformPtr T = make_transform(cfg.N, L);
  const YamabeFunctional E(T, c);
  std::mt19937_64 rng(cfg.seed);
  // invariance under random unitaries
  const int unitaries = cfg.opt<int>(r.name, "unitaries", 100);
  double inv = 0.0;
  {
    // unitaries preserve each bidegree, so a smaller band is enough and much cheaper
    const TransformPtr Ts = make_transform(cfg.N, std::min(L, 3));
    const YamabeFunctional Es(Ts, c);
    std::vector<SpectralFunction> us;
    std::vector<Unitary> gs;
    for (int i = 0; i < unitaries; ++i) {
      us.push_back(random_band_limited(Ts->basis_ptr(), rng));
      gs.push_back(random_unitary(cfg.N + 1, rng));
    }
    std::vector<double> d(unitaries);
    parallel_for(unitaries, [&](long i) { d[i] = invariance_check(Es, us[i], gs[i]); });
    inv = max_abs(d);
  }
  r.at_most("|E(u) - E(u o g)|", inv, cfg.tol(1e-6));
  {
    std::mt19937_64 orng(cfg.seed + 1);
    bool acc = true;
    for (int i = 0; i < 5; ++i)
      acc = acc && orbit_accumulation_check(random_sphere_point(cfg.N, orng), SubgroupSpec{true, false, true});
    r.holds("G-orbits accumulate", acc);
  }

  MinimaxOptions mo;
  mo.budget = cfg.opt<int>(r.name, "budget", 3000);
  mo.tol = cfg.opt<double>(r.name, "tol", L <= 8 ? 1e-5 : 3e-5);
  mo.seed_band = cfg.opt<int>(r.name, "seed_band", 3);
  CsvTable t({"search", "seed", "energy", "C_E", "margin", "residual", "residual_full", "lp_mass", "tail", "iterations",
              "converged", "line_search_failed"});
  auto row = [&](const std::string &s, const CriticalPointReport &x) {
    t.row() << s << static_cast<long>(x.seed) << x.energy << c.C_E << x.energy - c.C_E << x.residual << x.residual_full
            << x.lp_mass << x.tail << x.iterations << x.converged << x.line_search_failed;
  };
  // negative control: Hopf mask alone from the constant seed
  const SubgroupSpec hopf{true, false, false};
  const CriticalPointReport ctrl =
      nehari_descent(E, hopf, constant_function(T->basis_ptr(), 1.0), mo);
  row("hopf_constant_seed", ctrl);
  r.at_most("Hopf control reaches the bubble level", std::abs(ctrl.energy - c.C_E) / c.C_E, cfg.tol(1e-6));

  const SubgroupSpec G{true, false, true};
  const int seeds = cfg.opt<int>(r.name, "seeds", 10);
  const auto reps = minimax_search(E, G, random_seeds(T->basis_ptr(), G, seeds, cfg.seed, mo.seed_band), mo);
  int good = 0;
  double best_margin = -1e300, sc = 0.0;
  for (const auto &x : reps) {
    row(G.label(), x);
    if (x.residual_full < cfg.tol(1e-4) && x.energy > c.C_E) {
      ++good;
      best_margin = std::max(best_margin, x.energy - c.C_E);
    }
    if (x.converged)
      sc = std::max(sc, x.residual_full / std::max(x.residual, 1e-14));
  }
  r.at_least("candidates above C_E with full residual < 1e-4", good, 1.0);
  r.at_most("symmetric criticality (full / masked residual)", sc, 2.0);
  r.tables.emplace_back("candidates", std::move(t));
  // coefficient snapshot of the best candidate
  if (!reps.empty()) {
    CsvTable snap({"index", "j", "l", "coefficient"});
    const auto &best = reps.front().candidate;
    for (int i = 0; i < best.basis->size(); ++i)
      if (best.c[i] != 0.0)
        snap.row() << i << best.basis->elements[i].block.j << best.basis->elements[i].block.l << best.c[i];
    r.tables.emplace_back("snapshot", std::move(snap));
  }
  r.metrics = {{"N", cfg.N},
               {"jmax", L},
               {"mask", G.label()},
               {"mask_size", mask_size(T->basis(), G)},
               {"invariance_error", inv},
               {"control_energy", ctrl.energy},
               {"candidates_above_level", good},
               {"best_margin", good > 0 ? best_margin : 0.0},
               {"symmetric_criticality_ratio", sc},
               {"antipodal_odd_hopf_mask_size", mask_size(T->basis(), SubgroupSpec{true, true, false})}};
  return r;
}

//------------------------------------------------------------------------------
// Calibration table (no criterion).

inline CheckResult calibrate_normalizations(const RunConfig &cfg) {
  CheckResult r;
  r.id = 0;
  r.name = "normalizations";
  CsvTable t({"N", "k", "Q", "p_star", "sphere_mass", "haar_kappa", "lambda0", "C_S", "C_S_gamma_form", "C_E", "u0",
              "cQ", "bubble_mass", "identity_residual"});
  double worst = 0.0;
  for (int N = 1; N <= kMaxN; ++N)
    for (double k : {0.5, 1.0, 1.5}) {
      if (2.0 * k >= homogeneous_dimension(N))
        continue;
      const YamabeConstants c = YamabeConstants::make(N, k);
      const double id = std::abs(c.C_S * c.lambda0 * c.lambda0 * std::pow(c.total_mass, 2.0 * k / c.Q) - 1.0);
      worst = std::max(worst, id);
      t.row() << N << k << c.Q << c.p_star << c.total_mass << HaarMeasure::calibrated(N).kappa << c.lambda0 << c.C_S
              << sobolev_constant_gamma_form(N, k) << c.C_E << c.u0 << c.cQ << c.bubble_mass() << id;
    }
  r.at_most("C_S lambda_0^2 mass^{2k/Q} = 1 on the whole table", worst, cfg.tol(1e-12));
  // Haar calibration: the Cayley change of variables maps the bubble mass onto the sphere mass
  const YamabeConstants c = YamabeConstants::make(cfg.N, 1.0);
  const HeisQuadrature q = polar_quadrature(HeisPoint::origin(cfg.N));
  const double jac = haar_integral([&](const HeisPoint &p) { return lambda_cayley(p); }, q,
                                   HaarMeasure::calibrated(cfg.N));
  const double rel = std::abs(jac - c.total_mass) / c.total_mass;
  r.at_most("int Lambda_C dV_H = sphere mass", rel, cfg.tol(1e-6));
  r.tables.emplace_back("constants", std::move(t));
  r.metrics = {{"identity_worst", worst}, {"jacobian_integral", jac}, {"sphere_mass", c.total_mass}, {"relative_error", rel}};
  return r;
}

//------------------------------------------------------------------------------

struct CheckEntry {
  const char *command;
  int id;
  std::function<CheckResult(const RunConfig &)> run;
};

inline const std::vector<CheckEntry> &check_registry() {
  static const std::vector<CheckEntry> reg{
      {"verify-group", 1, check_group},
      {"verify-spectral", 2, check_spectral},
      {"verify-cayley", 3, check_cayley},
      {"sobolev-sharpness", 4, check_sharp_constant},
      {"bubble-residual", 5, check_bubble},
      {"ps-quantization", 6, check_quantization},
      {"gradient-decay", 7, check_gradient_decay},
      {"subcritical-flow", 8, check_subcritical},
      {"riesz-check", 9, check_riesz},
      {"commutator-check", 10, check_commutator},
      {"minimax-explore", 11, check_minimax},
      {"calibrate-normalizations", 0, calibrate_normalizations},
  };
  return reg;
}

inline CheckResult run_timed(const std::function<CheckResult(const RunConfig &)> &f, const RunConfig &cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = f(cfg);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

} // namespace cryamabe
