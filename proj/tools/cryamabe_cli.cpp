#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cryamabe/acceptance.hpp"

using namespace cryamabe;

namespace {

struct Flags {
  std::string config;
  std::optional<int> N, jmax;
  std::optional<double> k, tol_scale;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_flags(CLI::App *sub, Flags &f) {
  sub->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--N", f.N, "CR dimension N");
  sub->add_option("--k", f.k, "order k (0 < 2k < Q)");
  sub->add_option("--jmax", f.jmax, "band limit (jmax = lmax)");
  sub->add_option("--seed", f.seed, "RNG seed");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--tol-scale", f.tol_scale, "multiplier applied to every tolerance");
}

RunConfig resolve(const Flags &f) {
  RunConfig c;
  if (!f.config.empty())
    c = config_from_json(load_json(f.config));
  if (f.N)
    c.N = *f.N;
  if (f.k)
    c.k = *f.k;
  if (f.jmax)
    c.jmax = *f.jmax;
  if (f.seed)
    c.seed = *f.seed;
  if (f.out)
    c.out = *f.out;
  if (f.tol_scale)
    c.tol_scale = *f.tol_scale;
  c.validate();
  return c;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Numerical checks for the CR Yamabe problem on the Heisenberg group and the CR sphere"};
  app.require_subcommand(1);
  Flags flags;
  std::string selected;
  for (const auto &e : check_registry()) {
    CLI::App *sub = app.add_subcommand(e.command, std::string("run ") + e.command);
    add_flags(sub, flags);
    sub->callback([&selected, cmd = std::string(e.command)] { selected = cmd; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  RunConfig cfg;
  try {
    cfg = resolve(flags);
  } catch (const std::exception &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  const auto &reg = check_registry();
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const CheckEntry &e) { return selected == e.command; });
  CheckResult res;
  try {
    res = run_timed(it->run, cfg);
  } catch (const std::invalid_argument &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    // numerical breakdown: still a failed assertion with a report
    res.name = selected;
    res.holds(std::string("run completed: ") + e.what(), false);
  }
  try {
    res.write(cfg.out);
  } catch (const std::exception &e) {
    std::cerr << "cannot write artifacts: " << e.what() << "\n";
    return 1;
  }
  const json rep = res.report();
  std::cout << (res.passed() ? "PASS " : "FAIL ") << selected << " (" << res.seconds << " s) -> "
            << (cfg.out / (res.name + ".json")).string() << "\n";
  for (const auto &a : res.assertions)
    std::cout << "  " << (a.passed ? "ok   " : "FAIL ") << a.what << ": " << format_number(a.value) << " (bound "
              << format_number(a.bound) << ")\n";
  if (!res.passed()) {
    std::cerr << json{{"command", selected}, {"failures", rep["failures"]}}.dump() << "\n";
    return 1;
  }
  return 0;
}
