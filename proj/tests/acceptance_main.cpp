// Runs criteria 1-11 and prints one PASS/FAIL line per criterion.
//   acceptance [--out DIR] [--config PATH] [criterion ...]
#include <cstdlib>
#include <iostream>
#include <set>

#include "cryamabe/acceptance.hpp"

using namespace cryamabe;

int main(int argc, char **argv) {
  RunConfig cfg;
  cfg.out = "acceptance_out";
  std::set<int> only;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--out" && i + 1 < argc) {
        cfg.out = argv[++i];
      } else if (a == "--config" && i + 1 < argc) {
        const auto out = cfg.out;
        cfg = config_from_json(load_json(argv[++i]));
        cfg.out = out;
      } else {
        only.insert(std::stoi(a));
      }
    }
    cfg.validate();
  } catch (const std::exception &e) {
    std::cerr << "usage: acceptance [--out DIR] [--config PATH] [criterion ...]: " << e.what() << "\n";
    return 2;
  }
  int failed = 0;
  json summary = json::array();
  for (const auto &e : check_registry()) {
    if (e.id == 0 || (!only.empty() && !only.count(e.id)))
      continue;
    CheckResult r;
    try {
      r = run_timed(e.run, cfg);
    } catch (const std::exception &ex) {
      r.id = e.id;
      r.name = e.command;
      r.holds(std::string("run completed: ") + ex.what(), false);
    }
    r.write(cfg.out);
    std::cout << (r.passed() ? "PASS" : "FAIL") << " criterion " << r.id << " " << r.name << " ("
              << format_number(r.seconds) << " s)";
    for (const auto &a : r.assertions)
      if (!a.passed)
        std::cout << " | " << a.what << " = " << format_number(a.value) << " vs " << format_number(a.bound);
    std::cout << std::endl;
    failed += r.passed() ? 0 : 1;
    summary.push_back(r.report());
  }
  save_json(cfg.out / "summary.json", summary);
  return failed == 0 ? 0 : 1;
}
