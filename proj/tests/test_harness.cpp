#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cryamabe/acceptance.hpp"

using namespace cryamabe;

namespace {

std::filesystem::path scratch(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("cryamabe_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST(Csv, HeaderDotsAndQuoting) {
  CsvTable t({"name", "value"});
  t.row() << "a,b" << 0.5;
  t.row() << "plain" << 1e-20;
  EXPECT_EQ(t.str(), "name,value\n\"a,b\",0.5\nplain,1e-20\n");
  CsvTable bad({"x", "y"});
  bad.row() << 1.0;
  EXPECT_THROW(bad.str(), std::invalid_argument);
}

TEST(Csv, NonFiniteValues) {
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
}

TEST(Io, AtomicWriteLeavesNoTempFile) {
  const auto d = scratch("atomic");
  atomic_write(d / "a.txt", "one\n");
  atomic_write(d / "a.txt", "two\n");
  EXPECT_EQ(slurp(d / "a.txt"), "two\n");
  EXPECT_FALSE(std::filesystem::exists(d / "a.txt.tmp"));
}

TEST(Io, GridRoundTrip) {
  const auto d = scratch("grid");
  GridFieldH g = GridFieldH::koranyi_box(1.5, {8, 9, 10});
  g.fill([](const HeisPoint &p) { return bump(p) + p.t; });
  save_grid_csv(g, d / "g.csv");
  const GridFieldH h = load_grid_csv(d / "g.csv");
  EXPECT_EQ(h.n, g.n);
  ASSERT_EQ(h.v.size(), g.v.size());
  for (std::size_t i = 0; i < g.v.size(); ++i)
    EXPECT_NEAR(h.v[i], g.v[i], 1e-11 * (1 + std::abs(g.v[i])));
}

TEST(Config, JsonAndValidation) {
  const RunConfig c = config_from_json(json::parse(R"({"N": 1, "k": 1, "jmax": 6, "seed": 7, "tol_scale": 2,
                                                       "checks": {"minimax": {"seeds": 3}}})"));
  EXPECT_EQ(c.jmax, 6);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.tol(1e-3), 2e-3);
  EXPECT_EQ(c.opt("minimax", "seeds", 10), 3);
  EXPECT_EQ(c.opt("minimax", "other", 5), 5);
  EXPECT_NO_THROW(c.validate());
  RunConfig bad = c;
  bad.tol_scale = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.k = 2.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.N = 9;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Registry, CommandsAreUnique) {
  std::set<std::string> names;
  std::set<int> ids;
  for (const auto &e : check_registry()) {
    names.insert(e.command);
    ids.insert(e.id);
  }
  EXPECT_EQ(names.size(), 12u);
  EXPECT_EQ(ids.size(), 12u);
}

TEST(Determinism, GroupCheckArtifactsRepeat) {
  RunConfig c;
  c.out = scratch("det_a");
  const CheckResult a = check_group(c);
  a.write(c.out);
  const auto da = c.out;
  c.out = scratch("det_b");
  const CheckResult b = check_group(c);
  b.write(c.out);
  EXPECT_TRUE(a.passed());
  for (const auto &[tag, t] : a.tables) {
    const std::string f = a.name + "_" + tag + ".csv";
    EXPECT_EQ(slurp(da / f), slurp(c.out / f));
  }
  EXPECT_EQ(a.metrics, b.metrics);
}
