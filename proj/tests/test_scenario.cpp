#include <gtest/gtest.h>

#include <filesystem>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kimura/scenario.hpp"

using namespace kimura;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("kimura_scenario_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = parse_scenario("{}", "x.json");
  EXPECT_EQ(c.theta, "wright-fisher");
  EXPECT_EQ(c.potential, "neutral");
  EXPECT_EQ(c.n, 400u);
  EXPECT_EQ(c.dt, 1e-3);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.checks, ScenarioConfig::all_checks());
}

TEST(Config, NestedValuesAreRead) {
  const auto c = parse_scenario(R"({"potential": "linear:1",
    "solver": {"n": 200, "T": 2.5, "modes": 4},
    "montecarlo": {"particles": 123, "seed": 9},
    "checks": ["edi", "lsi"]})", "x.json");
  EXPECT_EQ(c.potential, "linear:1");
  EXPECT_EQ(c.n, 200u);
  EXPECT_EQ(c.horizon, 2.5);
  EXPECT_EQ(c.modes, 4u);
  EXPECT_EQ(c.particles, 123u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.checks, (std::vector<std::string>{"edi", "lsi"}));
}

TEST(Config, ErrorsNameLineAndKey) {
  const std::string range = "{\n  \"solver\": {\n    \"dt\": 0.001,\n    \"n\": 4\n  }\n}";
  EXPECT_EQ(error_of([&] { parse_scenario(range, "r.json"); }).rfind("r.json:4: 'n':", 0), 0u)
      << error_of([&] { parse_scenario(range, "r.json"); });
  const std::string unknown = "{\n  \"theta\": \"wright-fisher\",\n  \"thta\": 1\n}";
  EXPECT_EQ(error_of([&] { parse_scenario(unknown, "u.json"); }).rfind("u.json:3: 'thta':", 0), 0u);
  const std::string type = "{\n\n  \"potential\": 3\n}";
  EXPECT_EQ(error_of([&] { parse_scenario(type, "t.json"); }).rfind("t.json:3: 'potential':", 0), 0u);
  const std::string syntax = "{\n  \"theta\": \"wright-fisher\",\n  \"n\" 3\n}";
  EXPECT_EQ(error_of([&] { parse_scenario(syntax, "s.json"); }).rfind("s.json:3:", 0), 0u);
  EXPECT_NE(error_of([&] { parse_scenario(R"({"checks": ["nope"]})", "c.json"); }).find("'nope'"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_scenario(R"({"solver": {"n": 40, "modes": 11}})", "m.json"); }).find("'modes'"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_scenario("[1]", "a.json"); }), "");
}

TEST(Config, MissingFile) {
  EXPECT_EQ(error_of([] { load_scenario("/nonexistent/kimura.json"); }),
            "file not found: /nonexistent/kimura.json");
}

TEST(Config, HashTracksContent) {
  const auto a = parse_scenario("{}", "a.json"), b = parse_scenario("{}", "b.json");
  const auto c = parse_scenario(R"({"montecarlo": {"seed": 2}})", "c.json");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Scenario, MeasureSpecs) {
  auto cfg = parse_scenario(R"({"solver": {"n": 200}})", "x.json");
  Scenario s(cfg);
  EXPECT_EQ(s.measure("dirac:0").atom0, 1.0);
  EXPECT_NEAR(s.measure("uniform").total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(s.measure("alpha").total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(s.measure("pi").total_mass(), 1.0, 1e-12);
  const auto half = s.measure("pi-restricted:0,0.5");
  EXPECT_NEAR(half.total_mass(), 1.0, 1e-12);
  EXPECT_EQ(half.interior.back(), 0.0);
  EXPECT_THROW(s.measure("pi-restricted:0.5"), Error);
  EXPECT_THROW(s.measure("dirac:abc"), Error);
  EXPECT_THROW(s.measure("gaussian"), Error);
  EXPECT_THROW(s.measure("table:does_not_exist.csv"), Error);
}

TEST(Scenario, TableMeasureResolvesRelativeToConfig) {
  const auto dir = scratch("table");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "ramp.csv");
    os << "x,density\n0,0\n1,2\n";
  }
  auto cfg = parse_scenario(R"({"solver": {"n": 100}})", "x.json", dir);
  Scenario s(cfg);
  const auto m = s.measure("table:ramp.csv");
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(m.interior[i], 2 * m.grid.center(i), 1e-12);
}

TEST(Scenario, DiracLawIsExact) {
  Scenario s(parse_scenario(R"({"solver": {"n": 100}})", "x.json"));
  const auto law = s.law("dirac:0.3");
  ASSERT_EQ(law.lo.size(), 1u);
  EXPECT_EQ(law.lo[0], 0.3);
  EXPECT_EQ(law.hi[0], 0.3);
}

TEST(Scenario, ConditionedInitialDefaultsToEtaWeighting) {
  Scenario a(parse_scenario(R"({"initial": "uniform", "solver": {"n": 100}})", "x.json"));
  const auto q = a.conditioned_initial();
  const auto expect = condition_measure(a.measure("uniform"), a.eta());
  EXPECT_EQ(q.interior, expect.interior);
  Scenario b(parse_scenario(R"({"conditioned_initial": "pi", "solver": {"n": 100}})", "x.json"));
  EXPECT_EQ(b.conditioned_initial().interior, b.pi().values);
}

TEST(Runner, DescribeReportsNeutralConstants) {
  Scenario s(parse_scenario("{}", "x.json"));
  std::ostringstream os;
  EXPECT_EQ(ScenarioRunner(s, os).run("describe"), 0);
  double lambda0 = 0, lambda = 0, diameter = 0;
  const auto pos = os.str().find("lambda0=");
  ASSERT_NE(pos, std::string::npos);
  ASSERT_EQ(std::sscanf(os.str().c_str() + pos, "lambda0=%lf, lambda=%lf, diameter=%lf", &lambda0, &lambda,
                        &diameter),
            3);
  EXPECT_NEAR(lambda0, 2.0, 1e-3);
  EXPECT_NEAR(lambda, 3.0, 1e-3);
  EXPECT_NEAR(diameter, std::numbers::pi, 1e-8);
  EXPECT_NE(os.str().find(s.config().hash()), std::string::npos);
  EXPECT_THROW(ScenarioRunner(s, os).run("bogus"), Error);
}

TEST(Runner, OutputsAreByteReproducible) {
  const auto dir = scratch("repro");
  auto run_once = [&](const std::string& sub) {
    auto cfg = parse_scenario(R"({"initial": "dirac:0.3", "solver": {"n": 100, "T": 0.2, "record_every": 0.05}})",
                              "x.json");
    cfg.out = dir.string();
    Scenario s(cfg);
    std::ostringstream log;
    EXPECT_EQ(ScenarioRunner(s, log).run(sub), 0);
  };
  run_once("evolve");
  const auto traj = slurp(dir / "trajectory.csv"), summary = slurp(dir / "evolve.json");
  run_once("evolve");
  EXPECT_EQ(slurp(dir / "trajectory.csv"), traj);
  EXPECT_EQ(slurp(dir / "evolve.json"), summary);
  const auto j = nlohmann::json::parse(summary);
  EXPECT_TRUE(j.contains("config_hash"));
  EXPECT_EQ(j["seed"], 1);
  run_once("verify");
  const auto report = slurp(dir / "verification.csv");
  run_once("verify");
  EXPECT_EQ(slurp(dir / "verification.csv"), report);
}

TEST(Runner, SampleIsSeedDeterministic) {
  const auto dir = scratch("sample");
  auto run_once = [&](std::uint64_t seed) {
    auto cfg = parse_scenario(R"({"montecarlo": {"particles": 4000, "T": 0.5}, "solver": {"n": 100}})", "x.json");
    cfg.seed = seed;
    cfg.out = dir.string();
    Scenario s(cfg);
    std::ostringstream log;
    ScenarioRunner(s, log).run("sample");
    return slurp(dir / "snapshots.csv");
  };
  const auto a = run_once(3);
  EXPECT_EQ(run_once(3), a);
  EXPECT_NE(run_once(4), a);
}
