#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <string>

#include "test_support.hpp"

using namespace fots;
using fots::testing::fresh_dir;
using fots::testing::scenario_dir;
using fots::testing::slurp;

namespace {

nlohmann::json canned_json(const std::string& name) {
  std::ifstream in(scenario_dir() / (name + ".json"));
  return nlohmann::json::parse(in);
}

Scenario short_version(const std::string& name, double duration) {
  auto j = canned_json(name);
  j["duration_s"] = duration;
  if (j.contains("calibration_procedure")) j["calibration_procedure"]["rounds"] = 10;
  return parse_scenario(j);
}

}  // namespace

TEST(LoadScenario, EveryCannedFileLoads) {
  std::size_t count = 0;
  for (const auto& e : std::filesystem::directory_iterator(scenario_dir())) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_scenario(e.path())) << e.path();
    ++count;
  }
  EXPECT_GE(count, 6u);
  const auto s = load_scenario(scenario_dir() / "fig3_sync.json");
  EXPECT_EQ(s.name, "fig3_sync");
  EXPECT_EQ(s.link.length_km, 230.0);
  EXPECT_TRUE(s.protocol.compensation);
}

TEST(LoadScenario, MisspelledKeyIsNamed) {
  auto j = canned_json("fig3_sync");
  j["link"]["lenght_km"] = j["link"]["length_km"];
  j["link"].erase("length_km");
  try {
    parse_scenario(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "link.lenght_km");
  }
}

TEST(LoadScenario, ZeroDurationRejected) {
  auto j = canned_json("fig3_sync");
  j["duration_s"] = 0;
  try {
    parse_scenario(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "duration_s");
  }
}

TEST(LoadScenario, WrongTypeAndNestedUnknownKeys) {
  auto j = canned_json("fig3_sync");
  j["clocks"]["user"]["noise"][0]["amplitude"] = "big";
  EXPECT_THROW(parse_scenario(j), ValidationError);
  auto k = canned_json("fig3_sync");
  k["protocol"]["compensaton"] = true;
  try {
    parse_scenario(k);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "protocol.compensaton");
  }
}

TEST(LoadScenario, MalformedAndMissingFiles) {
  const auto dir = fresh_dir("malformed");
  std::ofstream(dir / "bad.json") << "{ \"name\": ";
  EXPECT_THROW(load_scenario(dir / "bad.json"), ParseError);
  EXPECT_THROW(load_scenario(dir / "absent.json"), IoError);
}

TEST(LoadScenario, JsonRoundTrip) {
  const auto s = load_scenario(scenario_dir() / "fig6_access.json");
  const auto again = parse_scenario(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(to_json(again).dump(), to_json(s).dump());
}

TEST(Seeds, DerivedPerComponentAndDistinct) {
  auto s = load_scenario(scenario_dir() / "fig6_access.json");
  const auto seeds = s.seeds();
  std::set<std::uint64_t> distinct;
  for (const auto& [k, v] : seeds) distinct.insert(v);
  EXPECT_EQ(distinct.size(), seeds.size());
  EXPECT_EQ(seeds.at("tics.user"), derive_seed(s.master_seed, "tics.user"));
  s.reseed(s.master_seed + 1);
  EXPECT_NE(s.seeds().at("tics.user"), seeds.at("tics.user"));
}

TEST(Run, IdealScenarioIsExact) {
  const auto dir = fresh_dir("ideal");
  const auto rep = run(load_scenario(scenario_dir() / "ideal.json"), dir);
  ASSERT_EQ(rep.rounds.size(), 100u);
  for (const auto& r : rep.rounds) EXPECT_LE(std::abs(r.residual), 1e-15);
}

TEST(Run, Fig3SyncEmitsTheArtifactTree) {
  const auto dir = fresh_dir("fig3_sync");
  const auto rep = run(short_version("fig3_sync", 200.0), dir);
  for (const char* f : {"rounds.csv", "residual_tdev.csv", "clock_tdev.csv", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto rounds = io::read_table(dir / "rounds.csv");
  const std::vector<std::string> header = {"t_s",           "T1_s",          "T2_s",
                                           "offset_est_s",  "true_offset_s", "residual_s"};
  EXPECT_EQ(rounds.header, header);
  EXPECT_EQ(rounds.rows.size(), 200u);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("name"), "fig3_sync");
  EXPECT_EQ(manifest.at("code_version"), kVersion);
  EXPECT_TRUE(manifest.at("seeds").contains("link.fluctuation"));
  EXPECT_TRUE(manifest.at("calibration").contains("provenance"));
}

TEST(Run, CsvCarriesFullPrecision) {
  const auto dir = fresh_dir("precision");
  const auto rep = run(short_version("fig3_sync", 50.0), dir);
  const auto series = io::read_series(dir / "rounds.csv");
  ASSERT_EQ(series.values.size(), rep.rounds.size());
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    EXPECT_EQ(series.values[i], rep.rounds[i].residual);
  }
  const auto curve = io::read_tdev_csv(dir / "residual_tdev.csv");
  ASSERT_EQ(curve.points.size(), rep.residual_tdev.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    EXPECT_EQ(curve.points[i].value, rep.residual_tdev.points[i].value);
  }
}

TEST(Run, RerunIsByteIdentical) {
  const auto s = short_version("fig6_access", 300.0);
  const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  run(s, a);
  run(s, b);
  EXPECT_TRUE(fots::testing::same_tree(a, b));
  auto other = s;
  other.reseed(s.master_seed + 1);
  const auto c = fresh_dir("rerun_c");
  run(other, c);
  EXPECT_NE(slurp(a / "rounds.csv"), slurp(c / "rounds.csv"));
}

TEST(Run, AccessNodeCsvCarriesPosition) {
  const auto dir = fresh_dir("fig6");
  run(short_version("fig6_access", 100.0), dir);
  const auto t = io::read_table(dir / "node_0.csv");
  const auto col = t.column("position_km");
  ASSERT_GE(col, 0);
  ASSERT_FALSE(t.rows.empty());
  for (const auto& row : t.rows) EXPECT_EQ(row[col], 50.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "node_0_tdev.csv"));
}

TEST(Run, UnwritableOutputIsAnIoError) {
  const auto dir = fresh_dir("blocked");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(run(load_scenario(scenario_dir() / "ideal.json"), dir / "file" / "sub"), IoError);
}

TEST(Compare, IdenticalRunsHaveUnitRatio) {
  const auto dir = fresh_dir("cmp_same");
  run(short_version("fig3_sync", 100.0), dir);
  const auto c = compare(std::vector<std::filesystem::path>{dir, dir});
  ASSERT_FALSE(c.taus.empty());
  for (double r : c.ratios[1]) EXPECT_EQ(r, 1.0);
  EXPECT_TRUE(c.ordered());
  EXPECT_EQ(c.names[0], "fig3_sync");
}

TEST(Compare, DisjointGridsAndSingleRunsRejected) {
  StabilityCurve a, b;
  a.points = {{1.0, 1e-11, 10}, {2.0, 1e-11, 10}};
  b.points = {{5.0, 1e-11, 10}, {10.0, 1e-11, 10}};
  EXPECT_THROW(compare({"a", "b"}, {a, b}), ValidationError);
  EXPECT_THROW(compare({"a"}, {a}), ValidationError);
}

TEST(Compare, FlagsOrderingViolations) {
  StabilityCurve hi, lo;
  hi.points = {{1.0, 3e-11, 10}, {10.0, 3e-11, 10}};
  lo.points = {{1.0, 1e-11, 10}, {10.0, 5e-11, 10}};
  const auto c = compare({"hi", "lo"}, {hi, lo});
  EXPECT_EQ(c.ordering_violations, std::vector<double>{10.0});
  EXPECT_NEAR(c.ratios[1][0], 1.0 / 3.0, 1e-15);
  EXPECT_NE(format_comparison(c).find("ordering violated"), std::string::npos);
}

namespace {

// Expected TDEV of the raw clock difference for white PM, white FM and a
// quadratic drift term, each summed over both clocks.
double expected_clock_tdev(const Scenario& s, double tau) {
  const auto n = static_cast<std::size_t>(tau / s.protocol.compensation_period);
  double var = 0.0;
  for (const ClockModel* c : {&s.server, &s.user}) {
    for (const auto& comp : c->noise.components) {
      if (comp.type == NoiseType::white_pm) var += comp.amplitude * comp.amplitude / double(n);
      if (comp.type == NoiseType::white_fm) {
        // Per-round phase steps accumulate over the pulse grid.
        const double step = comp.amplitude * std::sqrt(s.protocol.compensation_period);
        var += std::pow(fots::testing::random_walk_tdev(step, n), 2);
      }
    }
  }
  const double dd = s.user.effective_drift() - s.server.effective_drift();
  return std::sqrt(var + std::pow(dd * tau * tau, 2) / 6.0);
}

}  // namespace

TEST(CannedProfiles, FreeRunningTargetsInExpectation) {
  const auto s = load_scenario(scenario_dir() / "fig3_free_running.json");
  EXPECT_NEAR(expected_clock_tdev(s, 1.0), 106e-12, 0.05 * 106e-12);
  EXPECT_NEAR(expected_clock_tdev(s, 1000.0), 3e-6, 0.05 * 3e-6);
}

TEST(CannedProfiles, FrequencySyncTargetsInExpectation) {
  const auto s = load_scenario(scenario_dir() / "fig3_freq_sync.json");
  EXPECT_NEAR(expected_clock_tdev(s, 1.0), 19e-12, 0.05 * 19e-12);
  EXPECT_NEAR(expected_clock_tdev(s, 1000.0), 11e-12, 0.05 * 11e-12);
}
