// Copyright 2026 The cadsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cadsim/experiment.hpp"

namespace cadsim
{
namespace
{

namespace fs = std::filesystem;
using nlohmann::json;

json tiny(const std::string & scheme = "caps")
{
  return {
    {"name", "tiny"}, {"seed", 3}, {"repetitions", 1},
    {"traces", {{"synthetic", {{"blocks_x", 2}, {"blocks_y", 2}, {"vehicle_count", 20},
      {"duration_s", 150.0}}}}},
    {"scheme", {{"kind", scheme}}},
    {"qos", {{"draws", 10000}}}};
}

fs::path scratch(const std::string & name)
{
  const auto dir = fs::temp_directory_path() / ("cadsim_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Config, RoundTrip)
{
  auto j = tiny();
  j["laa"] = {{"fraction_compromised", 0.05}};
  j["adversary"] = {{"max_silence", 9}};
  const auto cfg = parse_config(j);
  const auto dumped = config_to_json(cfg);
  EXPECT_EQ(config_to_json(parse_config(dumped)), dumped);
  EXPECT_EQ(dumped["adversary"]["max_silence"], 9);
  EXPECT_EQ(dumped["neighbor_tracker"]["max_silence"], "auto");
  EXPECT_EQ(dumped["laa"]["fraction_compromised"], 0.05);
}

TEST(Config, Defaults)
{
  const auto cfg = parse_config(json::object());
  EXPECT_EQ(cfg.scheme.kind, SchemeKind::kCaps);
  EXPECT_EQ(cfg.repetitions, 1);
  EXPECT_FALSE(cfg.laa.has_value());
  EXPECT_EQ(cfg.qos.draws, 100000);
}

TEST(Config, RejectsUnknownKeysAndWrongTypes)
{
  auto j = tiny();
  j["scheme"]["params"] = {{"max_silense_s", 5}};
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError & e) {
    EXPECT_NE(std::string(e.what()).find("max_silense_s"), std::string::npos);
  }
  j = tiny();
  j["seed"] = "seven";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = tiny();
  j["scheme"]["kind"] = "mixzone";
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, ValidationListsEveryProblem)
{
  auto j = tiny();
  j["repetitions"] = 0;
  j["preferences"] = {{"low", 50}, {"normal", 10}, {"high", 10}};
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError & e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("repetitions"), std::string::npos);
    EXPECT_NE(what.find("preference"), std::string::npos);
  }
}

TEST(Config, MissingFileIsConfigError)
{
  EXPECT_THROW(load_config("/nonexistent/cadsim.json"), ConfigError);
}

TEST(Config, HashIgnoresOutputDir)
{
  auto a = parse_config(tiny());
  auto b = a;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed = 4;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Experiment, SilenceBound)
{
  auto cfg = parse_config(tiny("rsp"));
  EXPECT_EQ(silence_steps_bound(cfg, 1.0), 13);
  cfg.scheme.kind = SchemeKind::kNone;
  EXPECT_EQ(silence_steps_bound(cfg, 1.0), 0);
  cfg.laa = LaaConfig{};
  cfg.laa->fraction_compromised = 0.1;
  EXPECT_EQ(silence_steps_bound(cfg, 1.0), 3);
}

TEST(Experiment, RepetitionSeedsDiffer)
{
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 5; ++r) {
    seeds.insert(repetition_seed(3, r));
  }
  EXPECT_EQ(seeds.size(), 5u);
}

TEST(Experiment, NoChangeBaselineFullyTraceable)
{
  const auto runs = run_experiment(parse_config(tiny("none")), false);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_DOUBLE_EQ(runs[0].pi, 100.0);
  EXPECT_DOUBLE_EQ(runs[0].pi_norm, 0.0);
  EXPECT_TRUE(runs[0].pseudonyms.empty);
}

TEST(Experiment, ArtifactsAreByteIdentical)
{
  auto j = tiny("cads");
  j["dump_errors"] = true;
  const auto d1 = scratch("det1");
  const auto d2 = scratch("det2");
  j["output_dir"] = d1.string();
  run_experiment(parse_config(j), true);
  j["output_dir"] = d2.string();
  run_experiment(parse_config(j), true);
  std::size_t files = 0;
  for (const auto & e : fs::directory_iterator(d1)) {
    const auto other = d2 / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
    ++files;
  }
  EXPECT_GE(files, 6u);
  EXPECT_TRUE(fs::exists(d1 / "manifest.json"));
  EXPECT_TRUE(fs::exists(d1 / "errors.csv"));
  EXPECT_FALSE(fs::exists(d1 / "profile.json"));
  const auto manifest = json::parse(slurp(d1 / "manifest.json"));
  EXPECT_EQ(manifest["config_hash"], config_hash(parse_config(j)));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Experiment, PreferenceGroupsRecombine)
{
  auto j = tiny("cads");
  j["preferences"] = {{"low", 0}, {"normal", 25}, {"high", 75}};
  j["traces"]["synthetic"]["vehicle_count"] = 40;
  const auto r = run_experiment(parse_config(j), false).at(0);
  ASSERT_EQ(r.groups.size(), 2u);
  EXPECT_EQ(r.groups[0].level, PrivacyLevel::kNormal);
  EXPECT_EQ(r.groups[1].level, PrivacyLevel::kHigh);
  EXPECT_EQ(r.groups[0].vehicles + r.groups[1].vehicles, r.vehicles);
  double weighted = 0.0;
  for (const auto & g : r.groups) {
    weighted += g.pi * static_cast<double>(g.vehicles);
  }
  EXPECT_NEAR(weighted, r.pi * static_cast<double>(r.vehicles), 1e-6);
  EXPECT_GT(r.qos.samples, 0u);
}

TEST(Experiment, ProfileOnlyWhenAsked)
{
  auto j = tiny();
  EXPECT_FALSE(run_experiment(parse_config(j), false).at(0).profile.has_value());
  j["profile"] = true;
  const auto p = run_experiment(parse_config(j), false).at(0).profile;
  ASSERT_TRUE(p.has_value());
  EXPECT_GT(p->mean_ms, 0.0);
  EXPECT_GE(p->p95_ms, 0.0);
}

TEST(Experiment, LaaReportsVictims)
{
  auto j = tiny("cads");
  j["traces"]["synthetic"]["vehicle_count"] = 40;
  j["laa"] = {{"fraction_compromised", 0.1}};
  const auto r = run_experiment(parse_config(j), false).at(0);
  EXPECT_EQ(r.compromised, 4u);
  EXPECT_EQ(r.adversary_max_silence_steps, 13);
  EXPECT_EQ(r.pseudonyms.concerned, r.victims);
}

TEST(Sweep, FullGridHas48Cells)
{
  auto base = tiny("cads");
  base["traces"]["synthetic"]["vehicle_count"] = 6;
  base["traces"]["synthetic"]["duration_s"] = 60.0;
  base["scheme"]["cads"] = {{"static_params", true}};
  const std::vector<SweepAxis> grid = {
    {"scheme.params.max_pseudonym_time_s", {180, 240, 300}},
    {"scheme.params.max_silence_s", {7, 9, 11, 13}},
    {"scheme.params.neighborhood_radius_m", {50, 100}},
    {"scheme.params.pseudonym_time_increment_s", {0, 60}}};
  std::size_t calls = 0;
  const auto rows = sweep(base, grid, [&](std::size_t, std::size_t total) {
      ++calls;
      EXPECT_EQ(total, 48u);
    });
  EXPECT_EQ(rows.size(), 48u);
  EXPECT_EQ(calls, 48u);
  std::set<std::vector<std::pair<std::string, std::string>>> distinct;
  for (const auto & r : rows) {
    EXPECT_EQ(r.overrides.size(), 4u);
    distinct.insert(r.overrides);
  }
  EXPECT_EQ(distinct.size(), 48u);
  EXPECT_EQ(aggregate_cells(rows).size(), 48u);
}

TEST(Sweep, SingleCellMatchesRun)
{
  const auto base = tiny();
  const auto rows = sweep(base, {{"scheme.params.max_silence_s", {11}}});
  ASSERT_EQ(rows.size(), 1u);
  const auto direct = run_experiment(parse_config(base), false).at(0);
  EXPECT_EQ(rows[0].result.pi, direct.pi);
  EXPECT_EQ(rows[0].result.qos.qos, direct.qos.qos);
  EXPECT_EQ(rows[0].result.seed, direct.seed);
}

TEST(Sweep, RepetitionsUseDistinctSeeds)
{
  auto base = tiny();
  base["repetitions"] = 5;
  base["traces"]["synthetic"]["vehicle_count"] = 6;
  const auto rows = sweep(base, {{"scheme.params.max_silence_s", {9, 11}}});
  ASSERT_EQ(rows.size(), 10u);
  std::set<std::uint64_t> seeds;
  for (const auto & r : rows) {
    seeds.insert(r.result.seed);
  }
  EXPECT_EQ(seeds.size(), 5u);
  const auto cells = aggregate_cells(rows);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].repetitions, 5u);
}

TEST(Sweep, BadPathIsConfigError)
{
  EXPECT_THROW(sweep(tiny(), {{"scheme.params.bogus", {1}}}), ConfigError);
  EXPECT_THROW(sweep(tiny(), {{"scheme.params.max_silence_s", {}}}), ConfigError);
}

TEST(Sweep, TableRoundTrip)
{
  auto base = tiny();
  base["traces"]["synthetic"]["vehicle_count"] = 6;
  base["repetitions"] = 2;
  const auto rows = sweep(base, {{"scheme.params.max_silence_s", {9, 11}}});
  std::stringstream table;
  write_sweep_table(rows, table);
  const auto cells = read_sweep_table(table);
  const auto direct = aggregate_cells(rows);
  ASSERT_EQ(cells.size(), direct.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(cells[i].params, direct[i].params);
    EXPECT_NEAR(cells[i].pi, direct[i].pi, 1e-9);
    EXPECT_NEAR(cells[i].qos, direct[i].qos, 1e-9);
    EXPECT_EQ(cells[i].repetitions, 2u);
  }
}

SweepCell cell(const std::string & tag, double pi, double qos)
{
  SweepCell c;
  c.params = {{"scheme.params.max_pseudonym_time_s", tag}};
  c.pi = pi;
  c.qos = qos;
  c.repetitions = 1;
  return c;
}

TEST(SelectParams, AllBelowFloor)
{
  const auto s = select_cads_params({cell("a", 10, 80), cell("b", 5, 84.4)});
  EXPECT_FALSE(s.low.has_value());
  EXPECT_FALSE(s.normal.has_value());
  EXPECT_FALSE(s.high.has_value());
}

TEST(SelectParams, SingleFeasibleCellEverywhere)
{
  const auto s = select_cads_params({cell("a", 50, 90), cell("b", 5, 70)});
  ASSERT_TRUE(s.low && s.normal && s.high);
  EXPECT_EQ(s.low->params, s.high->params);
  EXPECT_EQ(s.normal->params, s.high->params);
}

TEST(SelectParams, PicksByCategory)
{
  const std::vector<SweepCell> cells = {
    cell("a", 90, 95), cell("b", 70, 93), cell("c", 40, 90), cell("d", 30, 90.2),
    cell("e", 20, 86), cell("f", 25, 85.6), cell("g", 1, 60)};
  const auto s = select_cads_params(cells);
  // Highest QoS with Pi <= 75.
  EXPECT_EQ(s.low->params[0].second, "b");
  // Median of {95, 93, 90, 90, 86, 86} is 90; tie broken by lower Pi.
  EXPECT_EQ(s.normal->params[0].second, "d");
  // Lowest QoS, 86 twice, lower Pi wins.
  EXPECT_EQ(s.high->params[0].second, "e");
}

TEST(SelectParams, OverlayFromCell)
{
  SweepCell c;
  c.params = {{"scheme.params.max_silence_s", "9"}, {"scheme.params.neighborhood_radius_m", "100"}};
  SchemeParams base;
  const auto o = overlay_from(c, base);
  EXPECT_EQ(o.max_silence_s, 9.0);
  EXPECT_EQ(o.neighborhood_radius_m, 100.0);
  EXPECT_EQ(o.max_pseudonym_time_s, base.max_pseudonym_time_s);
}

TEST(Subdatasets, TwoWindows)
{
  SynthConfig sc;
  sc.blocks_x = 2;
  sc.blocks_y = 2;
  sc.vehicle_count = 10;
  sc.duration_s = 1000.0;
  const auto set = generate_synthetic(sc, 1);
  const auto [head, tail] = extract_subdatasets(set);
  ASSERT_FALSE(head.traces.empty());
  ASSERT_FALSE(tail.traces.empty());
  EXPECT_EQ(head.first_step(), set.first_step());
  EXPECT_LT(head.last_step(), set.first_step() + 360);
  EXPECT_EQ(tail.last_step(), set.last_step());
  EXPECT_GT(tail.first_step(), set.last_step() - 360);
  for (const auto & t : head.traces) {
    EXPECT_GE(duration_s(t, 1.0), 60.0);
  }
}

TEST(Profile, StepTimeIsPositive)
{
  SynthConfig sc;
  sc.blocks_x = 2;
  sc.blocks_y = 2;
  sc.vehicle_count = 100;
  sc.duration_s = 30.0;
  SimulationConfig cfg;
  const auto p = profile_step_time(generate_synthetic(sc, 1), cfg, 1);
  EXPECT_GT(p.mean_ms, 0.0);
  EXPECT_GE(p.vehicle_steps, 100u * 30u);
}

}  // namespace
}  // namespace cadsim
