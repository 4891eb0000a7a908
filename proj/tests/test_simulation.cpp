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

#include <algorithm>
#include <cmath>
#include <map>

#include "cadsim/adversary.hpp"
#include "cadsim/metrics.hpp"
#include "cadsim/simulation.hpp"

namespace cadsim
{
namespace
{

Trace straight(const std::string & id, double x0, double y0, double vx, std::int64_t steps)
{
  Trace t;
  t.vehicle_id = id;
  for (std::int64_t k = 0; k < steps; ++k) {
    TraceSample s;
    s.step = k;
    s.x = x0 + vx * static_cast<double>(k);
    s.y = y0;
    s.speed = std::abs(vx);
    s.heading = vx >= 0.0 ? 0.0 : M_PI;
    t.samples.push_back(s);
  }
  return t;
}

TraceSet set_of(std::vector<Trace> traces)
{
  TraceSet set;
  set.traces = std::move(traces);
  set.has_kinematics = true;
  set.recompute_bounds();
  return set;
}

SimulationConfig none_config()
{
  SimulationConfig cfg;
  cfg.scheme.kind = SchemeKind::kNone;
  return cfg;
}

TraceSet small_grid(std::uint64_t seed, int vehicles = 40, double duration = 300.0)
{
  SynthConfig sc;
  sc.blocks_x = 3;
  sc.blocks_y = 3;
  sc.vehicle_count = vehicles;
  sc.duration_s = duration;
  return generate_synthetic(sc, seed);
}

TEST(Simulation, HearsOnlyLastStepWithinRange)
{
  // A and B are 200 m apart; C is 320 m beyond B.
  const auto set = set_of(
    {straight("A", 0, 0, 0, 10), straight("B", 200, 0, 0, 10), straight("C", 520, 0, 0, 10)});
  auto cfg = none_config();
  cfg.profile = true;
  const auto r = simulate(set, cfg, 1);
  ASSERT_TRUE(r.profile.has_value());
  EXPECT_EQ(r.profile->vehicle_steps, 30u);
  // Nothing is heard at step 0; A and B hear each other on steps 1..9.
  EXPECT_DOUBLE_EQ(r.profile->mean_neighbors, 18.0 / 30.0);
  EXPECT_EQ(r.errors.size(), 18u);
}

TEST(Simulation, NoiselessConstantVelocityErrorsVanish)
{
  const auto set = set_of(
    {straight("A", 0, 0, 12, 60), straight("B", -30, 0, 12, 60), straight("C", 100, 3.6, -9, 60)});
  const auto r = simulate(set, none_config(), 2);
  ASSERT_FALSE(r.errors.empty());
  for (std::size_t i = 0; i < r.errors.size(); ++i) {
    EXPECT_LT(std::abs(r.errors.dx[i]), 0.05);
    EXPECT_LT(std::abs(r.errors.dy[i]), 0.05);
    EXPECT_LT(std::abs(r.errors.dxdot[i]), 0.05);
  }
}

TEST(Simulation, ErrorCollectionCanBeDisabled)
{
  auto cfg = none_config();
  cfg.collect_errors = false;
  const auto set = set_of({straight("A", 0, 0, 12, 20), straight("B", 50, 0, 12, 20)});
  EXPECT_TRUE(simulate(set, cfg, 2).errors.empty());
}

TEST(Simulation, BatchesCarryEveryStep)
{
  const auto set = set_of({straight("A", 0, 0, 12, 20), straight("B", 50, 0, 12, 20)});
  const auto r = simulate(set, none_config(), 2);
  ASSERT_EQ(r.beacons.size(), 20u);
  for (std::size_t k = 0; k < r.beacons.size(); ++k) {
    EXPECT_EQ(r.beacons[k].step, static_cast<std::int64_t>(k));
    EXPECT_EQ(r.beacons[k].beacons.size(), 2u);
  }
}

// Silence runs from a silence start to the vehicle's next change.
void expect_quiet_while_silent(const SimulationResult & r)
{
  std::map<std::size_t, std::vector<std::pair<std::int64_t, std::int64_t>>> silent;
  std::map<std::size_t, std::int64_t> open;
  for (const auto & e : r.events) {
    if (e.kind == EventKind::kSilenceStart) {
      open[e.vehicle] = e.step;
    } else if (e.kind == EventKind::kPseudonymChange && open.count(e.vehicle)) {
      silent[e.vehicle].emplace_back(open[e.vehicle], e.step - 1);
      open.erase(e.vehicle);
    } else if (e.kind == EventKind::kLeave && open.count(e.vehicle)) {
      silent[e.vehicle].emplace_back(open[e.vehicle], e.step);
      open.erase(e.vehicle);
    }
  }
  std::size_t checked = 0;
  for (const auto & batch : r.beacons) {
    for (const auto & b : batch.beacons) {
      const std::size_t v = r.owners.at(b.pseudonym);
      for (const auto & [from, to] : silent[v]) {
        EXPECT_FALSE(batch.step >= from && batch.step <= to)
          << "vehicle " << v << " beaconed at " << batch.step;
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Simulation, NoBeaconsWhileSilent)
{
  const auto set = small_grid(5);
  for (auto kind : {SchemeKind::kRsp, SchemeKind::kCsp, SchemeKind::kCaps, SchemeKind::kCads}) {
    SimulationConfig cfg;
    cfg.scheme.kind = kind;
    const auto r = simulate(set, cfg, 3);
    expect_quiet_while_silent(r);
    EXPECT_GT(std::count_if(r.events.begin(), r.events.end(),
      [](const SchemeEvent & e) {return e.kind == EventKind::kSilenceStart;}), 0)
      << to_string(kind);
  }
}

TEST(Simulation, CapsSilencesWithinBounds)
{
  const auto set = small_grid(6);
  SimulationConfig cfg;
  cfg.scheme.kind = SchemeKind::kCaps;
  const auto r = simulate(set, cfg, 3);
  std::map<std::size_t, std::int64_t> open;
  std::size_t seen = 0;
  for (const auto & e : r.events) {
    if (e.kind == EventKind::kSilenceStart) {
      open[e.vehicle] = e.step;
    } else if (e.kind == EventKind::kPseudonymChange && open.count(e.vehicle)) {
      const auto length = e.step - open[e.vehicle];
      EXPECT_GE(length, 3);
      EXPECT_LE(length, 11);
      open.erase(e.vehicle);
      ++seen;
    }
  }
  EXPECT_GT(seen, 0u);
}

TEST(Simulation, PseudonymsStrictlyIncreasePerVehicle)
{
  SimulationConfig cfg;
  cfg.scheme.kind = SchemeKind::kRsp;
  const auto r = simulate(small_grid(7), cfg, 3);
  for (const auto & e : r.events) {
    if (e.kind == EventKind::kPseudonymChange) {
      EXPECT_GT(e.new_pseudonym, e.old_pseudonym);
    }
  }
  std::map<Pseudonym, std::size_t> seen;
  for (const auto & [p, v] : r.owners) {
    EXPECT_TRUE(seen.emplace(p, v).second);
  }
}

TEST(Simulation, NoChangeBaselineIsFullyTraceable)
{
  const auto set = small_grid(8);
  const auto r = simulate(set, none_config(), 4);
  TrackerConfig adversary;
  adversary.max_silence = 0;
  const auto tracks = gpa_run(r.beacons, adversary);
  const auto m = segment_lengths(tracks, set.traces.size(), r.owners, 1);
  const auto a = assign_tracks(m);
  EXPECT_DOUBLE_EQ(traceability(a, set), 100.0);
  EXPECT_DOUBLE_EQ(normalized_traceability(a, set, r.spans), 0.0);
}

TEST(Simulation, DeterministicPerSeed)
{
  const auto set = small_grid(9);
  SimulationConfig cfg;
  cfg.scheme.kind = SchemeKind::kCads;
  const auto a = simulate(set, cfg, 5);
  const auto b = simulate(set, cfg, 5);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.errors.dy, b.errors.dy);
  const auto c = simulate(set, cfg, 6);
  EXPECT_NE(a.events, c.events);
}

TEST(Simulation, LaaWithZeroFractionChangesNothing)
{
  const auto set = small_grid(10);
  SimulationConfig cfg;
  cfg.scheme.kind = SchemeKind::kCads;
  const auto plain = simulate(set, cfg, 5);
  cfg.laa = LaaConfig{};
  const auto laa = simulate(set, cfg, 5);
  EXPECT_EQ(plain.events, laa.events);
  EXPECT_TRUE(laa.compromised.empty());
}

TEST(Simulation, CompromisedVehiclesFollowTheCycle)
{
  const auto set = small_grid(11);
  SimulationConfig cfg;
  cfg.scheme.kind = SchemeKind::kCads;
  LaaConfig laa;
  laa.fraction_compromised = 0.1;
  cfg.laa = laa;
  const auto r = simulate(set, cfg, 5);
  ASSERT_EQ(r.compromised.size(), 4u);
  const auto c = r.compromised.front();
  const auto entry = set.traces[c].first_step();
  for (const auto & e : r.events) {
    if (e.vehicle == c && e.kind == EventKind::kPseudonymChange) {
      EXPECT_EQ((e.step - entry) % 8, 0);
    }
  }
}

TEST(Preferences, MixAndValidation)
{
  const auto p = draw_preferences(4000, {25.0, 0.0, 75.0}, 3);
  const auto low = std::count(p.begin(), p.end(), PrivacyLevel::kLow);
  const auto high = std::count(p.begin(), p.end(), PrivacyLevel::kHigh);
  EXPECT_EQ(low + high, 4000);
  EXPECT_NEAR(static_cast<double>(low) / 4000.0, 0.25, 0.03);
  EXPECT_EQ(draw_preferences(10, {0, 100, 0}, 3), std::vector<PrivacyLevel>(10, PrivacyLevel::kNormal));
  EXPECT_THROW(draw_preferences(3, {50, 10, 10}, 1), std::invalid_argument);
  EXPECT_THROW(draw_preferences(3, {-10, 100, 10}, 1), std::invalid_argument);
}

}  // namespace
}  // namespace cadsim
