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
#include <vector>

#include "cadsim/schemes.hpp"

namespace cadsim
{
namespace
{

TraceSample at(std::int64_t step, double x, double y = 0.0, double speed = 0.0)
{
  TraceSample t;
  t.step = step;
  t.x = x;
  t.y = y;
  t.speed = speed;
  t.heading = 0.0;
  return t;
}

Beacon beacon_from(Pseudonym p, const TraceSample & t)
{
  return Beacon{p, t.step, t.x, t.y, t.speed, t.heading};
}

SchemeConfig config_of(SchemeKind kind)
{
  SchemeConfig cfg;
  cfg.kind = kind;
  return cfg;
}

TEST(InitVehicle, AgeWithinBounds)
{
  const auto cfg = config_of(SchemeKind::kCaps);
  for (std::size_t v = 0; v < 500; ++v) {
    const auto s = init_vehicle(v, 3, cfg, TrackerConfig{});
    EXPECT_GE(s.pseudonym_age_s, 1.0);
    EXPECT_LE(s.pseudonym_age_s, cfg.params.max_pseudonym_time_s);
    EXPECT_EQ(s.mode, Mode::kActive);
    EXPECT_EQ(s.pseudonym, s.first_pseudonym);
  }
}

TEST(InitVehicle, DifferentSeedsGiveDifferentAges)
{
  const auto cfg = config_of(SchemeKind::kCaps);
  EXPECT_NE(
    init_vehicle(0, 1, cfg, TrackerConfig{}).pseudonym_age_s,
    init_vehicle(0, 2, cfg, TrackerConfig{}).pseudonym_age_s);
}

TEST(InitVehicle, AgesAreUniformKolmogorovSmirnov)
{
  const auto cfg = config_of(SchemeKind::kCaps);
  const std::size_t n = 10000;
  std::vector<double> u;
  for (std::size_t v = 0; v < n; ++v) {
    u.push_back((init_vehicle(v, 11, cfg, TrackerConfig{}).pseudonym_age_s - 1.0) / 299.0);
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, u[i] - lo, hi - u[i]});
  }
  // Asymptotic Kolmogorov critical value at alpha = 0.01.
  EXPECT_LT(d * std::sqrt(static_cast<double>(n)), 1.6276);
}

TEST(Pseudonyms, StrictlyIncreasingPerVehicleAndUnique)
{
  EXPECT_LT(make_pseudonym(3, 0), make_pseudonym(3, 1));
  EXPECT_NE(make_pseudonym(3, 0), make_pseudonym(4, 0));
  EXPECT_NE(make_pseudonym(0, 1), make_pseudonym(1, 0));
}

TEST(Rsp, BeaconsBeforePseudonymTime)
{
  const auto cfg = config_of(SchemeKind::kRsp);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  s.pseudonym_age_s = 50.0;
  EXPECT_EQ(rsp_step(s, at(0, 0), cfg.rsp, 1.0).action, Action::kBeacon);
}

TEST(Rsp, SilenceThenChange)
{
  const auto cfg = config_of(SchemeKind::kRsp);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  s.pseudonym_age_s = 120.0;
  const Pseudonym old = s.pseudonym;
  const auto d = rsp_step(s, at(0, 0), cfg.rsp, 1.0);
  EXPECT_EQ(d.action, Action::kSilent);
  EXPECT_TRUE(d.silence_started);
  EXPECT_GE(s.silence_target_s, 3.0);
  EXPECT_LE(s.silence_target_s, 13.0);
  int silent_steps = 1;
  for (std::int64_t k = 1; k < 20; ++k) {
    const auto e = rsp_step(s, at(k, 0), cfg.rsp, 1.0);
    if (e.action == Action::kChangePseudonym) {
      EXPECT_NE(s.pseudonym, old);
      EXPECT_GT(s.pseudonym, old);
      EXPECT_DOUBLE_EQ(s.pseudonym_age_s, 1.0);  // reset, then one step of use
      break;
    }
    ASSERT_EQ(e.action, Action::kSilent);
    ++silent_steps;
  }
  EXPECT_EQ(silent_steps, static_cast<int>(std::ceil(s.silence_target_s)));
}

TEST(Rsp, SilencePeriodsStayInRange)
{
  const auto cfg = config_of(SchemeKind::kRsp);
  for (std::size_t v = 0; v < 50; ++v) {
    auto s = init_vehicle(v, 9, cfg, TrackerConfig{});
    int run = 0;
    for (std::int64_t k = 0; k < 1000; ++k) {
      const auto d = rsp_step(s, at(k, 0), cfg.rsp, 1.0);
      if (d.action == Action::kSilent) {
        ++run;
      } else if (run > 0) {
        EXPECT_GE(run, 3);
        EXPECT_LE(run, 13);
        run = 0;
      }
    }
  }
}

TEST(Csp, SynchronousWindow)
{
  const auto cfg = config_of(SchemeKind::kCsp);
  auto a = init_vehicle(0, 1, cfg, TrackerConfig{});
  auto b = init_vehicle(1, 1, cfg, TrackerConfig{});
  for (std::int64_t k = 250; k < 620; ++k) {
    const auto da = csp_step(a, at(k, 0), cfg.csp, k, 1.0);
    const auto db = csp_step(b, at(k, 0), cfg.csp, k, 1.0);
    EXPECT_EQ(da.action, db.action) << "step " << k;
    const bool window = (k >= 300 && k < 308) || (k >= 600 && k < 608);
    if (window) {
      EXPECT_EQ(da.action, Action::kSilent) << "step " << k;
      EXPECT_EQ(da.silence_started, k == 300 || k == 600);
    } else if (k == 308 || k == 608) {
      EXPECT_EQ(da.action, Action::kChangePseudonym) << "step " << k;
    } else {
      EXPECT_EQ(da.action, Action::kBeacon) << "step " << k;
    }
  }
  EXPECT_EQ(a.pseudonym_counter, 2u);
}

TEST(Csp, StepZeroIsNotAWindow)
{
  const auto cfg = config_of(SchemeKind::kCsp);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  EXPECT_EQ(csp_step(s, at(0, 0), cfg.csp, 0, 1.0).action, Action::kBeacon);
}

TEST(Periodic, ChangesOnceTimeAndDistanceReached)
{
  auto cfg = config_of(SchemeKind::kPeriodic);
  cfg.periodic = {120.0, 1000.0};
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  s.pseudonym_age_s = 0.0;
  std::int64_t change_at = -1;
  for (std::int64_t k = 0; k < 300 && change_at < 0; ++k) {
    if (periodic_step(s, at(k, 5.0 * k, 0, 5.0), cfg.periodic, 1.0).action ==
      Action::kChangePseudonym)
    {
      change_at = k;
    }
  }
  EXPECT_EQ(change_at, 200);  // 1 km at 5 m/s outlasts 120 s
}

TEST(ExitSilence, Conditions)
{
  const double n3[] = {3.0};
  EXPECT_TRUE(exit_silence_check(5.0, n3, 13.28));
  EXPECT_FALSE(exit_silence_check(2.0, n3, 13.28));
  EXPECT_TRUE(exit_silence_check(14.0, {}, 13.28));
  EXPECT_FALSE(exit_silence_check(10.0, {}, 13.28));
  const double several[] = {9.0, 4.0, 20.0};
  EXPECT_TRUE(exit_silence_check(4.5, several, 13.28));
}

class CapsScenario : public ::testing::Test
{
protected:
  SchemeConfig cfg = config_of(SchemeKind::kCaps);
  VehicleSchemeState s = init_vehicle(0, 1, cfg, TrackerConfig{});
  TraceSample neighbour = at(0, 10.0, 5.0);

  void hear_neighbour_until(std::int64_t last_heard, std::int64_t now)
  {
    for (std::int64_t k = 0; k <= now; ++k) {
      neighbour.step = k;
      if (k <= last_heard) {
        const Beacon b[] = {beacon_from(777, neighbour)};
        observe(s, k, b);
      } else {
        observe(s, k, {});
      }
    }
  }
};

TEST_F(CapsScenario, YoungPseudonymKeepsBeaconing)
{
  s.pseudonym_age_s = 30.0;
  hear_neighbour_until(1, 3);
  EXPECT_EQ(caps_step(s, at(4, 0), cfg.params, 1.0).action, Action::kBeacon);
}

TEST_F(CapsScenario, SilentNeighbourTriggersSilence)
{
  s.pseudonym_age_s = 70.0;
  hear_neighbour_until(1, 3);
  const auto d = caps_step(s, at(4, 0), cfg.params, 1.0);
  EXPECT_EQ(d.action, Action::kSilent);
  EXPECT_TRUE(d.silence_started);
}

TEST_F(CapsScenario, OneMissedBeaconIsNotSilence)
{
  s.pseudonym_age_s = 70.0;
  hear_neighbour_until(2, 3);
  EXPECT_EQ(caps_step(s, at(4, 0), cfg.params, 1.0).action, Action::kBeacon);
}

TEST_F(CapsScenario, DistantSilentNeighbourIgnored)
{
  s.pseudonym_age_s = 70.0;
  neighbour.x = 80.0;
  hear_neighbour_until(1, 3);
  EXPECT_EQ(caps_step(s, at(4, 0), cfg.params, 1.0).action, Action::kBeacon);
}

TEST_F(CapsScenario, MaxPseudonymTimeForcesSilence)
{
  s.pseudonym_age_s = 300.0;
  EXPECT_EQ(caps_step(s, at(0, 0), cfg.params, 1.0).action, Action::kSilent);
}

// Drives a lone vehicle along x at 10 m/s until it falls silent at step 5.
// Returns the decisions of steps 0..last, with the position at step `jump_at`
// displaced laterally by `jump` metres.
std::vector<Decision> lone_run(
  VehicleSchemeState & s, const SchemeConfig & cfg, std::int64_t last, std::int64_t jump_at,
  double jump)
{
  std::vector<Decision> out;
  for (std::int64_t k = 0; k <= last; ++k) {
    const double y = k >= jump_at ? jump : 0.0;
    out.push_back(scheme_step(s, at(k, 10.0 * k, y, 10.0), cfg, 1.0));
  }
  return out;
}

TEST(Caps, LargeOwnResidualExitsWithNewPseudonym)
{
  auto cfg = config_of(SchemeKind::kCaps);
  cfg.params.min_pseudonym_time_s = 5.0;
  cfg.params.max_pseudonym_time_s = 5.0;
  cfg.params.pseudonym_time_increment_s = 60.0;
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  s.pseudonym_age_s = 0.0;
  s.effective_min_pseudonym_time_s = 5.0;
  const Pseudonym old = s.pseudonym;
  const auto d = lone_run(s, cfg, 8, 8, 30.0);
  EXPECT_EQ(d[5].action, Action::kSilent);
  EXPECT_TRUE(d[5].silence_started);
  EXPECT_EQ(d[7].action, Action::kSilent);
  EXPECT_EQ(d[8].action, Action::kChangePseudonym);
  EXPECT_EQ(d[8].reason, ExitReason::kConfusion);
  EXPECT_EQ(d[8].old_pseudonym, old);
  EXPECT_NE(s.pseudonym, old);
  // Capped at the maximum pseudonym time.
  EXPECT_DOUBLE_EQ(s.effective_min_pseudonym_time_s, 5.0);
}

TEST(Caps, PredictableVehicleWaitsForMaxSilence)
{
  auto cfg = config_of(SchemeKind::kCaps);
  cfg.params.min_pseudonym_time_s = 5.0;
  cfg.params.max_pseudonym_time_s = 5.0;
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  s.pseudonym_age_s = 0.0;
  s.effective_min_pseudonym_time_s = 5.0;
  const auto d = lone_run(s, cfg, 20, 1000, 0.0);
  int silent = 0;
  for (std::int64_t k = 5; k < 16; ++k) {
    silent += d[k].action == Action::kSilent;
  }
  EXPECT_EQ(silent, 11);
  EXPECT_EQ(d[16].action, Action::kChangePseudonym);
  EXPECT_EQ(d[16].reason, ExitReason::kMaxSilence);
}

TEST(Caps, NeverBeaconedCountsAsConfusion)
{
  auto cfg = config_of(SchemeKind::kCaps);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{});
  s.mode = Mode::kSilent;
  s.silence_steps = 3;
  const auto d = caps_step(s, at(0, 0), cfg.params, 1.0);
  EXPECT_EQ(d.action, Action::kChangePseudonym);
  EXPECT_EQ(d.reason, ExitReason::kConfusion);
}

TEST(Cads, SelectParamsTable)
{
  const SchemeParams base;
  const auto ns = cads_select_params(PrivacyLevel::kNormal, Density::kSparse, base);
  EXPECT_EQ(ns.max_pseudonym_time_s, 300.0);
  EXPECT_EQ(ns.max_silence_s, 11.0);
  EXPECT_EQ(ns.pseudonym_time_increment_s, 60.0);
  EXPECT_EQ(ns.neighborhood_radius_m, 100.0);
  const auto hd = cads_select_params(PrivacyLevel::kHigh, Density::kDense, base);
  EXPECT_EQ(hd.max_pseudonym_time_s, 180.0);
  EXPECT_EQ(hd.max_silence_s, 11.0);
  EXPECT_EQ(hd.pseudonym_time_increment_s, 0.0);
  EXPECT_EQ(hd.neighborhood_radius_m, 100.0);
  const auto ld = cads_select_params(PrivacyLevel::kLow, Density::kDense, base);
  EXPECT_EQ(ld.max_pseudonym_time_s, 240.0);
  EXPECT_EQ(ld.max_silence_s, 11.0);
  EXPECT_EQ(ld.pseudonym_time_increment_s, 60.0);
  EXPECT_EQ(ld.neighborhood_radius_m, 50.0);
  // Untouched fields come from the base.
  EXPECT_EQ(ld.min_pseudonym_time_s, base.min_pseudonym_time_s);
  EXPECT_EQ(ld.min_silence_s, base.min_silence_s);
}

TEST(Cads, SilentNeighbourThresholdAtLeastOne)
{
  SchemeParams base;
  base.silent_neighbor_threshold = 0;
  EXPECT_EQ(cads_select_params(PrivacyLevel::kLow, Density::kSparse, base).silent_neighbor_threshold, 1);
}

DensityEstimator density_of(double value, int n)
{
  DensityEstimator e;
  for (int i = 0; i < n; ++i) {
    e.add(static_cast<std::size_t>(value));
  }
  return e;
}

TEST(Cads, EstimateDensity)
{
  EXPECT_EQ(estimate_density(density_of(25, 10)), Density::kSparse);
  EXPECT_EQ(estimate_density(density_of(68, 10)), Density::kDense);
  EXPECT_EQ(estimate_density(density_of(30, 10)), Density::kDense);
  EXPECT_EQ(estimate_density(DensityEstimator{}), Density::kSparse);
}

TEST(Cads, SlidingWindowForgets)
{
  DensityEstimator e(3);
  for (int i = 0; i < 100; ++i) {
    e.add(100);
  }
  for (int i = 0; i < 3; ++i) {
    e.add(10);
  }
  EXPECT_DOUBLE_EQ(e.mean(), 10.0);
}

VehicleSchemeState confused_cads(PrivacyLevel level)
{
  auto cfg = config_of(SchemeKind::kCads);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{}, level);
  s.pseudonym_age_s = 0.0;
  // Silence starts at the table's max pseudonym time; jump right after min silence.
  const std::int64_t start = static_cast<std::int64_t>(
    cads_select_params(level, Density::kSparse, cfg.params).max_pseudonym_time_s);
  for (std::int64_t k = 0; k <= start + 3; ++k) {
    const double y = k == start + 3 ? 40.0 : 0.0;
    const auto d = scheme_step(s, at(k, 10.0 * k, y, 10.0), cfg, 1.0);
    if (k == start + 3) {
      EXPECT_EQ(d.reason, ExitReason::kConfusion);
    }
  }
  return s;
}

TEST(Cads, ConfusionRaisesMinPseudonymTime)
{
  EXPECT_DOUBLE_EQ(confused_cads(PrivacyLevel::kNormal).effective_min_pseudonym_time_s, 120.0);
  EXPECT_DOUBLE_EQ(confused_cads(PrivacyLevel::kHigh).effective_min_pseudonym_time_s, 60.0);
}

TEST(Cads, DensityFlipRebindsParams)
{
  auto cfg = config_of(SchemeKind::kCads);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{}, PrivacyLevel::kNormal);
  s.pseudonym_age_s = 0.0;
  s.density = density_of(25, 20);
  cads_step(s, at(0, 0), cfg.params, cfg.cads, 1.0);
  EXPECT_EQ(s.active_params.max_pseudonym_time_s, 300.0);
  for (int i = 0; i < 40; ++i) {
    s.density.add(68);
  }
  cads_step(s, at(1, 0), cfg.params, cfg.cads, 1.0);
  EXPECT_EQ(s.active_params.max_pseudonym_time_s, 180.0);
}

TEST(Cads, ParamsFrozenWhileSilent)
{
  auto cfg = config_of(SchemeKind::kCads);
  auto s = init_vehicle(0, 1, cfg, TrackerConfig{}, PrivacyLevel::kNormal);
  s.density = density_of(25, 20);
  cads_step(s, at(0, 0), cfg.params, cfg.cads, 1.0);
  s.mode = Mode::kSilent;
  s.silence_steps = 1;
  for (int i = 0; i < 40; ++i) {
    s.density.add(68);
  }
  cads_step(s, at(1, 0), cfg.params, cfg.cads, 1.0);
  EXPECT_EQ(s.active_params.max_pseudonym_time_s, 300.0);
}

TEST(Cads, StaticParamsReduceToCaps)
{
  auto caps = config_of(SchemeKind::kCaps);
  caps.params.min_pseudonym_time_s = 5.0;
  caps.params.max_pseudonym_time_s = 5.0;
  auto cads = caps;
  cads.kind = SchemeKind::kCads;
  cads.cads.static_params = true;
  auto a = init_vehicle(0, 1, caps, TrackerConfig{});
  auto b = init_vehicle(0, 1, cads, TrackerConfig{});
  EXPECT_EQ(a.pseudonym_age_s, b.pseudonym_age_s);
  a.pseudonym_age_s = b.pseudonym_age_s = 0.0;
  for (std::int64_t k = 0; k < 60; ++k) {
    const auto t = at(k, 10.0 * k, (k % 17 == 9) ? 30.0 : 0.0, 10.0);
    const auto da = scheme_step(a, t, caps, 1.0);
    const auto db = scheme_step(b, t, cads, 1.0);
    EXPECT_EQ(da.action, db.action) << "step " << k;
    EXPECT_EQ(da.reason, db.reason) << "step " << k;
    EXPECT_EQ(a.pseudonym, b.pseudonym);
  }
}

TEST(SchemeConfig, MaxSilence)
{
  auto cfg = config_of(SchemeKind::kRsp);
  EXPECT_EQ(cfg.max_silence_s(), 13.0);
  cfg.kind = SchemeKind::kCads;
  EXPECT_EQ(cfg.max_silence_s(), 13.0);
  cfg.kind = SchemeKind::kNone;
  EXPECT_EQ(cfg.max_silence_s(), 0.0);
}

TEST(SchemeConfig, RejectsInvalid)
{
  auto cfg = config_of(SchemeKind::kCaps);
  cfg.params.min_silence_s = 20.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = config_of(SchemeKind::kCsp);
  cfg.csp.silence_s = 400.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(scheme_from_string("bogus"), std::invalid_argument);
  EXPECT_EQ(scheme_from_string("cads"), SchemeKind::kCads);
}

}  // namespace
}  // namespace cadsim
