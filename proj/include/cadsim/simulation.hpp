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

#ifndef CADSIM__SIMULATION_HPP_
#define CADSIM__SIMULATION_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cadsim/adversary.hpp"
#include "cadsim/events.hpp"
#include "cadsim/metrics.hpp"
#include "cadsim/qos.hpp"
#include "cadsim/schemes.hpp"
#include "cadsim/trace.hpp"
#include "cadsim/tracker.hpp"

namespace cadsim
{

/// Percentages of vehicles per privacy level, indexed by PrivacyLevel.
using PreferenceMix = std::array<double, 3>;

std::vector<PrivacyLevel> draw_preferences(
  std::size_t vehicles, const PreferenceMix & mix, std::uint64_t seed);

struct SimulationConfig
{
  SchemeConfig scheme;
  /// Tracker run by every vehicle on the beacons it hears.
  TrackerConfig neighbor_tracker;
  PreferenceMix preference_mix{0.0, 100.0, 0.0};
  std::optional<LaaConfig> laa;
  bool collect_errors = true;
  bool profile = false;
};

struct StepProfile
{
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t vehicle_steps = 0;
  /// Mean number of beacons heard per vehicle-step.
  double mean_neighbors = 0.0;
};

struct SimulationResult
{
  EventLog events;
  /// Everything broadcast, one batch per step; the adversary's input.
  std::vector<BeaconBatch> beacons;
  PseudonymOwners owners;
  std::vector<PseudonymSpan> spans;
  std::vector<PrivacyLevel> preferences;
  std::vector<std::size_t> compromised;
  bool laa_empty_warning = false;
  ErrorSamples errors;
  std::optional<StepProfile> profile;
};

/// Steps every vehicle through its trace.
///
/// At step k a vehicle first hears the beacons sent at k-1 by others within
/// comm_range of its position at k, then decides, then broadcasts. Error
/// samples compare each vehicle's freshest track of every true neighbour
/// within comm_range at k-1 against that neighbour's ground truth at k-1.
SimulationResult simulate(const TraceSet & traces, const SimulationConfig & cfg, std::uint64_t seed);

}  // namespace cadsim

#endif  // CADSIM__SIMULATION_HPP_
