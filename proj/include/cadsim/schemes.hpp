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

#ifndef CADSIM__SCHEMES_HPP_
#define CADSIM__SCHEMES_HPP_

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cadsim/kalman.hpp"
#include "cadsim/rng.hpp"
#include "cadsim/trace.hpp"
#include "cadsim/tracker.hpp"

namespace cadsim
{

enum class SchemeKind { kNone, kPeriodic, kRsp, kCsp, kCaps, kCads };
enum class PrivacyLevel { kLow = 0, kNormal = 1, kHigh = 2 };
enum class Density { kSparse = 0, kDense = 1 };
enum class Mode { kActive, kSilent };
enum class Action { kBeacon, kSilent, kChangePseudonym };
enum class ExitReason { kNone, kConfusion, kMaxSilence, kScheduled };

std::string to_string(SchemeKind kind);
std::string to_string(PrivacyLevel level);
std::string to_string(Density density);
std::string to_string(ExitReason reason);
SchemeKind scheme_from_string(const std::string & name);
PrivacyLevel privacy_level_from_string(const std::string & name);

/// Tunables of the context-aware schemes (CAPS/CADS).
struct SchemeParams
{
  double min_pseudonym_time_s = 60.0;
  double max_pseudonym_time_s = 300.0;
  double min_silence_s = 3.0;
  double max_silence_s = 11.0;
  double neighborhood_radius_m = 50.0;
  /// Silent neighbours needed to follow them into silence; 0 disables.
  int silent_neighbor_threshold = 1;
  double pseudonym_time_increment_s = 0.0;
  double max_gate = kChiSquare4Dof99;
  double comm_range_m = 300.0;
  /// Consecutive missed beacons after which a neighbour counts as silent.
  int missed_beacon_threshold = 2;

  void validate() const;
};

/// Random silent period: fixed pseudonym time, uniform silence.
struct RspParams
{
  double pseudonym_time_s = 120.0;
  double silence_min_s = 3.0;
  double silence_max_s = 13.0;
};

/// Coordinated silent period: network-wide synchronous silence.
struct CspParams
{
  double period_s = 300.0;
  double silence_s = 8.0;
};

/// Standards baseline without silence: change once both the pseudonym time
/// and the driven distance are reached (ETSI: 300 s / 0 m, SAE: 120 s / 1 km).
struct PeriodicParams
{
  double period_s = 300.0;
  double min_distance_m = 0.0;
};

/// Parameters that CADS rebinds per (privacy level, density).
struct CadsOverlay
{
  double max_pseudonym_time_s = 0.0;
  double max_silence_s = 0.0;
  double pseudonym_time_increment_s = 0.0;
  double neighborhood_radius_m = 0.0;

  bool operator==(const CadsOverlay &) const = default;
};

struct CadsTable
{
  /// Indexed [PrivacyLevel][Density].
  std::array<std::array<CadsOverlay, 2>, 3> entries{};

  /// Parameter sets selected on the sparse and dense Cologne sub-datasets.
  static CadsTable published();
  const CadsOverlay & at(PrivacyLevel level, Density density) const
  {
    return entries[static_cast<std::size_t>(level)][static_cast<std::size_t>(density)];
  }
  double max_silence_s() const;
};

struct CadsParams
{
  CadsTable table = CadsTable::published();
  /// Mean neighbour count at or above which traffic is dense.
  double density_threshold = 30.0;
  /// 0 = cumulative mean over the whole history, otherwise a sliding window.
  int density_window_steps = 0;
  /// Keep the base SchemeParams instead of rebinding from the table.
  bool static_params = false;
};

/// Duty cycle of a compromised (LAA) vehicle.
struct LaaCycle
{
  double active_period_s = 5.0;
  double silent_period_s = 3.0;
};

struct SchemeConfig
{
  SchemeKind kind = SchemeKind::kCaps;
  SchemeParams params;
  RspParams rsp;
  CspParams csp;
  PeriodicParams periodic;
  CadsParams cads;

  void validate() const;
  /// Longest silence the scheme can produce, in seconds.
  double max_silence_s() const;
  /// Upper end of the random initial pseudonym age: the nominal pseudonym lifetime.
  double initial_age_bound_s() const;
};

class DensityEstimator
{
public:
  explicit DensityEstimator(int window_steps = 0) : window_(window_steps) {}
  void add(std::size_t neighbour_count);
  bool empty() const { return count_ == 0; }
  double mean() const;

private:
  int window_;
  std::deque<std::size_t> recent_;
  double sum_ = 0.0;
  std::int64_t count_ = 0;
};

struct VehicleSchemeState
{
  std::size_t vehicle = 0;
  Mode mode = Mode::kActive;
  Pseudonym pseudonym = 0;
  Pseudonym first_pseudonym = 0;
  std::uint32_t pseudonym_counter = 0;
  /// Seconds the current pseudonym has been in use at the start of the step.
  double pseudonym_age_s = 0.0;
  int silence_steps = 0;
  double silence_target_s = 0.0;
  double effective_min_pseudonym_time_s = 0.0;
  double distance_since_change_m = 0.0;
  /// True once at least one beacon went out under the current pseudonym.
  bool pseudonym_used = false;
  PrivacyLevel preference = PrivacyLevel::kNormal;
  /// Parameters in force (CADS rebinds them while active).
  SchemeParams active_params;
  Tracker neighbor_tracker;
  /// The vehicle's own beacons as an outside tracker would see them.
  std::optional<KalmanTrack> own_track;
  DensityEstimator density;
  std::uint64_t pseudonyms_used = 1;
  Rng rng;

  double silence_elapsed_s(double dt) const { return silence_steps * dt; }
};

struct Decision
{
  Action action = Action::kBeacon;
  bool silence_started = false;
  ExitReason reason = ExitReason::kNone;
  Pseudonym old_pseudonym = 0;
};

/// Opaque pseudonym ids, strictly increasing per vehicle and unique overall.
Pseudonym make_pseudonym(std::size_t vehicle, std::uint32_t counter);

/// Fresh state with a pseudonym whose age is uniform in [1, initial_age_bound]
/// seconds, so vehicles entering together do not change in lockstep.
VehicleSchemeState init_vehicle(
  std::size_t vehicle, std::uint64_t seed, const SchemeConfig & cfg,
  const TrackerConfig & neighbor_tracker_cfg, PrivacyLevel preference = PrivacyLevel::kNormal);

/// Feeds the beacons heard at `observed_step` to the neighbour tracker and the
/// density estimate.
void observe(VehicleSchemeState & s, std::int64_t observed_step, std::span<const Beacon> received);

/// Number of tracked neighbours within `radius` that missed at least
/// `missed_threshold` consecutive beacons.
int count_silent_neighbors(
  const VehicleSchemeState & s, const TraceSample & own, double radius, int missed_threshold);

/// True iff d2_own exceeds the closest silent neighbour's d2 or the gate.
bool exit_silence_check(double d2_own, std::span<const double> d2_neighbors, double max_gate);

Density estimate_density(const DensityEstimator & history, double threshold = 30.0);

SchemeParams cads_select_params(
  PrivacyLevel level, Density density, const SchemeParams & base,
  const CadsTable & table = CadsTable::published());

Decision none_step(VehicleSchemeState & s, const TraceSample & own, double dt);
Decision periodic_step(
  VehicleSchemeState & s, const TraceSample & own, const PeriodicParams & p, double dt);
Decision rsp_step(VehicleSchemeState & s, const TraceSample & own, const RspParams & p, double dt);
Decision csp_step(
  VehicleSchemeState & s, const TraceSample & own, const CspParams & p, std::int64_t global_step,
  double dt);
Decision caps_step(
  VehicleSchemeState & s, const TraceSample & own, const SchemeParams & p, double dt);
Decision cads_step(
  VehicleSchemeState & s, const TraceSample & own, const SchemeParams & base, const CadsParams & p,
  double dt);
Decision laa_step(
  VehicleSchemeState & s, const TraceSample & own, const LaaCycle & cycle,
  std::int64_t entry_step, double dt);

/// Dispatches on cfg.kind.
Decision scheme_step(
  VehicleSchemeState & s, const TraceSample & own, const SchemeConfig & cfg, double dt);

}  // namespace cadsim

#endif  // CADSIM__SCHEMES_HPP_
