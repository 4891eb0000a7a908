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

#ifndef CADSIM__TRACKER_HPP_
#define CADSIM__TRACKER_HPP_

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cadsim/kalman.hpp"

namespace cadsim
{

/// 0.99 quantile of the chi-square distribution with 4 degrees of freedom.
inline constexpr double kChiSquare4Dof99 = 13.2767;

struct TrackerConfig
{
  /// Steps without a beacon before a track turns inactive.
  int time_to_live = 1;
  /// Further steps an inactive track is kept for re-association.
  int max_silence = 13;
  double gate_threshold = kChiSquare4Dof99;
  double process_noise_accel = 2.0;
  double meas_noise_pos = 0.5;
  double meas_noise_vel = 0.25;
  double step_duration_s = 1.0;

  void validate() const;
  KalmanNoise noise() const { return {process_noise_accel, meas_noise_pos, meas_noise_vel}; }
};

struct Match
{
  std::uint64_t track_id = 0;
  std::size_t beacon_index = 0;
};

struct Association
{
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_beacons;
};

/// Global nearest neighbour association.
///
/// Only pairs with d2 <= gate_threshold are admissible. The matching
/// minimises sum(d2) + gate_threshold * (unmatched beacons), i.e. it maximises
/// sum(gate_threshold - d2) over admissible pairs, solved with the auction
/// solver on benefits quantised to 1e-6. Inputs are put in a canonical order
/// first (tracks by id, beacons by pseudonym then position), so the result does
/// not depend on the order of `beacons`. Tracks must already be predicted to
/// the beacons' step.
Association associate(
  std::span<const KalmanTrack> tracks, std::span<const Beacon> beacons, const TrackerConfig & cfg);

/// What happened to one beacon during Tracker::step.
struct TrackUpdate
{
  enum class Kind { kPseudonymMatch, kAssociated, kNewTrack, kIgnored };
  std::size_t beacon_index = 0;
  std::uint64_t track_id = 0;
  Kind kind = Kind::kIgnored;
};

/// Multi-target tracker with the silence-aware lifecycle:
///   1. beacons whose pseudonym belongs to a live track update it directly;
///   2. the rest are associated against inactive tracks only;
///   3. leftovers open new tracks;
///   4. a track unseen for time_to_live steps turns inactive, and is deleted
///      after a further max_silence steps.
class Tracker
{
public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Processes all beacons of `step`. Steps must not decrease.
  std::vector<TrackUpdate> step(std::int64_t step, std::span<const Beacon> beacons);

  /// Coasts every track to `step` without absorbing beacons.
  void predict_to(std::int64_t step);

  const std::vector<KalmanTrack> & tracks() const { return tracks_; }
  const KalmanTrack * find_by_pseudonym(Pseudonym pseudonym) const;
  const KalmanTrack * find_by_id(std::uint64_t id) const;
  const TrackerConfig & config() const { return cfg_; }
  std::int64_t current_step() const { return current_step_; }
  std::uint64_t tracks_created() const { return next_id_; }

private:
  void rebuild_index();

  TrackerConfig cfg_;
  KalmanNoise noise_;
  std::vector<KalmanTrack> tracks_;
  std::unordered_map<Pseudonym, std::size_t> by_pseudonym_;
  std::uint64_t next_id_ = 0;
  std::int64_t current_step_ = 0;
  bool started_ = false;
};

}  // namespace cadsim

#endif  // CADSIM__TRACKER_HPP_
