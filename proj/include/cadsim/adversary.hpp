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

#ifndef CADSIM__ADVERSARY_HPP_
#define CADSIM__ADVERSARY_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "cadsim/events.hpp"
#include "cadsim/kalman.hpp"
#include "cadsim/schemes.hpp"
#include "cadsim/trace.hpp"
#include "cadsim/tracker.hpp"

namespace cadsim
{

/// All beacons broadcast during one step. This is everything the global
/// passive adversary gets to see.
struct BeaconBatch
{
  std::int64_t step = 0;
  std::vector<Beacon> beacons;
};

struct TrackHistoryEntry
{
  std::int64_t step = 0;
  Pseudonym pseudonym = 0;
};

struct ActivityInterval
{
  std::int64_t first_step = 0;
  std::int64_t last_step = 0;
};

/// Reconstructed track: which pseudonym fed it at which step.
struct TrackRecord
{
  std::uint64_t track_id = 0;
  std::vector<TrackHistoryEntry> history;
  /// Runs of updates no further apart than time_to_live.
  std::vector<ActivityInterval> intervals;
};

/// Global passive adversary: runs the silence-aware tracker over the whole
/// beacon stream and returns every track ever opened, ordered by id.
std::vector<TrackRecord> gpa_run(std::span<const BeaconBatch> stream, const TrackerConfig & cfg);

struct LaaConfig
{
  double fraction_compromised = 0.0;
  LaaCycle cycle;
  double victim_radius_m = 50.0;
  double victim_min_exposure_s = 15.0;
  /// Count exposure only over uninterrupted stretches.
  bool consecutive_exposure = false;

  void validate() const;
};

struct LaaSelection
{
  /// Sorted indices into TraceSet::traces.
  std::vector<std::size_t> compromised;
  /// fraction * N rounded down to zero although fraction > 0.
  bool empty_warning = false;
};

/// Picks floor(fraction * N) vehicles uniformly at random.
LaaSelection laa_apply(const TraceSet & traces, const LaaConfig & cfg, std::uint64_t seed);

/// Non-compromised vehicles that spent at least victim_min_exposure_s within
/// victim_radius_m of a compromised vehicle and changed pseudonym at least once.
std::vector<std::size_t> find_victims(
  const TraceSet & traces, std::span<const std::size_t> compromised, const EventLog & log,
  const LaaConfig & cfg);

}  // namespace cadsim

#endif  // CADSIM__ADVERSARY_HPP_
