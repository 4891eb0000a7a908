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

#ifndef CADSIM__METRICS_HPP_
#define CADSIM__METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cadsim/adversary.hpp"
#include "cadsim/events.hpp"
#include "cadsim/trace.hpp"

namespace cadsim
{

/// Sparse l(v, t) in steps; absent entries are zero.
struct SegmentMatrix
{
  struct Entry
  {
    std::size_t vehicle = 0;
    std::size_t track = 0;
    std::int64_t steps = 0;
  };

  std::size_t vehicles = 0;
  std::size_t tracks = 0;
  std::vector<Entry> entries;  // sorted by (vehicle, track), steps > 0

  std::int64_t at(std::size_t vehicle, std::size_t track) const;
  /// Row v, column t.
  static SegmentMatrix from_dense(const std::vector<std::vector<std::int64_t>> & l);
};

/// Ground-truth owner of each pseudonym; used for scoring only.
using PseudonymOwners = std::unordered_map<Pseudonym, std::size_t>;

/// Longest run per (vehicle, track) in which all of the track's updates come
/// from that vehicle and consecutive updates are at most `gap_tolerance_steps`
/// apart. A run spans first to last update inclusive. Column j is tracks[j].
SegmentMatrix segment_lengths(
  std::span<const TrackRecord> tracks, std::size_t vehicles, const PseudonymOwners & owners,
  std::int64_t gap_tolerance_steps);

struct Assignment
{
  /// Column index of the track assigned to each vehicle.
  std::vector<std::optional<std::size_t>> track_of_vehicle;
  /// tau_v in steps; 0 when unassigned.
  std::vector<std::int64_t> tau_steps;

  std::int64_t total() const;
};

/// Optimal track-to-trace assignment (tracks bid for traces).
Assignment assign_tracks(const SegmentMatrix & m);

/// Integer form of tau / L >= 0.90.
inline bool significantly_tracked(std::int64_t tau_steps, std::int64_t lifetime_steps)
{
  return 10 * tau_steps >= 9 * lifetime_steps;
}

/// Percentage of traces with tau / L >= 0.90, over all N traces.
double traceability(const Assignment & a, const TraceSet & traces);

/// As traceability, but the numerator also requires that the vehicle ended
/// with a different pseudonym than it started with.
double normalized_traceability(
  const Assignment & a, const TraceSet & traces, std::span<const PseudonymSpan> spans);

struct VehicleTraceability
{
  std::int64_t tau_steps = 0;
  std::int64_t lifetime_steps = 0;
  bool tracked = false;
  bool tracked_normalized = false;
  Pseudonym first_pseudonym = 0;
  Pseudonym last_pseudonym = 0;
};

struct TraceabilityReport
{
  double pi = 0.0;
  double pi_norm = 0.0;
  std::size_t vehicles = 0;
  std::vector<VehicleTraceability> per_vehicle;
};

TraceabilityReport traceability_report(
  const Assignment & a, const TraceSet & traces, std::span<const PseudonymSpan> spans);

/// Pi and Pi_n restricted to `members` (N = members.size()).
TraceabilityReport group_report(
  const TraceabilityReport & full, std::span<const std::size_t> members);

struct PseudonymStats
{
  /// Mean over concerned vehicles of lifetime / (changes + 1), seconds.
  double avg_lifetime_s = 0.0;
  double changes_per_vehicle = 0.0;
  std::size_t concerned = 0;
  /// No concerned vehicle; the averages are zero.
  bool empty = true;
};

/// Statistics over `concerned` if given, else over vehicles that changed at
/// least once.
PseudonymStats pseudonym_stats(
  const EventLog & log, const TraceSet & traces,
  std::optional<std::span<const std::size_t>> concerned = std::nullopt);

/// Realised medians from the event log, seconds; 0 when there is no sample.
/// Silence runs from a silence start to the next change of that vehicle;
/// pseudonym time runs between consecutive changes.
struct RealizedTimes
{
  double median_silence_s = 0.0;
  double median_pseudonym_time_s = 0.0;
  std::size_t silences = 0;
};

RealizedTimes realized_times(const EventLog & log, std::size_t vehicles, double step_duration_s);

double median(std::vector<double> values);

}  // namespace cadsim

#endif  // CADSIM__METRICS_HPP_
