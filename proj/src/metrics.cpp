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

#include "cadsim/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "cadsim/assignment.hpp"

namespace cadsim
{

std::int64_t SegmentMatrix::at(std::size_t vehicle, std::size_t track) const
{
  const auto it = std::lower_bound(
    entries.begin(), entries.end(), std::pair{vehicle, track},
    [](const Entry & e, const std::pair<std::size_t, std::size_t> & k) {
      return std::pair{e.vehicle, e.track} < k;
    });
  if (it != entries.end() && it->vehicle == vehicle && it->track == track) {
    return it->steps;
  }
  return 0;
}

SegmentMatrix SegmentMatrix::from_dense(const std::vector<std::vector<std::int64_t>> & l)
{
  SegmentMatrix m;
  m.vehicles = l.size();
  m.tracks = l.empty() ? 0 : l.front().size();
  for (std::size_t v = 0; v < l.size(); ++v) {
    if (l[v].size() != m.tracks) {
      throw std::invalid_argument("ragged segment matrix");
    }
    for (std::size_t t = 0; t < m.tracks; ++t) {
      if (l[v][t] < 0) {
        throw std::invalid_argument("negative segment length");
      }
      if (l[v][t] > 0) {
        m.entries.push_back({v, t, l[v][t]});
      }
    }
  }
  return m;
}

SegmentMatrix segment_lengths(
  std::span<const TrackRecord> tracks, std::size_t vehicles, const PseudonymOwners & owners,
  std::int64_t gap_tolerance_steps)
{
  SegmentMatrix m;
  m.vehicles = vehicles;
  m.tracks = tracks.size();
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    std::map<std::size_t, std::int64_t> best;
    const auto & h = tracks[j].history;
    std::size_t run_start = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const auto it = owners.find(h[i].pseudonym);
      if (it == owners.end() || it->second >= vehicles) {
        throw std::invalid_argument("track update with unknown pseudonym owner");
      }
      const std::size_t v = it->second;
      if (i > run_start) {
        const std::size_t prev_v = owners.at(h[i - 1].pseudonym);
        if (prev_v != v || h[i].step - h[i - 1].step > gap_tolerance_steps) {
          run_start = i;
        }
      }
      auto & b = best[v];
      b = std::max(b, h[i].step - h[run_start].step + 1);
    }
    for (const auto & [v, steps] : best) {
      m.entries.push_back({v, j, steps});
    }
  }
  std::sort(m.entries.begin(), m.entries.end(), [](const auto & a, const auto & b) {
      return std::pair{a.vehicle, a.track} < std::pair{b.vehicle, b.track};
    });
  return m;
}

std::int64_t Assignment::total() const
{
  std::int64_t s = 0;
  for (auto t : tau_steps) {
    s += t;
  }
  return s;
}

Assignment assign_tracks(const SegmentMatrix & m)
{
  std::vector<BenefitEdge> edges;
  edges.reserve(m.entries.size());
  for (const auto & e : m.entries) {
    edges.push_back({e.track, e.vehicle, e.steps});
  }
  const Matching won = auction_assign(m.tracks, m.vehicles, edges);
  Assignment a;
  a.track_of_vehicle.assign(m.vehicles, std::nullopt);
  a.tau_steps.assign(m.vehicles, 0);
  for (std::size_t t = 0; t < won.size(); ++t) {
    if (won[t]) {
      a.track_of_vehicle[*won[t]] = t;
      a.tau_steps[*won[t]] = m.at(*won[t], t);
    }
  }
  return a;
}

TraceabilityReport traceability_report(
  const Assignment & a, const TraceSet & traces, std::span<const PseudonymSpan> spans)
{
  const std::size_t n = traces.traces.size();
  if (a.tau_steps.size() != n || (!spans.empty() && spans.size() != n)) {
    throw std::invalid_argument("assignment, spans and traces disagree in size");
  }
  TraceabilityReport r;
  r.vehicles = n;
  r.per_vehicle.resize(n);
  std::size_t tracked = 0;
  std::size_t tracked_norm = 0;
  for (std::size_t v = 0; v < n; ++v) {
    auto & pv = r.per_vehicle[v];
    pv.tau_steps = a.tau_steps[v];
    pv.lifetime_steps = traces.traces[v].lifetime_steps();
    pv.tracked = significantly_tracked(pv.tau_steps, pv.lifetime_steps);
    if (!spans.empty()) {
      pv.first_pseudonym = spans[v].first;
      pv.last_pseudonym = spans[v].last;
      pv.tracked_normalized = pv.tracked && spans[v].changed();
    }
    tracked += pv.tracked;
    tracked_norm += pv.tracked_normalized;
  }
  if (n > 0) {
    r.pi = 100.0 * static_cast<double>(tracked) / static_cast<double>(n);
    r.pi_norm = 100.0 * static_cast<double>(tracked_norm) / static_cast<double>(n);
  }
  return r;
}

double traceability(const Assignment & a, const TraceSet & traces)
{
  return traceability_report(a, traces, {}).pi;
}

double normalized_traceability(
  const Assignment & a, const TraceSet & traces, std::span<const PseudonymSpan> spans)
{
  if (spans.size() != traces.traces.size()) {
    throw std::invalid_argument("one pseudonym span per trace required");
  }
  return traceability_report(a, traces, spans).pi_norm;
}

TraceabilityReport group_report(
  const TraceabilityReport & full, std::span<const std::size_t> members)
{
  TraceabilityReport r;
  r.vehicles = members.size();
  std::size_t tracked = 0;
  std::size_t tracked_norm = 0;
  for (auto v : members) {
    const auto & pv = full.per_vehicle.at(v);
    r.per_vehicle.push_back(pv);
    tracked += pv.tracked;
    tracked_norm += pv.tracked_normalized;
  }
  if (!members.empty()) {
    r.pi = 100.0 * static_cast<double>(tracked) / static_cast<double>(members.size());
    r.pi_norm = 100.0 * static_cast<double>(tracked_norm) / static_cast<double>(members.size());
  }
  return r;
}

PseudonymStats pseudonym_stats(
  const EventLog & log, const TraceSet & traces,
  std::optional<std::span<const std::size_t>> concerned)
{
  const std::size_t n = traces.traces.size();
  const auto changes = change_counts(log, n);
  std::vector<std::size_t> members;
  if (concerned) {
    members.assign(concerned->begin(), concerned->end());
  } else {
    for (std::size_t v = 0; v < n; ++v) {
      if (changes[v] > 0) {
        members.push_back(v);
      }
    }
  }
  PseudonymStats st;
  st.concerned = members.size();
  st.empty = members.empty();
  if (st.empty) {
    return st;
  }
  double life = 0.0;
  double ch = 0.0;
  for (auto v : members) {
    const double lifetime =
      static_cast<double>(traces.traces.at(v).last_step() - traces.traces[v].first_step()) *
      traces.step_duration_s;
    life += lifetime / static_cast<double>(changes[v] + 1);
    ch += static_cast<double>(changes[v]);
  }
  st.avg_lifetime_s = life / static_cast<double>(members.size());
  st.changes_per_vehicle = ch / static_cast<double>(members.size());
  return st;
}

double median(std::vector<double> values)
{
  if (values.empty()) {
    return 0.0;
  }
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) {
    return hi;
  }
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

RealizedTimes realized_times(const EventLog & log, std::size_t vehicles, double step_duration_s)
{
  std::vector<std::optional<std::int64_t>> silence_start(vehicles);
  std::vector<std::optional<std::int64_t>> last_change(vehicles);
  std::vector<double> silences;
  std::vector<double> lifetimes;
  for (const auto & e : log) {
    if (e.vehicle >= vehicles) {
      continue;
    }
    if (e.kind == EventKind::kSilenceStart) {
      silence_start[e.vehicle] = e.step;
    } else if (e.kind == EventKind::kPseudonymChange) {
      if (silence_start[e.vehicle]) {
        silences.push_back(static_cast<double>(e.step - *silence_start[e.vehicle]) * step_duration_s);
        silence_start[e.vehicle].reset();
      }
      if (last_change[e.vehicle]) {
        lifetimes.push_back(static_cast<double>(e.step - *last_change[e.vehicle]) * step_duration_s);
      }
      last_change[e.vehicle] = e.step;
    }
  }
  RealizedTimes r;
  r.silences = silences.size();
  r.median_silence_s = median(std::move(silences));
  r.median_pseudonym_time_s = median(std::move(lifetimes));
  return r;
}

}  // namespace cadsim
