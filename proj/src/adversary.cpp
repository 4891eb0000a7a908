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

#include "cadsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "cadsim/rng.hpp"

namespace cadsim
{

std::vector<TrackRecord> gpa_run(std::span<const BeaconBatch> stream, const TrackerConfig & cfg)
{
  Tracker tracker(cfg);
  std::map<std::uint64_t, TrackRecord> records;
  for (const auto & batch : stream) {
    for (const auto & b : batch.beacons) {
      if (b.step != batch.step) {
        throw std::invalid_argument("beacon step does not match its batch");
      }
    }
    const auto updates = tracker.step(batch.step, batch.beacons);
    for (const auto & u : updates) {
      if (u.kind == TrackUpdate::Kind::kIgnored) {
        continue;
      }
      auto & rec = records[u.track_id];
      rec.track_id = u.track_id;
      rec.history.push_back({batch.step, batch.beacons[u.beacon_index].pseudonym});
    }
  }

  std::vector<TrackRecord> out;
  out.reserve(records.size());
  for (auto & [id, rec] : records) {
    for (const auto & h : rec.history) {
      if (!rec.intervals.empty() &&
        h.step - rec.intervals.back().last_step <= cfg.time_to_live)
      {
        rec.intervals.back().last_step = h.step;
      } else {
        rec.intervals.push_back({h.step, h.step});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void LaaConfig::validate() const
{
  if (fraction_compromised < 0.0 || fraction_compromised > 1.0) {
    throw std::invalid_argument("LAA fraction must lie in [0, 1]");
  }
  if (cycle.active_period_s <= 0.0 || cycle.silent_period_s < 0.0 || victim_radius_m < 0.0 ||
    victim_min_exposure_s < 0.0)
  {
    throw std::invalid_argument("invalid LAA timing or victim parameters");
  }
}

LaaSelection laa_apply(const TraceSet & traces, const LaaConfig & cfg, std::uint64_t seed)
{
  cfg.validate();
  LaaSelection sel;
  const std::size_t n = traces.traces.size();
  // Guard against 0.03 * 3967 landing a hair below 119.01 and similar.
  const auto count = static_cast<std::size_t>(
    std::floor(cfg.fraction_compromised * static_cast<double>(n) + 1e-9));
  if (count == 0) {
    sel.empty_warning = cfg.fraction_compromised > 0.0;
    return sel;
  }
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng = make_rng(seed, Stream::kLaa);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  sel.compromised = std::move(ids);
  return sel;
}

std::vector<std::size_t> find_victims(
  const TraceSet & traces, std::span<const std::size_t> compromised, const EventLog & log,
  const LaaConfig & cfg)
{
  const std::size_t n = traces.traces.size();
  std::vector<bool> is_compromised(n, false);
  for (auto c : compromised) {
    is_compromised.at(c) = true;
  }
  const auto changes = change_counts(log, n);
  const double r2 = cfg.victim_radius_m * cfg.victim_radius_m;
  const double dt = traces.step_duration_s;
  const auto needed = static_cast<std::int64_t>(std::ceil(cfg.victim_min_exposure_s / dt - 1e-9));

  std::vector<std::int64_t> total(n, 0);
  std::vector<std::int64_t> streak(n, 0);
  std::vector<std::int64_t> best_streak(n, 0);
  const double cell = std::max(cfg.victim_radius_m, 1.0);
  auto cell_of = [cell](double v) {return static_cast<std::int64_t>(std::floor(v / cell));};
  auto key = [](std::int64_t cx, std::int64_t cy) {
      return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy);
    };

  for (std::int64_t k = traces.first_step(); k <= traces.last_step() && !compromised.empty(); ++k) {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
    for (auto c : compromised) {
      const auto & t = traces.traces[c];
      if (t.alive_at(k)) {
        const auto & s = t.at(k);
        grid[key(cell_of(s.x), cell_of(s.y))].push_back(c);
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      const auto & t = traces.traces[v];
      if (is_compromised[v] || !t.alive_at(k)) {
        continue;
      }
      const auto & s = t.at(k);
      bool exposed = false;
      const auto cx = cell_of(s.x);
      const auto cy = cell_of(s.y);
      for (std::int64_t dx = -1; dx <= 1 && !exposed; ++dx) {
        for (std::int64_t dy = -1; dy <= 1 && !exposed; ++dy) {
          const auto it = grid.find(key(cx + dx, cy + dy));
          if (it == grid.end()) {
            continue;
          }
          for (auto c : it->second) {
            const auto & o = traces.traces[c].at(k);
            if ((o.x - s.x) * (o.x - s.x) + (o.y - s.y) * (o.y - s.y) <= r2) {
              exposed = true;
              break;
            }
          }
        }
      }
      if (exposed) {
        ++total[v];
        ++streak[v];
        best_streak[v] = std::max(best_streak[v], streak[v]);
      } else {
        streak[v] = 0;
      }
    }
  }

  std::vector<std::size_t> victims;
  for (std::size_t v = 0; v < n; ++v) {
    const auto exposure = cfg.consecutive_exposure ? best_streak[v] : total[v];
    if (!is_compromised[v] && exposure >= needed && changes[v] >= 1) {
      victims.push_back(v);
    }
  }
  return victims;
}

}  // namespace cadsim
