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

#include "cadsim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cadsim/rng.hpp"

namespace cadsim
{

namespace
{

/// Uniform grid over the points of one step; cells are comm_range wide.
class Grid
{
public:
  explicit Grid(double cell) : cell_(cell > 0.0 ? cell : 1.0) {}

  void insert(std::size_t id, double x, double y) { cells_[key(cx(x), cx(y))].push_back(id); }

  template<typename Fn>
  void for_near(double x, double y, Fn fn) const
  {
    const auto gx = cx(x);
    const auto gy = cx(y);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find(key(gx + dx, gy + dy));
        if (it != cells_.end()) {
          for (auto id : it->second) {
            fn(id);
          }
        }
      }
    }
  }

private:
  std::int64_t cx(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t a, std::int64_t b)
  {
    return (static_cast<std::uint64_t>(a) << 32) ^ static_cast<std::uint32_t>(b);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

double dist2(const TraceSample & a, double x, double y)
{
  return (a.x - x) * (a.x - x) + (a.y - y) * (a.y - y);
}

}  // namespace

std::vector<PrivacyLevel> draw_preferences(
  std::size_t vehicles, const PreferenceMix & mix, std::uint64_t seed)
{
  double total = 0.0;
  for (double w : mix) {
    if (w < 0.0) {
      throw std::invalid_argument("preference weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 100.0) > 1e-6) {
    throw std::invalid_argument("preference weights must sum to 100");
  }
  std::size_t last_nonzero = 0;
  for (std::size_t l = 0; l < mix.size(); ++l) {
    if (mix[l] > 0.0) {
      last_nonzero = l;
    }
  }
  std::vector<PrivacyLevel> out(vehicles, static_cast<PrivacyLevel>(last_nonzero));
  for (std::size_t v = 0; v < vehicles; ++v) {
    Rng rng = make_rng(seed, Stream::kPreference, v);
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    for (std::size_t l = 0; l < mix.size(); ++l) {
      acc += mix[l];
      if (mix[l] > 0.0 && u < acc) {
        out[v] = static_cast<PrivacyLevel>(l);
        break;
      }
    }
  }
  return out;
}

SimulationResult simulate(const TraceSet & traces, const SimulationConfig & cfg, std::uint64_t seed)
{
  cfg.scheme.validate();
  cfg.neighbor_tracker.validate();
  const std::size_t n = traces.traces.size();
  const double dt = traces.step_duration_s;
  const double range = cfg.scheme.params.comm_range_m;
  const double range2 = range * range;

  SimulationResult res;
  res.preferences = draw_preferences(n, cfg.preference_mix, seed);
  std::vector<bool> compromised(n, false);
  if (cfg.laa) {
    const LaaSelection sel = laa_apply(traces, *cfg.laa, seed);
    res.compromised = sel.compromised;
    res.laa_empty_warning = sel.empty_warning;
    for (auto c : sel.compromised) {
      compromised[c] = true;
    }
  }
  res.spans.resize(n);
  if (n == 0) {
    return res;
  }

  std::vector<std::optional<VehicleSchemeState>> states(n);
  std::vector<std::vector<std::size_t>> starting;
  const std::int64_t first = traces.first_step();
  const std::int64_t last = traces.last_step();
  starting.resize(static_cast<std::size_t>(last - first + 1));
  for (std::size_t v = 0; v < n; ++v) {
    starting[static_cast<std::size_t>(traces.traces[v].first_step() - first)].push_back(v);
  }

  std::vector<std::size_t> alive;
  std::vector<Beacon> prev_beacons;
  std::vector<std::size_t> prev_sender;
  std::vector<std::size_t> prev_alive;
  std::vector<double> timings;
  std::uint64_t heard_total = 0;
  std::vector<Beacon> received;

  for (std::int64_t k = first; k <= last; ++k) {
    for (auto v : starting[static_cast<std::size_t>(k - first)]) {
      states[v] = init_vehicle(v, seed, cfg.scheme, cfg.neighbor_tracker, res.preferences[v]);
      const Pseudonym p = states[v]->pseudonym;
      res.owners[p] = v;
      res.events.push_back({k, v, EventKind::kEnter, 0, p, ExitReason::kNone});
      res.spans[v] = {p, p};
      alive.push_back(v);
    }
    std::sort(alive.begin(), alive.end());

    Grid beacon_grid(range);
    for (std::size_t i = 0; i < prev_beacons.size(); ++i) {
      beacon_grid.insert(i, prev_beacons[i].x, prev_beacons[i].y);
    }
    Grid truth_grid(range);
    if (cfg.collect_errors) {
      for (auto w : prev_alive) {
        const auto & s = traces.traces[w].at(k - 1);
        truth_grid.insert(w, s.x, s.y);
      }
    }

    BeaconBatch batch;
    batch.step = k;
    for (auto v : alive) {
      auto & st = *states[v];
      const auto & own = traces.traces[v].at(k);
      const auto t0 = std::chrono::steady_clock::now();

      received.clear();
      beacon_grid.for_near(own.x, own.y, [&](std::size_t i) {
          if (prev_sender[i] != v && dist2(own, prev_beacons[i].x, prev_beacons[i].y) <= range2) {
            received.push_back(prev_beacons[i]);
          }
        });
      observe(st, k - 1, received);
      heard_total += received.size();

      const Decision d = compromised[v] ?
        laa_step(st, own, cfg.laa->cycle, traces.traces[v].first_step(), dt) :
        scheme_step(st, own, cfg.scheme, dt);

      if (cfg.profile) {
        const auto t1 = std::chrono::steady_clock::now();
        timings.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }

      if (d.silence_started) {
        res.events.push_back({k, v, EventKind::kSilenceStart, st.pseudonym, st.pseudonym,
            ExitReason::kNone});
      }
      if (d.action == Action::kChangePseudonym) {
        res.owners[st.pseudonym] = v;
        res.spans[v].last = st.pseudonym;
        res.events.push_back({k, v, EventKind::kPseudonymChange, d.old_pseudonym, st.pseudonym,
            d.reason});
      }
      if (d.action != Action::kSilent) {
        batch.beacons.push_back({st.pseudonym, k, own.x, own.y, own.speed, own.heading});
      }

      if (cfg.collect_errors && traces.traces[v].alive_at(k - 1)) {
        const auto & me = traces.traces[v].at(k - 1);
        // Freshest track per true vehicle.
        std::unordered_map<std::size_t, const KalmanTrack *> freshest;
        for (const auto & t : st.neighbor_tracker.tracks()) {
          const auto it = res.owners.find(t.pseudonym);
          if (it == res.owners.end() || it->second == v) {
            continue;
          }
          auto & slot = freshest[it->second];
          if (slot == nullptr || t.last_update_step > slot->last_update_step ||
            (t.last_update_step == slot->last_update_step && t.id > slot->id))
          {
            slot = &t;
          }
        }
        std::vector<std::size_t> near;
        truth_grid.for_near(me.x, me.y, [&](std::size_t w) {
            if (w != v && dist2(traces.traces[w].at(k - 1), me.x, me.y) <= range2) {
              near.push_back(w);
            }
          });
        std::sort(near.begin(), near.end());
        for (auto w : near) {
          const auto it = freshest.find(w);
          if (it == freshest.end()) {
            continue;
          }
          const auto & t = *it->second;
          const auto & truth = traces.traces[w].at(k - 1);
          const double vx = truth.speed * std::cos(truth.heading);
          const double vy = truth.speed * std::sin(truth.heading);
          const FrameError e = rotate_error(
            t.state(0) - truth.x, t.state(1) - truth.y, t.state(2) - vx, t.state(3) - vy,
            truth.heading);
          res.errors.add(e.dy, e.dx, e.dxdot);
        }
      }
    }

    prev_beacons = batch.beacons;
    prev_sender.clear();
    for (const auto & b : batch.beacons) {
      prev_sender.push_back(res.owners.at(b.pseudonym));
    }
    res.beacons.push_back(std::move(batch));

    prev_alive = alive;
    std::vector<std::size_t> still;
    for (auto v : alive) {
      if (traces.traces[v].last_step() == k) {
        res.events.push_back({k, v, EventKind::kLeave, states[v]->pseudonym, states[v]->pseudonym,
            ExitReason::kNone});
        states[v].reset();
      } else {
        still.push_back(v);
      }
    }
    alive = std::move(still);
  }

  if (cfg.profile && !timings.empty()) {
    StepProfile p;
    p.vehicle_steps = timings.size();
    double sum = 0.0;
    for (double t : timings) {
      sum += t;
    }
    p.mean_ms = sum / static_cast<double>(timings.size());
    const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(timings.size()))) - 1;
    std::nth_element(timings.begin(), timings.begin() + static_cast<std::ptrdiff_t>(idx), timings.end());
    p.p95_ms = timings[idx];
    p.mean_neighbors = static_cast<double>(heard_total) / static_cast<double>(p.vehicle_steps);
    res.profile = p;
  }
  return res;
}

}  // namespace cadsim
