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

#include "cadsim/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "cadsim/assignment.hpp"

namespace cadsim
{

namespace
{

constexpr double kBenefitQuantum = 1e6;

}  // namespace

void TrackerConfig::validate() const
{
  if (time_to_live < 1 || max_silence < 0) {
    throw std::invalid_argument("tracker needs time_to_live >= 1 and max_silence >= 0");
  }
  if (!(gate_threshold > 0.0) || !(process_noise_accel > 0.0) || !(meas_noise_pos > 0.0) ||
      !(meas_noise_vel > 0.0) || !(step_duration_s > 0.0))
  {
    throw std::invalid_argument("tracker gate, noise levels and step duration must be positive");
  }
}

Association associate(
  std::span<const KalmanTrack> tracks, std::span<const Beacon> beacons, const TrackerConfig & cfg)
{
  Association out;
  std::vector<std::size_t> track_order(tracks.size());
  std::iota(track_order.begin(), track_order.end(), 0);
  std::sort(
    track_order.begin(), track_order.end(),
    [&](std::size_t a, std::size_t b) {return tracks[a].id < tracks[b].id;});
  std::vector<std::size_t> beacon_order(beacons.size());
  std::iota(beacon_order.begin(), beacon_order.end(), 0);
  std::sort(
    beacon_order.begin(), beacon_order.end(), [&](std::size_t a, std::size_t b) {
      const auto & p = beacons[a];
      const auto & q = beacons[b];
      return std::tie(p.pseudonym, p.step, p.x, p.y, p.speed, p.heading, a) <
      std::tie(q.pseudonym, q.step, q.x, q.y, q.speed, q.heading, b);
    });

  const KalmanNoise noise = cfg.noise();
  std::vector<BenefitEdge> edges;
  for (std::size_t r = 0; r < track_order.size(); ++r) {
    const auto & track = tracks[track_order[r]];
    for (std::size_t c = 0; c < beacon_order.size(); ++c) {
      const double d2 = gate_distance(track, beacons[beacon_order[c]], noise).d2;
      if (d2 > cfg.gate_threshold) {
        continue;
      }
      const auto benefit =
        static_cast<std::int64_t>(std::llround((cfg.gate_threshold - d2) * kBenefitQuantum));
      if (benefit > 0) {
        edges.push_back({r, c, benefit});
      }
    }
  }

  const Matching matching = auction_assign(track_order.size(), beacon_order.size(), edges);
  std::vector<bool> matched(beacons.size(), false);
  for (std::size_t r = 0; r < matching.size(); ++r) {
    if (matching[r]) {
      const std::size_t beacon = beacon_order[*matching[r]];
      matched[beacon] = true;
      out.matches.push_back({tracks[track_order[r]].id, beacon});
    }
  }
  for (std::size_t b = 0; b < beacons.size(); ++b) {
    if (!matched[b]) {
      out.unmatched_beacons.push_back(b);
    }
  }
  return out;
}

Tracker::Tracker(TrackerConfig cfg)
: cfg_(cfg), noise_(cfg.noise())
{
  cfg_.validate();
}

void Tracker::predict_to(std::int64_t step)
{
  if (started_ && step < current_step_) {
    throw std::invalid_argument("tracker steps must not decrease");
  }
  for (auto & t : tracks_) {
    if (step > t.state_step) {
      predict_in_place(t, static_cast<int>(step - t.state_step), cfg_.step_duration_s, noise_);
    }
  }
  current_step_ = step;
  started_ = true;
}

const KalmanTrack * Tracker::find_by_pseudonym(Pseudonym pseudonym) const
{
  const auto it = by_pseudonym_.find(pseudonym);
  return it == by_pseudonym_.end() ? nullptr : &tracks_[it->second];
}

const KalmanTrack * Tracker::find_by_id(std::uint64_t id) const
{
  const auto it = std::lower_bound(
    tracks_.begin(), tracks_.end(), id,
    [](const KalmanTrack & t, std::uint64_t v) {return t.id < v;});
  return (it != tracks_.end() && it->id == id) ? &*it : nullptr;
}

void Tracker::rebuild_index()
{
  by_pseudonym_.clear();
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    by_pseudonym_[tracks_[i].pseudonym] = i;
  }
}

std::vector<TrackUpdate> Tracker::step(std::int64_t step, std::span<const Beacon> beacons)
{
  predict_to(step);
  const std::int64_t retention = static_cast<std::int64_t>(cfg_.time_to_live) + cfg_.max_silence;
  // Tracks past retention would have been deleted on a skipped step.
  if (std::erase_if(tracks_, [&](const KalmanTrack & t) {return step - t.last_update_step > retention;}) != 0) {
    rebuild_index();
  }
  std::vector<TrackUpdate> updates(beacons.size());
  std::vector<std::size_t> remaining;

  // 1. Pseudonym matching.
  for (std::size_t b = 0; b < beacons.size(); ++b) {
    updates[b].beacon_index = b;
    const auto it = by_pseudonym_.find(beacons[b].pseudonym);
    if (it == by_pseudonym_.end()) {
      remaining.push_back(b);
      continue;
    }
    auto & track = tracks_[it->second];
    if (track.last_update_step == step) {
      continue;  // duplicate pseudonym within one step
    }
    update_in_place(track, beacons[b], noise_);
    updates[b].track_id = track.id;
    updates[b].kind = TrackUpdate::Kind::kPseudonymMatch;
  }

  // 2. Remaining beacons against inactive tracks only.
  if (!remaining.empty()) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (step - tracks_[i].last_update_step >= cfg_.time_to_live) {
        candidates.push_back(i);
      }
    }
    std::vector<std::size_t> unmatched = remaining;
    if (!candidates.empty()) {
      std::vector<KalmanTrack> cand_tracks;
      cand_tracks.reserve(candidates.size());
      for (auto i : candidates) {
        cand_tracks.push_back(tracks_[i]);
      }
      std::vector<Beacon> rest;
      rest.reserve(remaining.size());
      for (auto b : remaining) {
        rest.push_back(beacons[b]);
      }
      const Association assoc = associate(cand_tracks, rest, cfg_);
      for (const auto & m : assoc.matches) {
        const auto pos = std::find_if(
          candidates.begin(), candidates.end(),
          [&](std::size_t i) {return tracks_[i].id == m.track_id;});
        auto & track = tracks_[*pos];
        const std::size_t b = remaining[m.beacon_index];
        by_pseudonym_.erase(track.pseudonym);
        update_in_place(track, beacons[b], noise_);
        by_pseudonym_[track.pseudonym] = static_cast<std::size_t>(*pos);
        updates[b].track_id = track.id;
        updates[b].kind = TrackUpdate::Kind::kAssociated;
      }
      unmatched.clear();
      for (auto idx : assoc.unmatched_beacons) {
        unmatched.push_back(remaining[idx]);
      }
    }

    // 3. New tracks.
    for (auto b : unmatched) {
      if (by_pseudonym_.count(beacons[b].pseudonym) != 0) {
        continue;  // duplicate pseudonym within one step
      }
      tracks_.push_back(init_track(next_id_++, beacons[b], noise_));
      by_pseudonym_[beacons[b].pseudonym] = tracks_.size() - 1;
      updates[b].track_id = tracks_.back().id;
      updates[b].kind = TrackUpdate::Kind::kNewTrack;
    }
  }

  // 4. Lifecycle.
  const auto before = tracks_.size();
  std::erase_if(tracks_, [&](const KalmanTrack & t) {return step - t.last_update_step >= retention;});
  for (auto & t : tracks_) {
    t.status = (step - t.last_update_step >= cfg_.time_to_live) ? TrackStatus::kInactive :
      TrackStatus::kActive;
  }
  if (tracks_.size() != before) {
    rebuild_index();
  }
  return updates;
}

}  // namespace cadsim
