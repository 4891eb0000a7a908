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

#include "cadsim/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cadsim
{

namespace
{

constexpr double kTimeEps = 1e-9;

bool reached(double elapsed, double bound) { return elapsed >= bound - kTimeEps; }

Beacon own_beacon(const VehicleSchemeState & s, const TraceSample & own)
{
  return Beacon{s.pseudonym, own.step, own.x, own.y, own.speed, own.heading};
}

void begin_silence(VehicleSchemeState & s)
{
  s.mode = Mode::kSilent;
  s.silence_steps = 0;
}

Pseudonym change_pseudonym(VehicleSchemeState & s)
{
  const Pseudonym old = s.pseudonym;
  ++s.pseudonym_counter;
  s.pseudonym = make_pseudonym(s.vehicle, s.pseudonym_counter);
  ++s.pseudonyms_used;
  s.pseudonym_age_s = 0.0;
  s.distance_since_change_m = 0.0;
  s.pseudonym_used = false;
  s.mode = Mode::kActive;
  s.silence_steps = 0;
  return old;
}

Decision changed(VehicleSchemeState & s, ExitReason reason)
{
  Decision d;
  d.action = Action::kChangePseudonym;
  d.reason = reason;
  d.old_pseudonym = change_pseudonym(s);
  return d;
}

Decision silent(bool started = false)
{
  Decision d;
  d.action = Action::kSilent;
  d.silence_started = started;
  return d;
}

/// Bookkeeping common to every scheme once the step's decision is known.
Decision finish(VehicleSchemeState & s, const TraceSample & own, Decision d, double dt)
{
  const KalmanNoise noise = s.neighbor_tracker.config().noise();
  if (d.action == Action::kSilent) {
    s.mode = Mode::kSilent;
    ++s.silence_steps;
    if (s.own_track && own.step > s.own_track->state_step) {
      predict_in_place(*s.own_track, static_cast<int>(own.step - s.own_track->state_step), dt, noise);
    }
  } else {
    const Beacon b = own_beacon(s, own);
    if (s.own_track) {
      if (own.step > s.own_track->state_step) {
        predict_in_place(
          *s.own_track, static_cast<int>(own.step - s.own_track->state_step), dt, noise);
      }
      update_in_place(*s.own_track, b, noise);
    } else {
      s.own_track = init_track(0, b, noise);
    }
    s.pseudonym_used = true;
    s.mode = Mode::kActive;
    s.silence_steps = 0;
  }
  s.pseudonym_age_s += dt;
  s.distance_since_change_m += own.speed * dt;
  return d;
}

}  // namespace

std::string to_string(SchemeKind kind)
{
  switch (kind) {
    case SchemeKind::kNone: return "none";
    case SchemeKind::kPeriodic: return "periodic";
    case SchemeKind::kRsp: return "rsp";
    case SchemeKind::kCsp: return "csp";
    case SchemeKind::kCaps: return "caps";
    case SchemeKind::kCads: return "cads";
  }
  return "unknown";
}

std::string to_string(PrivacyLevel level)
{
  switch (level) {
    case PrivacyLevel::kLow: return "low";
    case PrivacyLevel::kNormal: return "normal";
    case PrivacyLevel::kHigh: return "high";
  }
  return "unknown";
}

std::string to_string(Density density)
{
  return density == Density::kSparse ? "sparse" : "dense";
}

std::string to_string(ExitReason reason)
{
  switch (reason) {
    case ExitReason::kNone: return "none";
    case ExitReason::kConfusion: return "confusion";
    case ExitReason::kMaxSilence: return "max_silence";
    case ExitReason::kScheduled: return "scheduled";
  }
  return "unknown";
}

SchemeKind scheme_from_string(const std::string & name)
{
  for (auto k : {SchemeKind::kNone, SchemeKind::kPeriodic, SchemeKind::kRsp, SchemeKind::kCsp,
      SchemeKind::kCaps, SchemeKind::kCads})
  {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

PrivacyLevel privacy_level_from_string(const std::string & name)
{
  for (auto l : {PrivacyLevel::kLow, PrivacyLevel::kNormal, PrivacyLevel::kHigh}) {
    if (to_string(l) == name) {
      return l;
    }
  }
  throw std::invalid_argument("unknown privacy level '" + name + "'");
}

void SchemeParams::validate() const
{
  if (min_pseudonym_time_s < 0.0 || max_pseudonym_time_s < min_pseudonym_time_s) {
    throw std::invalid_argument("need 0 <= min_pseudonym_time <= max_pseudonym_time");
  }
  if (min_silence_s < 0.0 || max_silence_s < min_silence_s) {
    throw std::invalid_argument("need 0 <= min_silence <= max_silence");
  }
  if (neighborhood_radius_m < 0.0 || comm_range_m < 0.0 || neighborhood_radius_m > comm_range_m) {
    throw std::invalid_argument("need 0 <= neighborhood_radius <= comm_range");
  }
  if (silent_neighbor_threshold < 0 || pseudonym_time_increment_s < 0.0 || max_gate < 0.0 ||
      missed_beacon_threshold < 1)
  {
    throw std::invalid_argument("scheme thresholds must be non-negative");
  }
}

CadsTable CadsTable::published()
{
  CadsTable t;
  auto set = [&](PrivacyLevel l, Density d, CadsOverlay o) {
      t.entries[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)] = o;
    };
  set(PrivacyLevel::kLow, Density::kSparse, {240.0, 11.0, 60.0, 50.0});
  set(PrivacyLevel::kNormal, Density::kSparse, {300.0, 11.0, 60.0, 100.0});
  set(PrivacyLevel::kHigh, Density::kSparse, {180.0, 11.0, 0.0, 100.0});
  set(PrivacyLevel::kLow, Density::kDense, {240.0, 11.0, 60.0, 50.0});
  set(PrivacyLevel::kNormal, Density::kDense, {180.0, 13.0, 60.0, 50.0});
  set(PrivacyLevel::kHigh, Density::kDense, {180.0, 11.0, 0.0, 100.0});
  return t;
}

double CadsTable::max_silence_s() const
{
  double m = 0.0;
  for (const auto & row : entries) {
    for (const auto & e : row) {
      m = std::max(m, e.max_silence_s);
    }
  }
  return m;
}

void SchemeConfig::validate() const
{
  params.validate();
  if (rsp.pseudonym_time_s <= 0.0 || rsp.silence_min_s < 0.0 || rsp.silence_max_s < rsp.silence_min_s) {
    throw std::invalid_argument("invalid RSP parameters");
  }
  if (csp.period_s <= 0.0 || csp.silence_s < 0.0 || csp.silence_s >= csp.period_s) {
    throw std::invalid_argument("invalid CSP parameters");
  }
  if (periodic.period_s <= 0.0 || periodic.min_distance_m < 0.0) {
    throw std::invalid_argument("invalid periodic parameters");
  }
  if (cads.density_threshold < 0.0 || cads.density_window_steps < 0) {
    throw std::invalid_argument("invalid CADS density parameters");
  }
  if (kind == SchemeKind::kCads && !cads.static_params) {
    for (auto l : {PrivacyLevel::kLow, PrivacyLevel::kNormal, PrivacyLevel::kHigh}) {
      for (auto d : {Density::kSparse, Density::kDense}) {
        cads_select_params(l, d, params, cads.table).validate();
      }
    }
  }
}

double SchemeConfig::max_silence_s() const
{
  switch (kind) {
    case SchemeKind::kNone:
    case SchemeKind::kPeriodic:
      return 0.0;
    case SchemeKind::kRsp:
      return rsp.silence_max_s;
    case SchemeKind::kCsp:
      return csp.silence_s;
    case SchemeKind::kCaps:
      return params.max_silence_s;
    case SchemeKind::kCads:
      return cads.static_params ? params.max_silence_s :
             std::max(params.max_silence_s, cads.table.max_silence_s());
  }
  return 0.0;
}

double SchemeConfig::initial_age_bound_s() const
{
  switch (kind) {
    case SchemeKind::kRsp:
      return rsp.pseudonym_time_s;
    case SchemeKind::kCsp:
      return csp.period_s;
    case SchemeKind::kPeriodic:
      return periodic.period_s;
    default:
      return params.max_pseudonym_time_s;
  }
}

void DensityEstimator::add(std::size_t neighbour_count)
{
  sum_ += static_cast<double>(neighbour_count);
  ++count_;
  if (window_ > 0) {
    recent_.push_back(neighbour_count);
    if (static_cast<int>(recent_.size()) > window_) {
      sum_ -= static_cast<double>(recent_.front());
      recent_.pop_front();
      --count_;
    }
  }
}

double DensityEstimator::mean() const
{
  return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_);
}

Pseudonym make_pseudonym(std::size_t vehicle, std::uint32_t counter)
{
  return (static_cast<Pseudonym>(vehicle + 1) << 32) | counter;
}

VehicleSchemeState init_vehicle(
  std::size_t vehicle, std::uint64_t seed, const SchemeConfig & cfg,
  const TrackerConfig & neighbor_tracker_cfg, PrivacyLevel preference)
{
  VehicleSchemeState s;
  s.vehicle = vehicle;
  s.neighbor_tracker = Tracker(neighbor_tracker_cfg);
  s.density = DensityEstimator(cfg.cads.density_window_steps);
  s.rng = make_rng(seed, Stream::kVehicle, vehicle);
  s.pseudonym = make_pseudonym(vehicle, 0);
  s.first_pseudonym = s.pseudonym;
  s.preference = preference;
  s.active_params = cfg.params;
  s.effective_min_pseudonym_time_s = cfg.params.min_pseudonym_time_s;
  const double bound = cfg.initial_age_bound_s();
  if (bound > 1.0) {
    std::uniform_real_distribution<double> age(1.0, bound);
    s.pseudonym_age_s = age(s.rng);
  } else {
    s.pseudonym_age_s = bound;
  }
  return s;
}

void observe(VehicleSchemeState & s, std::int64_t observed_step, std::span<const Beacon> received)
{
  s.neighbor_tracker.step(observed_step, received);
  s.density.add(received.size());
}

int count_silent_neighbors(
  const VehicleSchemeState & s, const TraceSample & own, double radius, int missed_threshold)
{
  const auto now = s.neighbor_tracker.current_step();
  const double r2 = radius * radius;
  int count = 0;
  for (const auto & t : s.neighbor_tracker.tracks()) {
    if (now - t.last_update_step < missed_threshold) {
      continue;
    }
    const double dx = t.state(0) - own.x;
    const double dy = t.state(1) - own.y;
    if (dx * dx + dy * dy <= r2) {
      ++count;
    }
  }
  return count;
}

bool exit_silence_check(double d2_own, std::span<const double> d2_neighbors, double max_gate)
{
  if (d2_own > max_gate) {
    return true;
  }
  if (d2_neighbors.empty()) {
    return false;
  }
  return d2_own > *std::min_element(d2_neighbors.begin(), d2_neighbors.end());
}

Density estimate_density(const DensityEstimator & history, double threshold)
{
  if (history.empty()) {
    return Density::kSparse;
  }
  return history.mean() < threshold ? Density::kSparse : Density::kDense;
}

SchemeParams cads_select_params(
  PrivacyLevel level, Density density, const SchemeParams & base, const CadsTable & table)
{
  const CadsOverlay & o = table.at(level, density);
  SchemeParams p = base;
  p.max_pseudonym_time_s = o.max_pseudonym_time_s;
  p.max_silence_s = o.max_silence_s;
  p.pseudonym_time_increment_s = o.pseudonym_time_increment_s;
  p.neighborhood_radius_m = o.neighborhood_radius_m;
  p.silent_neighbor_threshold = std::max(1, p.silent_neighbor_threshold);
  return p;
}

Decision none_step(VehicleSchemeState & s, const TraceSample & own, double dt)
{
  return finish(s, own, Decision{}, dt);
}

Decision periodic_step(
  VehicleSchemeState & s, const TraceSample & own, const PeriodicParams & p, double dt)
{
  if (reached(s.pseudonym_age_s, p.period_s) && s.distance_since_change_m >= p.min_distance_m) {
    return finish(s, own, changed(s, ExitReason::kScheduled), dt);
  }
  return finish(s, own, Decision{}, dt);
}

Decision rsp_step(VehicleSchemeState & s, const TraceSample & own, const RspParams & p, double dt)
{
  if (s.mode == Mode::kActive) {
    if (!reached(s.pseudonym_age_s, p.pseudonym_time_s)) {
      return finish(s, own, Decision{}, dt);
    }
    begin_silence(s);
    std::uniform_real_distribution<double> target(p.silence_min_s, p.silence_max_s);
    s.silence_target_s = target(s.rng);
    return finish(s, own, silent(true), dt);
  }
  if (reached(s.silence_elapsed_s(dt), s.silence_target_s)) {
    return finish(s, own, changed(s, ExitReason::kScheduled), dt);
  }
  return finish(s, own, silent(), dt);
}

Decision csp_step(
  VehicleSchemeState & s, const TraceSample & own, const CspParams & p, std::int64_t global_step,
  double dt)
{
  const auto period = std::max<std::int64_t>(1, std::llround(p.period_s / dt));
  const auto window = std::llround(p.silence_s / dt);
  const bool in_window = global_step > 0 && (global_step % period) < window;
  if (in_window) {
    return finish(s, own, silent(s.mode == Mode::kActive), dt);
  }
  if (s.mode == Mode::kSilent && s.pseudonym_used) {
    return finish(s, own, changed(s, ExitReason::kScheduled), dt);
  }
  return finish(s, own, Decision{}, dt);
}

Decision caps_step(
  VehicleSchemeState & s, const TraceSample & own, const SchemeParams & p, double dt)
{
  if (s.mode == Mode::kActive) {
    if (!reached(s.pseudonym_age_s, s.effective_min_pseudonym_time_s)) {
      return finish(s, own, Decision{}, dt);
    }
    const int silent_neighbors =
      count_silent_neighbors(s, own, p.neighborhood_radius_m, p.missed_beacon_threshold);
    if ((p.silent_neighbor_threshold > 0 && silent_neighbors >= p.silent_neighbor_threshold) ||
      reached(s.pseudonym_age_s, p.max_pseudonym_time_s))
    {
      begin_silence(s);
      return finish(s, own, silent(true), dt);
    }
    return finish(s, own, Decision{}, dt);
  }

  const double elapsed = s.silence_elapsed_s(dt);
  if (!reached(elapsed, p.min_silence_s)) {
    return finish(s, own, silent(), dt);
  }

  bool confusion = true;  // no own track yet: nothing to be linked to
  if (s.own_track) {
    const KalmanNoise noise = s.neighbor_tracker.config().noise();
    const Beacon me = own_beacon(s, own);
    const KalmanTrack own_pred =
      kf_predict(*s.own_track, static_cast<int>(own.step - s.own_track->state_step), dt, noise);
    const double d2_own = gate_distance(own_pred, me, noise).d2;
    std::vector<double> d2_neighbors;
    const auto now = s.neighbor_tracker.current_step();
    for (const auto & t : s.neighbor_tracker.tracks()) {
      if (now - t.last_update_step < p.missed_beacon_threshold) {
        continue;
      }
      const KalmanTrack pred =
        kf_predict(t, static_cast<int>(std::max<std::int64_t>(0, own.step - t.state_step)), dt, noise);
      d2_neighbors.push_back(gate_distance(pred, me, noise).d2);
    }
    confusion = exit_silence_check(d2_own, d2_neighbors, p.max_gate);
  }
  if (confusion) {
    s.effective_min_pseudonym_time_s = std::min(
      s.effective_min_pseudonym_time_s + p.pseudonym_time_increment_s, p.max_pseudonym_time_s);
    return finish(s, own, changed(s, ExitReason::kConfusion), dt);
  }
  if (reached(elapsed, p.max_silence_s)) {
    return finish(s, own, changed(s, ExitReason::kMaxSilence), dt);
  }
  return finish(s, own, silent(), dt);
}

Decision cads_step(
  VehicleSchemeState & s, const TraceSample & own, const SchemeParams & base, const CadsParams & p,
  double dt)
{
  if (s.mode == Mode::kActive && !p.static_params) {
    s.active_params =
      cads_select_params(s.preference, estimate_density(s.density, p.density_threshold), base, p.table);
  }
  return caps_step(s, own, s.active_params, dt);
}

Decision laa_step(
  VehicleSchemeState & s, const TraceSample & own, const LaaCycle & cycle,
  std::int64_t entry_step, double dt)
{
  const auto active = std::max<std::int64_t>(1, std::llround(cycle.active_period_s / dt));
  const auto quiet = std::max<std::int64_t>(0, std::llround(cycle.silent_period_s / dt));
  const auto phase = (own.step - entry_step) % (active + quiet);
  if (phase < active) {
    if (phase == 0 && own.step > entry_step) {
      return finish(s, own, changed(s, ExitReason::kScheduled), dt);
    }
    return finish(s, own, Decision{}, dt);
  }
  return finish(s, own, silent(phase == active), dt);
}

Decision scheme_step(
  VehicleSchemeState & s, const TraceSample & own, const SchemeConfig & cfg, double dt)
{
  switch (cfg.kind) {
    case SchemeKind::kNone:
      return none_step(s, own, dt);
    case SchemeKind::kPeriodic:
      return periodic_step(s, own, cfg.periodic, dt);
    case SchemeKind::kRsp:
      return rsp_step(s, own, cfg.rsp, dt);
    case SchemeKind::kCsp:
      return csp_step(s, own, cfg.csp, own.step, dt);
    case SchemeKind::kCaps:
      return caps_step(s, own, cfg.params, dt);
    case SchemeKind::kCads:
      return cads_step(s, own, cfg.params, cfg.cads, dt);
  }
  return none_step(s, own, dt);
}

}  // namespace cadsim
