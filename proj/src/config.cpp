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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "cadsim/experiment.hpp"

namespace cadsim
{

using nlohmann::json;

namespace
{

/// Reads known keys of one object and rejects the rest.
class Reader
{
public:
  Reader(const json & j, std::string where)
  : j_(j), where_(std::move(where))
  {
    if (!j_.is_object()) {
      throw ConfigError(where_ + ": expected an object");
    }
  }

  template<typename T>
  void get(const char * key, T & out)
  {
    const json * v = child(key);
    if (v == nullptr) {
      return;
    }
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v->is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v->is_number_integer() && (std::is_signed_v<T> || v->get<std::int64_t>() >= 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v->is_number();
    } else {
      ok = v->is_string();
    }
    if (!ok) {
      throw ConfigError(path(key) + ": wrong type");
    }
    out = v->get<T>();
  }

  const json * child(const char * key)
  {
    seen_.insert(key);
    const auto it = j_.find(key);
    return (it == j_.end()) ? nullptr : &*it;
  }

  std::string path(const char * key) const { return where_ + "." + key; }

  void finish() const
  {
    for (const auto & item : j_.items()) {
      if (seen_.count(item.key()) == 0) {
        throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

private:
  const json & j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_synth(const json & j, SynthConfig & c)
{
  Reader r(j, "traces.synthetic");
  r.get("blocks_x", c.blocks_x);
  r.get("blocks_y", c.blocks_y);
  r.get("block_length_m", c.block_length_m);
  r.get("vehicle_count", c.vehicle_count);
  r.get("speed_min_mps", c.speed_min_mps);
  r.get("speed_max_mps", c.speed_max_mps);
  r.get("duration_s", c.duration_s);
  r.get("turn_probability", c.turn_probability);
  r.get("lane_offset_m", c.lane_offset_m);
  r.get("spawn_window_s", c.spawn_window_s);
  r.finish();
}

json write_synth(const SynthConfig & c)
{
  return {
    {"blocks_x", c.blocks_x}, {"blocks_y", c.blocks_y}, {"block_length_m", c.block_length_m},
    {"vehicle_count", c.vehicle_count}, {"speed_min_mps", c.speed_min_mps},
    {"speed_max_mps", c.speed_max_mps}, {"duration_s", c.duration_s},
    {"turn_probability", c.turn_probability}, {"lane_offset_m", c.lane_offset_m},
    {"spawn_window_s", c.spawn_window_s}};
}

void read_traces(const json & j, TraceSource & t)
{
  Reader r(j, "traces");
  std::string file;
  r.get("file", file);
  if (!file.empty()) {
    t.file = file;
  }
  r.get("step_duration_s", t.step_duration_s);
  r.get("filter", t.filter);
  r.get("min_area_m2", t.min_area_m2);
  r.get("min_duration_s", t.min_duration_s);
  if (const json * s = r.child("synthetic")) {
    read_synth(*s, t.synthetic);
  }
  r.finish();
  t.synthetic.step_duration_s = t.step_duration_s;
}

json write_traces(const TraceSource & t)
{
  json j = {
    {"step_duration_s", t.step_duration_s}, {"filter", t.filter}, {"min_area_m2", t.min_area_m2},
    {"min_duration_s", t.min_duration_s}, {"synthetic", write_synth(t.synthetic)}};
  if (t.file) {
    j["file"] = t.file->string();
  }
  return j;
}

void read_params(const json & j, SchemeParams & p)
{
  Reader r(j, "scheme.params");
  r.get("min_pseudonym_time_s", p.min_pseudonym_time_s);
  r.get("max_pseudonym_time_s", p.max_pseudonym_time_s);
  r.get("min_silence_s", p.min_silence_s);
  r.get("max_silence_s", p.max_silence_s);
  r.get("neighborhood_radius_m", p.neighborhood_radius_m);
  r.get("silent_neighbor_threshold", p.silent_neighbor_threshold);
  r.get("pseudonym_time_increment_s", p.pseudonym_time_increment_s);
  r.get("max_gate", p.max_gate);
  r.get("comm_range_m", p.comm_range_m);
  r.get("missed_beacon_threshold", p.missed_beacon_threshold);
  r.finish();
}

json write_params(const SchemeParams & p)
{
  return {
    {"min_pseudonym_time_s", p.min_pseudonym_time_s},
    {"max_pseudonym_time_s", p.max_pseudonym_time_s}, {"min_silence_s", p.min_silence_s},
    {"max_silence_s", p.max_silence_s}, {"neighborhood_radius_m", p.neighborhood_radius_m},
    {"silent_neighbor_threshold", p.silent_neighbor_threshold},
    {"pseudonym_time_increment_s", p.pseudonym_time_increment_s}, {"max_gate", p.max_gate},
    {"comm_range_m", p.comm_range_m}, {"missed_beacon_threshold", p.missed_beacon_threshold}};
}

void read_overlay(const json & j, const std::string & where, CadsOverlay & o)
{
  Reader r(j, where);
  r.get("max_pseudonym_time_s", o.max_pseudonym_time_s);
  r.get("max_silence_s", o.max_silence_s);
  r.get("pseudonym_time_increment_s", o.pseudonym_time_increment_s);
  r.get("neighborhood_radius_m", o.neighborhood_radius_m);
  r.finish();
}

json write_overlay(const CadsOverlay & o)
{
  return {
    {"max_pseudonym_time_s", o.max_pseudonym_time_s}, {"max_silence_s", o.max_silence_s},
    {"pseudonym_time_increment_s", o.pseudonym_time_increment_s},
    {"neighborhood_radius_m", o.neighborhood_radius_m}};
}

constexpr PrivacyLevel kLevels[] = {PrivacyLevel::kLow, PrivacyLevel::kNormal, PrivacyLevel::kHigh};
constexpr Density kDensities[] = {Density::kSparse, Density::kDense};

void read_table(const json & j, CadsTable & t)
{
  Reader r(j, "scheme.cads.table");
  for (auto l : kLevels) {
    const std::string ln = to_string(l);
    const json * lj = r.child(ln.c_str());
    if (lj == nullptr) {
      continue;
    }
    Reader lr(*lj, "scheme.cads.table." + ln);
    for (auto d : kDensities) {
      const std::string dn = to_string(d);
      if (const json * dj = lr.child(dn.c_str())) {
        read_overlay(
          *dj, "scheme.cads.table." + ln + "." + dn,
          t.entries[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)]);
      }
    }
    lr.finish();
  }
  r.finish();
}

json write_table(const CadsTable & t)
{
  json j = json::object();
  for (auto l : kLevels) {
    for (auto d : kDensities) {
      j[to_string(l)][to_string(d)] = write_overlay(t.at(l, d));
    }
  }
  return j;
}

void read_scheme(const json & j, SchemeConfig & s)
{
  Reader r(j, "scheme");
  std::string kind = to_string(s.kind);
  r.get("kind", kind);
  try {
    s.kind = scheme_from_string(kind);
  } catch (const std::invalid_argument & e) {
    throw ConfigError(std::string("scheme.kind: ") + e.what());
  }
  if (const json * p = r.child("params")) {
    read_params(*p, s.params);
  }
  if (const json * p = r.child("rsp")) {
    Reader rr(*p, "scheme.rsp");
    rr.get("pseudonym_time_s", s.rsp.pseudonym_time_s);
    rr.get("silence_min_s", s.rsp.silence_min_s);
    rr.get("silence_max_s", s.rsp.silence_max_s);
    rr.finish();
  }
  if (const json * p = r.child("csp")) {
    Reader rr(*p, "scheme.csp");
    rr.get("period_s", s.csp.period_s);
    rr.get("silence_s", s.csp.silence_s);
    rr.finish();
  }
  if (const json * p = r.child("periodic")) {
    Reader rr(*p, "scheme.periodic");
    rr.get("period_s", s.periodic.period_s);
    rr.get("min_distance_m", s.periodic.min_distance_m);
    rr.finish();
  }
  if (const json * p = r.child("cads")) {
    Reader rr(*p, "scheme.cads");
    rr.get("density_threshold", s.cads.density_threshold);
    rr.get("density_window_steps", s.cads.density_window_steps);
    rr.get("static_params", s.cads.static_params);
    if (const json * t = rr.child("table")) {
      read_table(*t, s.cads.table);
    }
    rr.finish();
  }
  r.finish();
}

json write_scheme(const SchemeConfig & s)
{
  return {
    {"kind", to_string(s.kind)},
    {"params", write_params(s.params)},
    {"rsp", {{"pseudonym_time_s", s.rsp.pseudonym_time_s}, {"silence_min_s", s.rsp.silence_min_s},
      {"silence_max_s", s.rsp.silence_max_s}}},
    {"csp", {{"period_s", s.csp.period_s}, {"silence_s", s.csp.silence_s}}},
    {"periodic", {{"period_s", s.periodic.period_s},
      {"min_distance_m", s.periodic.min_distance_m}}},
    {"cads", {{"density_threshold", s.cads.density_threshold},
      {"density_window_steps", s.cads.density_window_steps},
      {"static_params", s.cads.static_params}, {"table", write_table(s.cads.table)}}}};
}

void read_tracker(const json & j, const std::string & where, TrackerConfig & t, bool & auto_silence)
{
  Reader r(j, where);
  r.get("time_to_live", t.time_to_live);
  if (const json * ms = r.child("max_silence")) {
    if (ms->is_string() && ms->get<std::string>() == "auto") {
      auto_silence = true;
    } else if (ms->is_number_integer()) {
      auto_silence = false;
      t.max_silence = ms->get<int>();
    } else {
      throw ConfigError(r.path("max_silence") + ": expected \"auto\" or an integer");
    }
  }
  r.get("gate_threshold", t.gate_threshold);
  r.get("process_noise_accel", t.process_noise_accel);
  r.get("meas_noise_pos", t.meas_noise_pos);
  r.get("meas_noise_vel", t.meas_noise_vel);
  r.finish();
}

json write_tracker(const TrackerConfig & t, bool auto_silence)
{
  return {
    {"time_to_live", t.time_to_live},
    {"max_silence", auto_silence ? json("auto") : json(t.max_silence)},
    {"gate_threshold", t.gate_threshold}, {"process_noise_accel", t.process_noise_accel},
    {"meas_noise_pos", t.meas_noise_pos}, {"meas_noise_vel", t.meas_noise_vel}};
}

void read_laa(const json & j, LaaConfig & l)
{
  Reader r(j, "laa");
  r.get("fraction_compromised", l.fraction_compromised);
  r.get("active_period_s", l.cycle.active_period_s);
  r.get("silent_period_s", l.cycle.silent_period_s);
  r.get("victim_radius_m", l.victim_radius_m);
  r.get("victim_min_exposure_s", l.victim_min_exposure_s);
  r.get("consecutive_exposure", l.consecutive_exposure);
  r.finish();
}

json write_laa(const LaaConfig & l)
{
  return {
    {"fraction_compromised", l.fraction_compromised},
    {"active_period_s", l.cycle.active_period_s}, {"silent_period_s", l.cycle.silent_period_s},
    {"victim_radius_m", l.victim_radius_m}, {"victim_min_exposure_s", l.victim_min_exposure_s},
    {"consecutive_exposure", l.consecutive_exposure}};
}

void read_qos(const json & j, QosConfig & q)
{
  Reader r(j, "qos");
  r.get("draws", q.draws);
  r.get("shards", q.shards);
  r.get("delta_s_low", q.delta_s_low);
  r.get("delta_s_high", q.delta_s_high);
  if (const json * s = r.child("strict_tolerance_s"); s != nullptr && !s->is_null()) {
    if (!s->is_number()) {
      throw ConfigError("qos.strict_tolerance_s: wrong type");
    }
    q.strict_tolerance_s = s->get<double>();
  }
  auto & sc = q.scenario;
  r.get("lane_half_width_m", sc.lane_half_width_m);
  r.get("sv_lateral_m", sc.sv_lateral_m);
  r.get("ov2_offset_m", sc.ov2_offset_m);
  r.get("true_ttc_s", sc.true_ttc_s);
  r.get("ov1_true_speed_mps", sc.ov1_true_speed_mps);
  r.get("sv_lateral_noise_std_m", sc.sv_lateral_noise_std_m);
  r.get("sv_pos_noise_std_m", sc.sv_pos_noise_std_m);
  r.get("sv_speed_noise_factor", sc.sv_speed_noise_factor);
  r.get("ttc_tolerance_s", sc.ttc_tolerance_s);
  r.finish();
}

json write_qos(const QosConfig & q)
{
  const auto & sc = q.scenario;
  return {
    {"draws", q.draws}, {"shards", q.shards}, {"delta_s_low", q.delta_s_low},
    {"delta_s_high", q.delta_s_high},
    {"strict_tolerance_s", q.strict_tolerance_s ? json(*q.strict_tolerance_s) : json(nullptr)},
    {"lane_half_width_m", sc.lane_half_width_m}, {"sv_lateral_m", sc.sv_lateral_m},
    {"ov2_offset_m", sc.ov2_offset_m}, {"true_ttc_s", sc.true_ttc_s},
    {"ov1_true_speed_mps", sc.ov1_true_speed_mps},
    {"sv_lateral_noise_std_m", sc.sv_lateral_noise_std_m},
    {"sv_pos_noise_std_m", sc.sv_pos_noise_std_m},
    {"sv_speed_noise_factor", sc.sv_speed_noise_factor}, {"ttc_tolerance_s", sc.ttc_tolerance_s}};
}

}  // namespace

ExperimentConfig parse_config(const json & j)
{
  ExperimentConfig c;
  Reader r(j, "config");
  r.get("name", c.name);
  r.get("seed", c.seed);
  r.get("repetitions", c.repetitions);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  if (const json * t = r.child("traces")) {
    read_traces(*t, c.traces);
  }
  if (const json * s = r.child("scheme")) {
    read_scheme(*s, c.scheme);
  }
  if (const json * p = r.child("preferences")) {
    Reader pr(*p, "preferences");
    pr.get("low", c.preferences[0]);
    pr.get("normal", c.preferences[1]);
    pr.get("high", c.preferences[2]);
    pr.finish();
  }
  if (const json * a = r.child("adversary")) {
    read_tracker(*a, "adversary", c.adversary, c.adversary_auto_max_silence);
  }
  if (const json * a = r.child("neighbor_tracker")) {
    read_tracker(*a, "neighbor_tracker", c.neighbor_tracker, c.neighbor_auto_max_silence);
  }
  if (const json * l = r.child("laa"); l != nullptr && !l->is_null()) {
    c.laa.emplace();
    read_laa(*l, *c.laa);
  }
  if (const json * q = r.child("qos")) {
    read_qos(*q, c.qos);
  }
  r.get("profile", c.profile);
  r.get("dump_errors", c.dump_errors);
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error & e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig & c)
{
  json j = {
    {"name", c.name}, {"seed", c.seed}, {"repetitions", c.repetitions},
    {"output_dir", c.output_dir.string()},
    {"traces", write_traces(c.traces)},
    {"scheme", write_scheme(c.scheme)},
    {"preferences", {{"low", c.preferences[0]}, {"normal", c.preferences[1]},
      {"high", c.preferences[2]}}},
    {"adversary", write_tracker(c.adversary, c.adversary_auto_max_silence)},
    {"neighbor_tracker", write_tracker(c.neighbor_tracker, c.neighbor_auto_max_silence)},
    {"laa", c.laa ? write_laa(*c.laa) : json(nullptr)},
    {"qos", write_qos(c.qos)},
    {"profile", c.profile}, {"dump_errors", c.dump_errors}};
  return j;
}

std::string config_hash(const ExperimentConfig & cfg)
{
  json j = config_to_json(cfg);
  j.erase("output_dir");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const
{
  std::vector<std::string> problems;
  auto check = [&](const char * what, auto && fn) {
      try {
        fn();
      } catch (const std::exception & e) {
        problems.push_back(std::string(what) + ": " + e.what());
      }
    };
  if (repetitions < 1) {
    problems.emplace_back("repetitions must be at least 1");
  }
  if (!traces.file) {
    check("traces.synthetic", [&] {traces.synthetic.validate();});
  }
  if (!(traces.step_duration_s > 0.0)) {
    problems.emplace_back("traces.step_duration_s must be positive");
  }
  check("scheme", [&] {scheme.validate();});
  check("preferences", [&] {draw_preferences(0, preferences, 0);});
  check("adversary", [&] {adversary.validate();});
  check("neighbor_tracker", [&] {neighbor_tracker.validate();});
  if (laa) {
    check("laa", [&] {laa->validate();});
  }
  check("qos", [&] {qos.validate();});
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration";
    for (const auto & p : problems) {
      msg << "\n  - " << p;
    }
    throw ConfigError(msg.str());
  }
}

}  // namespace cadsim
