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

#include "cadsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cadsim/rng.hpp"

namespace cadsim
{

using nlohmann::json;

namespace
{

std::ofstream open_out(const std::filesystem::path & p)
{
  std::ofstream out(p, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + p.string());
  }
  return out;
}

/// Shortest round-trip text of a double.
std::string num(double v) { return json(v).dump(); }

std::string pseudonym_hex(Pseudonym p)
{
  std::ostringstream s;
  s << std::hex << p;
  return s.str();
}

json::json_pointer pointer_of(const std::string & dotted)
{
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) {
      throw ConfigError("bad sweep path '" + dotted + "'");
    }
    p += "/" + part;
  }
  return json::json_pointer(p);
}

std::vector<std::string> split(const std::string & line, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, sep)) {
    out.push_back(f);
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

}  // namespace

std::uint64_t repetition_seed(std::uint64_t master, int rep)
{
  return derive_seed(master, Stream::kRepetition, static_cast<std::uint64_t>(rep));
}

int silence_steps_bound(const ExperimentConfig & cfg, double step_duration_s)
{
  double s = cfg.scheme.max_silence_s();
  if (cfg.laa && cfg.laa->fraction_compromised > 0.0) {
    s = std::max(s, cfg.laa->cycle.silent_period_s);
  }
  return static_cast<int>(std::ceil(s / step_duration_s - 1e-9));
}

TraceSet prepare_traces(const TraceSource & src, std::uint64_t seed)
{
  TraceSet t;
  if (src.file) {
    t = load_traces(*src.file, src.step_duration_s);
  } else {
    SynthConfig sc = src.synthetic;
    sc.step_duration_s = src.step_duration_s;
    t = generate_synthetic(sc, seed);
  }
  if (src.filter) {
    t = filter_traces(std::move(t), src.min_area_m2, src.min_duration_s);
  }
  if (!t.has_kinematics) {
    t = derive_kinematics(std::move(t));
  }
  if (t.traces.empty()) {
    throw TraceError("no traces left after filtering");
  }
  return t;
}

RunOutput run_once(const ExperimentConfig & cfg, const TraceSet & traces, std::uint64_t seed)
{
  const double dt = traces.step_duration_s;
  const int silence_bound = silence_steps_bound(cfg, dt);

  SimulationConfig sc;
  sc.scheme = cfg.scheme;
  sc.neighbor_tracker = cfg.neighbor_tracker;
  sc.neighbor_tracker.step_duration_s = dt;
  if (cfg.neighbor_auto_max_silence) {
    sc.neighbor_tracker.max_silence = silence_bound;
  }
  sc.preference_mix = cfg.preferences;
  sc.laa = cfg.laa;
  sc.collect_errors = true;
  sc.profile = cfg.profile;

  RunOutput out;
  out.traces = traces;
  out.sim = simulate(traces, sc, seed);

  TrackerConfig adv = cfg.adversary;
  adv.step_duration_s = dt;
  if (cfg.adversary_auto_max_silence) {
    adv.max_silence = silence_bound;
  }
  out.tracks = gpa_run(out.sim.beacons, adv);

  const std::size_t n = traces.traces.size();
  const SegmentMatrix m = segment_lengths(
    out.tracks, n, out.sim.owners, static_cast<std::int64_t>(adv.time_to_live) + adv.max_silence);
  const Assignment a = assign_tracks(m);
  out.report = traceability_report(a, traces, out.sim.spans);

  RunResult & r = out.result;
  r.seed = seed;
  r.vehicles = n;
  r.tracks = out.tracks.size();
  r.pi = out.report.pi;
  r.pi_norm = out.report.pi_norm;
  for (auto level : {PrivacyLevel::kLow, PrivacyLevel::kNormal, PrivacyLevel::kHigh}) {
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < n; ++v) {
      if (out.sim.preferences[v] == level) {
        members.push_back(v);
      }
    }
    if (!members.empty()) {
      const auto g = group_report(out.report, members);
      r.groups.push_back({level, members.size(), g.pi, g.pi_norm});
    }
  }
  r.qos = evaluate_qos(out.sim.errors, cfg.qos, seed);

  r.compromised = out.sim.compromised.size();
  r.laa_empty_warning = out.sim.laa_empty_warning;
  if (!out.sim.compromised.empty()) {
    out.victims = find_victims(traces, out.sim.compromised, out.sim.events, *cfg.laa);
    r.pseudonyms = pseudonym_stats(
      out.sim.events, traces, std::span<const std::size_t>(out.victims));
  } else {
    r.pseudonyms = pseudonym_stats(out.sim.events, traces);
  }
  r.victims = out.victims.size();
  r.realized = realized_times(out.sim.events, n, dt);
  r.adversary_max_silence_steps = adv.max_silence;
  r.profile = out.sim.profile;
  return out;
}

json result_to_json(const RunResult & r)
{
  json groups = json::array();
  for (const auto & g : r.groups) {
    groups.push_back(
      {{"preference", to_string(g.level)}, {"vehicles", g.vehicles}, {"pi", g.pi},
        {"pi_norm", g.pi_norm}});
  }
  const auto & q = r.qos;
  json qos = {
    {"p_true_pos", q.p_true_pos}, {"p_false_pos", q.p_false_pos}, {"p_ttc_5", q.p_ttc_5},
    {"p_ttc_15", q.p_ttc_15}, {"p_fcw_5", q.p_fcw_5}, {"p_fcw_15", q.p_fcw_15},
    {"qos", q.qos}, {"samples", q.samples}};
  if (q.p_ttc_5_strict) {
    qos["p_ttc_5_strict"] = *q.p_ttc_5_strict;
  }
  return {
    {"seed", r.seed},
    {"vehicles", r.vehicles},
    {"tracks", r.tracks},
    {"traceability", {{"pi", r.pi}, {"pi_norm", r.pi_norm}, {"groups", groups}}},
    {"qos", qos},
    {"pseudonyms", {{"avg_lifetime_s", r.pseudonyms.avg_lifetime_s},
      {"changes_per_vehicle", r.pseudonyms.changes_per_vehicle},
      {"concerned", r.pseudonyms.concerned}, {"empty", r.pseudonyms.empty},
      {"median_silence_s", r.realized.median_silence_s},
      {"median_pseudonym_time_s", r.realized.median_pseudonym_time_s},
      {"silences", r.realized.silences}}},
    {"laa", {{"compromised", r.compromised}, {"victims", r.victims},
      {"empty_warning", r.laa_empty_warning}}},
    {"adversary_max_silence_steps", r.adversary_max_silence_steps}};
}

json profile_to_json(const StepProfile & p)
{
  return {
    {"mean_ms", p.mean_ms}, {"p95_ms", p.p95_ms}, {"vehicle_steps", p.vehicle_steps},
    {"mean_neighbors", p.mean_neighbors}};
}

RunSummary summarize(const std::vector<RunResult> & runs)
{
  RunSummary s;
  if (runs.empty()) {
    return s;
  }
  for (const auto & r : runs) {
    s.pi += r.pi;
    s.pi_norm += r.pi_norm;
    s.qos += r.qos.qos;
    s.changes_per_vehicle += r.pseudonyms.changes_per_vehicle;
    s.avg_pseudonym_lifetime_s += r.pseudonyms.avg_lifetime_s;
    s.median_silence_s += r.realized.median_silence_s;
  }
  const double n = static_cast<double>(runs.size());
  s.pi /= n;
  s.pi_norm /= n;
  s.qos /= n;
  s.changes_per_vehicle /= n;
  s.avg_pseudonym_lifetime_s /= n;
  s.median_silence_s /= n;
  return s;
}

void write_run_artifacts(
  const ExperimentConfig & cfg, const std::vector<RunOutput> & runs,
  const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  const std::string hash = config_hash(cfg);

  std::vector<RunResult> results;
  json jruns = json::array();
  for (const auto & r : runs) {
    results.push_back(r.result);
    jruns.push_back(result_to_json(r.result));
  }
  const RunSummary sum = summarize(results);
  json result = {
    {"name", cfg.name}, {"config_hash", hash}, {"scheme", to_string(cfg.scheme.kind)},
    {"runs", jruns},
    {"summary", {{"pi", sum.pi}, {"pi_norm", sum.pi_norm}, {"qos", sum.qos},
      {"changes_per_vehicle", sum.changes_per_vehicle},
      {"avg_pseudonym_lifetime_s", sum.avg_pseudonym_lifetime_s},
      {"median_silence_s", sum.median_silence_s}}},
    {"qos_scenario", {{"ov1_true_speed_mps", cfg.qos.scenario.ov1_true_speed_mps},
      {"draws", cfg.qos.draws}, {"shards", cfg.qos.shards}}}};
  open_out(dir / "result.json") << result.dump(2) << '\n';

  {
    auto out = open_out(dir / "vehicles.csv");
    out << "rep,vehicle,id,preference,compromised,victim,tau_s,lifetime_s,tracked,"
      "tracked_normalized,changes,first_pseudonym,last_pseudonym\n";
    for (std::size_t rep = 0; rep < runs.size(); ++rep) {
      const auto & r = runs[rep];
      const auto changes = change_counts(r.sim.events, r.traces.traces.size());
      const double dt = r.traces.step_duration_s;
      for (std::size_t v = 0; v < r.traces.traces.size(); ++v) {
        const auto & pv = r.report.per_vehicle[v];
        const bool comp = std::binary_search(
          r.sim.compromised.begin(), r.sim.compromised.end(), v);
        const bool vict = std::find(r.victims.begin(), r.victims.end(), v) != r.victims.end();
        out << rep << ',' << v << ',' << r.traces.traces[v].vehicle_id << ','
            << to_string(r.sim.preferences[v]) << ',' << comp << ',' << vict << ','
            << num(static_cast<double>(pv.tau_steps) * dt) << ','
            << num(static_cast<double>(pv.lifetime_steps) * dt) << ',' << pv.tracked << ','
            << pv.tracked_normalized << ',' << changes[v] << ','
            << pseudonym_hex(pv.first_pseudonym) << ',' << pseudonym_hex(pv.last_pseudonym)
            << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "tracks.jsonl");
    for (std::size_t rep = 0; rep < runs.size(); ++rep) {
      for (const auto & t : runs[rep].tracks) {
        json h = json::array();
        for (const auto & e : t.history) {
          h.push_back({e.step, pseudonym_hex(e.pseudonym)});
        }
        json iv = json::array();
        for (const auto & i : t.intervals) {
          iv.push_back({i.first_step, i.last_step});
        }
        out << json{{"rep", rep}, {"track_id", t.track_id}, {"history", h}, {"intervals", iv}}
          .dump() << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "events.csv");
    out << "rep,step,vehicle,kind,old_pseudonym,new_pseudonym,reason\n";
    for (std::size_t rep = 0; rep < runs.size(); ++rep) {
      for (const auto & e : runs[rep].sim.events) {
        out << rep << ',' << e.step << ',' << e.vehicle << ',' << to_string(e.kind) << ','
            << pseudonym_hex(e.old_pseudonym) << ',' << pseudonym_hex(e.new_pseudonym) << ','
            << to_string(e.reason) << '\n';
      }
    }
  }
  if (cfg.dump_errors) {
    auto out = open_out(dir / "errors.csv");
    ErrorSamples all;
    for (const auto & r : runs) {
      all.append(r.sim.errors);
    }
    write_error_samples(all, out);
  }
  if (cfg.profile) {
    json p = json::array();
    for (const auto & r : runs) {
      p.push_back(r.result.profile ? profile_to_json(*r.result.profile) : json(nullptr));
    }
    open_out(dir / "profile.json") << json{{"runs", p}}.dump(2) << '\n';
  }
  json seeds = json::array();
  for (const auto & r : results) {
    seeds.push_back(r.seed);
  }
  json files = {"result.json", "vehicles.csv", "tracks.jsonl", "events.csv"};
  if (cfg.dump_errors) {
    files.push_back("errors.csv");
  }
  if (cfg.profile) {
    files.push_back("profile.json");
  }
  json resolved = config_to_json(cfg);
  resolved.erase("output_dir");
  json manifest = {
    {"name", cfg.name}, {"config_hash", hash}, {"seed", cfg.seed}, {"run_seeds", seeds},
    {"repetitions", cfg.repetitions}, {"versions", {{"cadsim", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
      "." + std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
      std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
    {"files", files}, {"config", resolved}};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<RunResult> run_experiment(const ExperimentConfig & cfg, bool write)
{
  cfg.validate();
  std::vector<RunOutput> runs;
  std::vector<RunResult> results;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = repetition_seed(cfg.seed, rep);
    const TraceSet traces = prepare_traces(cfg.traces, seed);
    RunOutput out = run_once(cfg, traces, seed);
    results.push_back(out.result);
    if (write) {
      runs.push_back(std::move(out));
    }
  }
  if (write) {
    write_run_artifacts(cfg, runs, cfg.output_dir);
  }
  return results;
}

std::vector<SweepRow> sweep(
  const json & base, const std::vector<SweepAxis> & grid,
  const std::function<void(std::size_t, std::size_t)> & progress)
{
  std::size_t cells = 1;
  for (const auto & axis : grid) {
    if (axis.values.empty()) {
      throw ConfigError("sweep axis '" + axis.path + "' has no values");
    }
    cells *= axis.values.size();
  }
  // Parse every cell first so configuration errors surface before any run.
  std::vector<ExperimentConfig> cfgs;
  std::vector<std::vector<std::pair<std::string, std::string>>> labels;
  for (std::size_t c = 0; c < cells; ++c) {
    json j = base;
    std::vector<std::pair<std::string, std::string>> ov;
    std::size_t rest = c;
    for (std::size_t a = grid.size(); a-- > 0;) {
      const auto & axis = grid[a];
      const auto & v = axis.values[rest % axis.values.size()];
      rest /= axis.values.size();
      j[pointer_of(axis.path)] = v;
      ov.emplace_back(axis.path, v.is_string() ? v.get<std::string>() : v.dump());
    }
    std::reverse(ov.begin(), ov.end());
    cfgs.push_back(parse_config(j));
    labels.push_back(std::move(ov));
  }

  std::map<std::pair<std::string, std::uint64_t>, TraceSet> trace_cache;
  std::vector<SweepRow> rows;
  const std::size_t total = cells * static_cast<std::size_t>(cfgs.front().repetitions);
  std::size_t done = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    const auto & cfg = cfgs[c];
    const std::string trace_key = config_to_json(cfg)["traces"].dump();
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t seed = repetition_seed(cfg.seed, rep);
      auto it = trace_cache.find({trace_key, seed});
      if (it == trace_cache.end()) {
        it = trace_cache.emplace(std::pair{trace_key, seed}, prepare_traces(cfg.traces, seed)).first;
      }
      SweepRow row;
      row.overrides = labels[c];
      row.repetition = rep;
      row.result = run_once(cfg, it->second, seed).result;
      rows.push_back(std::move(row));
      if (progress) {
        progress(++done, total);
      }
    }
  }
  return rows;
}

void write_sweep_table(const std::vector<SweepRow> & rows, std::ostream & out)
{
  if (rows.empty()) {
    return;
  }
  for (const auto & [path, value] : rows.front().overrides) {
    out << path << ',';
  }
  out << "rep,seed,pi,pi_norm,qos,p_ttc_5,changes_per_vehicle,median_silence_s,tracks\n";
  for (const auto & r : rows) {
    for (const auto & [path, value] : r.overrides) {
      out << value << ',';
    }
    out << r.repetition << ',' << r.result.seed << ',' << num(r.result.pi) << ','
        << num(r.result.pi_norm) << ',' << num(r.result.qos.qos) << ','
        << num(r.result.qos.p_ttc_5) << ',' << num(r.result.pseudonyms.changes_per_vehicle)
        << ',' << num(r.result.realized.median_silence_s) << ',' << r.result.tracks << '\n';
  }
}

namespace
{

std::vector<SweepCell> group_cells(
  const std::vector<std::pair<std::vector<std::pair<std::string, std::string>>,
  std::array<double, 3>>> & rows)
{
  std::vector<SweepCell> cells;
  for (const auto & [params, vals] : rows) {
    auto it = std::find_if(
      cells.begin(), cells.end(), [&](const SweepCell & c) {return c.params == params;});
    if (it == cells.end()) {
      cells.push_back({params, 0.0, 0.0, 0.0, 0});
      it = cells.end() - 1;
    }
    it->pi += vals[0];
    it->pi_norm += vals[1];
    it->qos += vals[2];
    ++it->repetitions;
  }
  for (auto & c : cells) {
    const double n = static_cast<double>(c.repetitions);
    c.pi /= n;
    c.pi_norm /= n;
    c.qos /= n;
  }
  return cells;
}

}  // namespace

std::vector<SweepCell> aggregate_cells(const std::vector<SweepRow> & rows)
{
  std::vector<std::pair<std::vector<std::pair<std::string, std::string>>, std::array<double, 3>>> flat;
  for (const auto & r : rows) {
    flat.push_back({r.overrides, {r.result.pi, r.result.pi_norm, r.result.qos.qos}});
  }
  return group_cells(flat);
}

std::vector<SweepCell> read_sweep_table(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("empty sweep table");
  }
  const auto header = split(line, ',');
  std::vector<std::size_t> param_cols;
  std::optional<std::size_t> pi_col;
  std::optional<std::size_t> pin_col;
  std::optional<std::size_t> qos_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].find('.') != std::string::npos) {
      param_cols.push_back(i);
    } else if (header[i] == "pi") {
      pi_col = i;
    } else if (header[i] == "pi_norm") {
      pin_col = i;
    } else if (header[i] == "qos") {
      qos_col = i;
    }
  }
  if (!pi_col || !pin_col || !qos_col) {
    throw ConfigError("sweep table lacks pi, pi_norm or qos columns");
  }
  std::vector<std::pair<std::vector<std::pair<std::string, std::string>>, std::array<double, 3>>> flat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != header.size()) {
      throw ConfigError("sweep table line " + std::to_string(line_no) + ": wrong field count");
    }
    std::vector<std::pair<std::string, std::string>> params;
    for (auto c : param_cols) {
      params.emplace_back(header[c], f[c]);
    }
    try {
      flat.push_back({params, {std::stod(f[*pi_col]), std::stod(f[*pin_col]), std::stod(f[*qos_col])}});
    } catch (const std::exception &) {
      throw ConfigError("sweep table line " + std::to_string(line_no) + ": bad number");
    }
  }
  return group_cells(flat);
}

ParamSelection select_cads_params(
  const std::vector<SweepCell> & cells, double qos_floor, double low_trace_cap)
{
  std::vector<const SweepCell *> ok;
  for (const auto & c : cells) {
    if (c.qos >= qos_floor) {
      ok.push_back(&c);
    }
  }
  ParamSelection sel;
  if (ok.empty()) {
    return sel;
  }
  auto q = [](const SweepCell * c) {return std::llround(c->qos);};
  // Best by key, then lowest traceability, then first in table order.
  auto pick = [&](auto key, auto admissible) -> std::optional<SweepCell> {
      const SweepCell * best = nullptr;
      for (const auto * c : ok) {
        if (!admissible(c)) {
          continue;
        }
        if (best == nullptr || key(c) < key(best) || (key(c) == key(best) && c->pi < best->pi)) {
          best = c;
        }
      }
      return best ? std::optional<SweepCell>(*best) : std::nullopt;
    };
  auto any = [](const SweepCell *) {return true;};

  sel.high = pick([&](const SweepCell * c) {return q(c);}, any);
  sel.low = pick(
    [&](const SweepCell * c) {return -q(c);},
    [&](const SweepCell * c) {return c->pi <= low_trace_cap;});
  std::vector<double> qs;
  for (const auto * c : ok) {
    qs.push_back(static_cast<double>(q(c)));
  }
  const double med = median(qs);
  sel.normal = pick(
    [&](const SweepCell * c) {return std::abs(static_cast<double>(q(c)) - med);}, any);
  return sel;
}

CadsOverlay overlay_from(const SweepCell & cell, const SchemeParams & base)
{
  CadsOverlay o{
    base.max_pseudonym_time_s, base.max_silence_s, base.pseudonym_time_increment_s,
    base.neighborhood_radius_m};
  for (const auto & [path, value] : cell.params) {
    const auto key = path.substr(path.rfind('.') + 1);
    double v = 0.0;
    try {
      v = std::stod(value);
    } catch (const std::exception &) {
      continue;
    }
    if (key == "max_pseudonym_time_s") {
      o.max_pseudonym_time_s = v;
    } else if (key == "max_silence_s") {
      o.max_silence_s = v;
    } else if (key == "pseudonym_time_increment_s") {
      o.pseudonym_time_increment_s = v;
    } else if (key == "neighborhood_radius_m") {
      o.neighborhood_radius_m = v;
    }
  }
  return o;
}

StepProfile profile_step_time(
  const TraceSet & traces, const SimulationConfig & cfg, std::uint64_t seed)
{
  SimulationConfig c = cfg;
  c.profile = true;
  c.collect_errors = false;
  const auto res = simulate(traces, c, seed);
  return res.profile.value_or(StepProfile{});
}

std::pair<TraceSet, TraceSet> extract_subdatasets(
  const TraceSet & traces, double window_s, double min_duration_s)
{
  const auto n = std::max<std::int64_t>(1, std::llround(window_s / traces.step_duration_s));
  const auto first = traces.first_step();
  const auto last = traces.last_step();
  return {
    crop_window(traces, first, first + n, min_duration_s),
    crop_window(traces, last + 1 - n, last + 1, min_duration_s)};
}

}  // namespace cadsim
