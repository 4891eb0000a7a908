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

// Command-line front end: gen, run, sweep, select-params, report.
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cadsim/experiment.hpp"
#include "cadsim/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

json read_json(const fs::path & p)
{
  std::ifstream in(p);
  if (!in) {
    throw cadsim::ConfigError("cannot open " + p.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error & e) {
    throw cadsim::ConfigError(p.string() + ": " + e.what());
  }
}

void print_summary(const std::string & name, const std::vector<cadsim::RunResult> & runs)
{
  const auto s = cadsim::summarize(runs);
  std::cout << std::fixed << std::setprecision(2) << name << ": Pi " << s.pi << " %, Pi_n "
            << s.pi_norm << " %, QoS " << s.qos << " %, changes/vehicle "
            << s.changes_per_vehicle << ", median silence " << s.median_silence_s << " s ("
            << runs.size() << " run" << (runs.size() == 1 ? "" : "s") << ")\n";
}

int cmd_gen(const cadsim::SynthConfig & sc, std::uint64_t seed, const fs::path & out)
{
  try {
    sc.validate();
  } catch (const cadsim::TraceError & e) {
    throw cadsim::ConfigError(e.what());
  }
  const auto traces = cadsim::generate_synthetic(sc, seed);
  if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
  cadsim::save_traces(traces, out);
  std::cout << "wrote " << traces.traces.size() << " traces to " << out.string() << '\n';
  return 0;
}

int cmd_run(
  const fs::path & config, const std::string & out_dir, std::optional<std::uint64_t> seed,
  std::optional<int> reps)
{
  auto cfg = cadsim::load_config(config);
  if (!out_dir.empty()) {
    cfg.output_dir = out_dir;
  }
  if (seed) {
    cfg.seed = *seed;
  }
  if (reps) {
    cfg.repetitions = *reps;
  }
  cfg.validate();
  const auto runs = cadsim::run_experiment(cfg, true);
  print_summary(cfg.name, runs);
  for (const auto & r : runs) {
    if (r.laa_empty_warning) {
      std::cerr << "warning: LAA fraction selects no vehicle\n";
      break;
    }
  }
  std::cout << "artifacts in " << cfg.output_dir.string() << '\n';
  return 0;
}

int cmd_sweep(const fs::path & spec_path, const std::string & out_dir)
{
  const json spec = read_json(spec_path);
  if (!spec.is_object() || !spec.contains("grid")) {
    throw cadsim::ConfigError("sweep file needs a \"grid\" object");
  }
  for (const auto & item : spec.items()) {
    if (item.key() != "grid" && item.key() != "base" && item.key() != "base_config") {
      throw cadsim::ConfigError("sweep file: unknown key '" + item.key() + "'");
    }
  }
  json base = json::object();
  if (spec.contains("base_config")) {
    fs::path p = spec["base_config"].get<std::string>();
    if (p.is_relative()) {
      p = spec_path.parent_path() / p;
    }
    base = read_json(p);
  }
  if (spec.contains("base")) {
    base.merge_patch(spec["base"]);
  }
  std::vector<cadsim::SweepAxis> grid;
  for (const auto & item : spec["grid"].items()) {
    if (!item.value().is_array()) {
      throw cadsim::ConfigError("sweep axis '" + item.key() + "' must be an array");
    }
    grid.push_back({item.key(), item.value().get<std::vector<json>>()});
  }
  const auto base_cfg = cadsim::parse_config(base);
  const fs::path dir = out_dir.empty() ? base_cfg.output_dir : fs::path(out_dir);
  const auto rows = cadsim::sweep(base, grid, [](std::size_t done, std::size_t total) {
        std::cerr << "\rsweep " << done << '/' << total << std::flush;
      });
  std::cerr << '\n';
  fs::create_directories(dir);
  std::ofstream out(dir / "sweep.csv", std::ios::binary);
  cadsim::write_sweep_table(rows, out);
  std::cout << "wrote " << rows.size() << " rows (" << cadsim::aggregate_cells(rows).size()
            << " cells) to " << (dir / "sweep.csv").string() << '\n';
  return 0;
}

json cell_json(const std::optional<cadsim::SweepCell> & c)
{
  if (!c) {
    return nullptr;
  }
  json p = json::object();
  for (const auto & [k, v] : c->params) {
    p[k] = v;
  }
  return {{"params", p}, {"pi", c->pi}, {"pi_norm", c->pi_norm}, {"qos", c->qos},
    {"repetitions", c->repetitions}};
}

int cmd_select(
  const std::string & sparse, const std::string & dense, double floor, double cap,
  const std::string & out_path)
{
  if (sparse.empty() && dense.empty()) {
    throw cadsim::ConfigError("give --sparse and/or --dense sweep tables");
  }
  const cadsim::SchemeParams base;
  json selection = json::object();
  json table = json::object();
  bool complete = true;
  for (const auto & [density, path] : {std::pair{"sparse", sparse}, std::pair{"dense", dense}}) {
    if (path.empty()) {
      complete = false;
      continue;
    }
    std::ifstream in(path);
    if (!in) {
      throw cadsim::ConfigError("cannot open " + path);
    }
    const auto cells = cadsim::read_sweep_table(in);
    const auto sel = cadsim::select_cads_params(cells, floor, cap);
    const std::pair<const char *, const std::optional<cadsim::SweepCell> *> cats[] = {
      {"low", &sel.low}, {"normal", &sel.normal}, {"high", &sel.high}};
    for (const auto & [level, cell] : cats) {
      selection[density][level] = cell_json(*cell);
      if (*cell) {
        const auto o = cadsim::overlay_from(**cell, base);
        table[level][density] = {
          {"max_pseudonym_time_s", o.max_pseudonym_time_s}, {"max_silence_s", o.max_silence_s},
          {"pseudonym_time_increment_s", o.pseudonym_time_increment_s},
          {"neighborhood_radius_m", o.neighborhood_radius_m}};
        std::cout << density << ' ' << level << ": " << o.max_pseudonym_time_s << ", "
                  << o.max_silence_s << ", " << o.pseudonym_time_increment_s << ", "
                  << o.neighborhood_radius_m << " (QoS " << (*cell)->qos << ", Pi " << (*cell)->pi
                  << ")\n";
      } else {
        complete = false;
        std::cout << density << ' ' << level << ": no selection\n";
      }
    }
  }
  const json doc = {{"qos_floor", floor}, {"low_trace_cap", cap}, {"selection", selection},
    {"table", table}, {"complete", complete}};
  if (out_path.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::ofstream(out_path, std::ios::binary) << doc.dump(2) << '\n';
  }
  return 0;
}

int cmd_report(const fs::path & dir, const std::string & out_path)
{
  const json result = read_json(dir / "result.json");
  std::ostringstream csv;
  csv << "rep,seed,group,vehicles,pi,pi_norm,qos,p_true_pos,p_false_pos,p_ttc_5,p_ttc_15,"
    "changes_per_vehicle,avg_pseudonym_lifetime_s,median_silence_s,compromised,victims\n";
  std::size_t rep = 0;
  for (const auto & r : result.at("runs")) {
    const auto & q = r.at("qos");
    const auto & p = r.at("pseudonyms");
    auto row = [&](const std::string & group, const json & vehicles, const json & pi,
        const json & pin) {
        csv << rep << ',' << r.at("seed").dump() << ',' << group << ',' << vehicles.dump() << ','
            << pi.dump() << ',' << pin.dump() << ',' << q.at("qos").dump() << ','
            << q.at("p_true_pos").dump() << ',' << q.at("p_false_pos").dump() << ','
            << q.at("p_ttc_5").dump() << ',' << q.at("p_ttc_15").dump() << ','
            << p.at("changes_per_vehicle").dump() << ',' << p.at("avg_lifetime_s").dump() << ','
            << p.at("median_silence_s").dump() << ',' << r.at("laa").at("compromised").dump()
            << ',' << r.at("laa").at("victims").dump() << '\n';
      };
    const auto & t = r.at("traceability");
    row("all", r.at("vehicles"), t.at("pi"), t.at("pi_norm"));
    for (const auto & g : t.at("groups")) {
      row(g.at("preference").get<std::string>(), g.at("vehicles"), g.at("pi"), g.at("pi_norm"));
    }
    ++rep;
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(out_path, std::ios::binary) << csv.str();
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Pseudonym-change privacy and FCW quality-of-service simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cadsim::kVersion);

  auto * gen = app.add_subcommand("gen", "Generate Manhattan-grid synthetic traces");
  cadsim::SynthConfig sc;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "traces.csv";
  gen->add_option("--blocks-x", sc.blocks_x, "Blocks along x")->capture_default_str();
  gen->add_option("--blocks-y", sc.blocks_y, "Blocks along y")->capture_default_str();
  gen->add_option("--block-length", sc.block_length_m, "Block edge length (m)")->capture_default_str();
  gen->add_option("--vehicles", sc.vehicle_count, "Number of vehicles")->capture_default_str();
  gen->add_option("--speed-min", sc.speed_min_mps, "Minimum speed (m/s)")->capture_default_str();
  gen->add_option("--speed-max", sc.speed_max_mps, "Maximum speed (m/s)")->capture_default_str();
  gen->add_option("--duration", sc.duration_s, "Duration (s)")->capture_default_str();
  gen->add_option("--turn-probability", sc.turn_probability, "Turn probability")->capture_default_str();
  gen->add_option("--spawn-window", sc.spawn_window_s, "Entry times spread (s)")->capture_default_str();
  gen->add_option("--step", sc.step_duration_s, "Step duration (s)")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "Output CSV")->capture_default_str();

  auto * run = app.add_subcommand("run", "Run one experiment");
  std::string run_config;
  std::string run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_reps;
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->add_option("-o,--output", run_out, "Output directory (overrides config)");
  run->add_option("--seed", run_seed, "Master seed (overrides config)");
  run->add_option("--repetitions", run_reps, "Repetitions (overrides config)");

  auto * sw = app.add_subcommand("sweep", "Run a parameter grid");
  std::string sweep_file;
  std::string sweep_out;
  sw->add_option("spec", sweep_file, "Sweep file (JSON with base/base_config and grid)")->required();
  sw->add_option("-o,--output", sweep_out, "Output directory");

  auto * sel = app.add_subcommand("select-params", "Select CADS parameters from sweep tables");
  std::string sel_sparse;
  std::string sel_dense;
  double qos_floor = 85.0;
  double low_cap = 75.0;
  std::string sel_out;
  sel->add_option("--sparse", sel_sparse, "Sweep table of the sparse sub-dataset");
  sel->add_option("--dense", sel_dense, "Sweep table of the dense sub-dataset");
  sel->add_option("--qos-floor", qos_floor, "Minimum QoS (%)")->capture_default_str();
  sel->add_option("--low-trace-cap", low_cap, "Maximum traceability for low privacy (%)")
  ->capture_default_str();
  sel->add_option("-o,--output", sel_out, "Output JSON");

  auto * rep = app.add_subcommand("report", "Flatten a run directory into CSV");
  std::string rep_dir;
  std::string rep_out;
  rep->add_option("run_dir", rep_dir, "Run output directory")->required();
  rep->add_option("-o,--output", rep_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*gen) {
      return cmd_gen(sc, gen_seed, gen_out);
    }
    if (*run) {
      return cmd_run(run_config, run_out, run_seed, run_reps);
    }
    if (*sw) {
      return cmd_sweep(sweep_file, sweep_out);
    }
    if (*sel) {
      return cmd_select(sel_sparse, sel_dense, qos_floor, low_cap, sel_out);
    }
    if (*rep) {
      return cmd_report(rep_dir, rep_out);
    }
  } catch (const cadsim::ConfigError & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument & e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
