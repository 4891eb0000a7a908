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

#ifndef CADSIM__EXPERIMENT_HPP_
#define CADSIM__EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cadsim/adversary.hpp"
#include "cadsim/metrics.hpp"
#include "cadsim/qos.hpp"
#include "cadsim/schemes.hpp"
#include "cadsim/simulation.hpp"
#include "cadsim/trace.hpp"
#include "cadsim/tracker.hpp"

namespace cadsim
{

inline constexpr const char * kVersion = "0.1.0";

/// Invalid or inconsistent configuration; reported before any compute.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct TraceSource
{
  /// CSV trace file; synthetic traffic is generated when empty.
  std::optional<std::filesystem::path> file;
  SynthConfig synthetic;
  double step_duration_s = 1.0;
  bool filter = true;
  double min_area_m2 = 100.0;
  double min_duration_s = 15.0;
};

struct ExperimentConfig
{
  std::string name = "experiment";
  std::uint64_t seed = 1;
  int repetitions = 1;
  std::filesystem::path output_dir = "out";
  TraceSource traces;
  SchemeConfig scheme;
  PreferenceMix preferences{0.0, 100.0, 0.0};
  TrackerConfig adversary;
  /// Derive max_silence from the scheme (and LAA cycle) instead.
  bool adversary_auto_max_silence = true;
  TrackerConfig neighbor_tracker;
  bool neighbor_auto_max_silence = true;
  std::optional<LaaConfig> laa;
  QosConfig qos;
  bool profile = false;
  bool dump_errors = false;

  /// Throws ConfigError listing every problem found.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json & j);
ExperimentConfig load_config(const std::filesystem::path & path);
nlohmann::json config_to_json(const ExperimentConfig & cfg);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig & cfg);

/// Seed of repetition `rep`.
std::uint64_t repetition_seed(std::uint64_t master, int rep);

/// Longest silence in steps that the evaluated vehicles can produce.
int silence_steps_bound(const ExperimentConfig & cfg, double step_duration_s);

TraceSet prepare_traces(const TraceSource & src, std::uint64_t seed);

struct GroupResult
{
  PrivacyLevel level = PrivacyLevel::kNormal;
  std::size_t vehicles = 0;
  double pi = 0.0;
  double pi_norm = 0.0;
};

struct RunResult
{
  std::uint64_t seed = 0;
  std::size_t vehicles = 0;
  std::size_t tracks = 0;
  double pi = 0.0;
  double pi_norm = 0.0;
  /// One entry per privacy level present.
  std::vector<GroupResult> groups;
  QosReport qos;
  PseudonymStats pseudonyms;
  RealizedTimes realized;
  std::size_t compromised = 0;
  std::size_t victims = 0;
  bool laa_empty_warning = false;
  int adversary_max_silence_steps = 0;
  /// Wall-clock data; kept out of result.json.
  std::optional<StepProfile> profile;
};

/// A run with everything needed to write its artifacts.
struct RunOutput
{
  RunResult result;
  TraceSet traces;
  SimulationResult sim;
  std::vector<TrackRecord> tracks;
  TraceabilityReport report;
  std::vector<std::size_t> victims;
};

RunOutput run_once(const ExperimentConfig & cfg, const TraceSet & traces, std::uint64_t seed);

/// All repetitions of `cfg`; writes the artifacts when `write` is set.
std::vector<RunResult> run_experiment(const ExperimentConfig & cfg, bool write = true);

void write_run_artifacts(
  const ExperimentConfig & cfg, const std::vector<RunOutput> & runs,
  const std::filesystem::path & dir);

nlohmann::json result_to_json(const RunResult & r);
nlohmann::json profile_to_json(const StepProfile & p);

/// Mean of the headline numbers over repetitions.
struct RunSummary
{
  double pi = 0.0;
  double pi_norm = 0.0;
  double qos = 0.0;
  double changes_per_vehicle = 0.0;
  double avg_pseudonym_lifetime_s = 0.0;
  double median_silence_s = 0.0;
};

RunSummary summarize(const std::vector<RunResult> & runs);

/// One swept parameter, addressed by a dotted path into the config document
/// (e.g. "scheme.params.max_silence_s").
struct SweepAxis
{
  std::string path;
  std::vector<nlohmann::json> values;
};

struct SweepRow
{
  std::vector<std::pair<std::string, std::string>> overrides;
  int repetition = 0;
  RunResult result;
};

/// Cartesian product of the axes; repetitions per cell come from the base.
std::vector<SweepRow> sweep(
  const nlohmann::json & base, const std::vector<SweepAxis> & grid,
  const std::function<void(std::size_t done, std::size_t total)> & progress = {});

void write_sweep_table(const std::vector<SweepRow> & rows, std::ostream & out);

/// A sweep cell averaged over its repetitions.
struct SweepCell
{
  std::vector<std::pair<std::string, std::string>> params;
  double pi = 0.0;
  double pi_norm = 0.0;
  double qos = 0.0;
  std::size_t repetitions = 0;
};

std::vector<SweepCell> read_sweep_table(std::istream & in);
std::vector<SweepCell> aggregate_cells(const std::vector<SweepRow> & rows);

struct ParamSelection
{
  std::optional<SweepCell> low;
  std::optional<SweepCell> normal;
  std::optional<SweepCell> high;
};

/// Drops cells with QoS below `qos_floor`, compares QoS in whole percent and
/// breaks ties by the lowest traceability:
///   high   - lowest QoS;
///   low    - highest QoS among cells with traceability <= low_trace_cap;
///   normal - QoS closest to the median QoS of the feasible cells.
ParamSelection select_cads_params(
  const std::vector<SweepCell> & cells, double qos_floor = 85.0, double low_trace_cap = 75.0);

/// The four CADS table values of a cell; parameters not swept come from `base`.
CadsOverlay overlay_from(const SweepCell & cell, const SchemeParams & base);

/// Per-vehicle-step timing of a profiled simulation without error collection.
StepProfile profile_step_time(
  const TraceSet & traces, const SimulationConfig & cfg, std::uint64_t seed);

/// Two windows of `window_s` from the start and the end of the traces,
/// keeping pieces that last at least `min_duration_s`.
std::pair<TraceSet, TraceSet> extract_subdatasets(
  const TraceSet & traces, double window_s = 360.0, double min_duration_s = 60.0);

}  // namespace cadsim

#endif  // CADSIM__EXPERIMENT_HPP_
