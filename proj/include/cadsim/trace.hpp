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

#ifndef CADSIM__TRACE_HPP_
#define CADSIM__TRACE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cadsim
{

/// One ground-truth sample of a vehicle on the discrete time grid.
struct TraceSample
{
  std::int64_t step = 0;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;    // m/s
  double heading = 0.0;  // rad, [0, 2*pi)
};

struct Trace
{
  std::string vehicle_id;
  std::vector<TraceSample> samples;  // consecutive steps, no gaps

  std::int64_t first_step() const { return samples.front().step; }
  std::int64_t last_step() const { return samples.back().step; }
  /// L(v) in steps.
  std::int64_t lifetime_steps() const { return last_step() - first_step() + 1; }
  bool alive_at(std::int64_t step) const
  {
    return !samples.empty() && step >= first_step() && step <= last_step();
  }
  /// Requires alive_at(step).
  const TraceSample & at(std::int64_t step) const
  {
    return samples[static_cast<std::size_t>(step - first_step())];
  }
};

struct Bounds
{
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

struct TraceSet
{
  std::vector<Trace> traces;
  double step_duration_s = 1.0;
  Bounds bounds;
  /// Speed and heading are filled in (read from input or derived).
  bool has_kinematics = false;

  void recompute_bounds();
  std::int64_t first_step() const;
  std::int64_t last_step() const;
};

class TraceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class TraceParseError : public TraceError
{
public:
  TraceParseError(std::size_t line, const std::string & what);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Reads `time,id,x,y` rows (header optional). An optional header may add
/// `speed` (m/s) and `heading` (degrees) columns.
TraceSet parse_traces(std::istream & in, double step_duration_s = 1.0);
TraceSet load_traces(const std::filesystem::path & path, double step_duration_s = 1.0);

void write_traces(const TraceSet & traces, std::ostream & out);
void save_traces(const TraceSet & traces, const std::filesystem::path & path);

/// Speed and heading from consecutive positions. A stopped vehicle keeps its
/// last heading; the final sample copies the one before it.
TraceSet derive_kinematics(TraceSet traces);

/// Area of the smallest axis-aligned square that contains the trace.
double footprint_area(const Trace & trace);
double duration_s(const Trace & trace, double step_duration_s);

/// Drops traces that stay within `min_area_m2` or last less than
/// `min_duration_s` from first to last sample.
TraceSet filter_traces(TraceSet traces, double min_area_m2 = 100.0, double min_duration_s = 15.0);

/// Keeps the part of every trace inside [start_step, end_step) and drops
/// pieces shorter than `min_duration_s`.
TraceSet crop_window(
  const TraceSet & traces, std::int64_t start_step, std::int64_t end_step,
  double min_duration_s);

/// Manhattan-grid mobility. Vehicles drive on the right lane of a
/// blocks_x x blocks_y street grid, draw a new speed at every intersection and
/// turn with `turn_probability`. blocks_y = 0 gives a single east-west road.
struct SynthConfig
{
  int blocks_x = 5;
  int blocks_y = 5;
  double block_length_m = 200.0;
  int vehicle_count = 200;
  double speed_min_mps = 8.0;
  double speed_max_mps = 14.0;
  double duration_s = 600.0;
  double turn_probability = 0.4;
  double step_duration_s = 1.0;
  double lane_offset_m = 1.8;
  /// Vehicles enter at a uniform time in [0, spawn_window_s].
  double spawn_window_s = 0.0;

  void validate() const;
};

TraceSet generate_synthetic(const SynthConfig & cfg, std::uint64_t seed);

}  // namespace cadsim

#endif  // CADSIM__TRACE_HPP_
