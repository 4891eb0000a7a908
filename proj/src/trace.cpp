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

#include "cadsim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "cadsim/rng.hpp"

namespace cadsim
{

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double normalize_heading(double rad)
{
  double h = std::fmod(rad, kTwoPi);
  if (h < 0.0) {
    h += kTwoPi;
  }
  return h >= kTwoPi ? 0.0 : h;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double & out)
{
  if (s.empty()) {
    return false;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

struct Columns
{
  std::size_t time = 0;
  std::size_t id = 1;
  std::size_t x = 2;
  std::size_t y = 3;
  std::size_t speed = std::numeric_limits<std::size_t>::max();
  std::size_t heading = std::numeric_limits<std::size_t>::max();
  std::size_t count = 4;
};

Columns columns_from_header(const std::vector<std::string_view> & fields, std::size_t line)
{
  Columns c;
  c.count = fields.size();
  c.time = c.id = c.x = c.y = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto f = fields[i];
    if (f == "time") {
      c.time = i;
    } else if (f == "id") {
      c.id = i;
    } else if (f == "x") {
      c.x = i;
    } else if (f == "y") {
      c.y = i;
    } else if (f == "speed") {
      c.speed = i;
    } else if (f == "heading") {
      c.heading = i;
    }
  }
  if (c.time == std::numeric_limits<std::size_t>::max() ||
      c.id == std::numeric_limits<std::size_t>::max() ||
      c.x == std::numeric_limits<std::size_t>::max() ||
      c.y == std::numeric_limits<std::size_t>::max())
  {
    throw TraceParseError(line, "header must name time, id, x and y columns");
  }
  return c;
}

}  // namespace

TraceParseError::TraceParseError(std::size_t line, const std::string & what)
: TraceError("line " + std::to_string(line) + ": " + what), line_(line)
{
}

void TraceSet::recompute_bounds()
{
  bounds = Bounds{};
  bool first = true;
  for (const auto & t : traces) {
    for (const auto & s : t.samples) {
      if (first) {
        bounds = Bounds{s.x, s.y, s.x, s.y};
        first = false;
        continue;
      }
      bounds.min_x = std::min(bounds.min_x, s.x);
      bounds.min_y = std::min(bounds.min_y, s.y);
      bounds.max_x = std::max(bounds.max_x, s.x);
      bounds.max_y = std::max(bounds.max_y, s.y);
    }
  }
}

std::int64_t TraceSet::first_step() const
{
  std::int64_t s = std::numeric_limits<std::int64_t>::max();
  for (const auto & t : traces) {
    s = std::min(s, t.first_step());
  }
  return traces.empty() ? 0 : s;
}

std::int64_t TraceSet::last_step() const
{
  std::int64_t s = std::numeric_limits<std::int64_t>::min();
  for (const auto & t : traces) {
    s = std::max(s, t.last_step());
  }
  return traces.empty() ? -1 : s;
}

TraceSet parse_traces(std::istream & in, double step_duration_s)
{
  if (!(step_duration_s > 0.0)) {
    throw TraceError("step duration must be positive");
  }
  TraceSet set;
  set.step_duration_s = step_duration_s;

  std::unordered_map<std::string, std::size_t> index;
  Columns cols;
  bool first_row = true;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto fields = split_csv(line);
    if (first_row) {
      first_row = false;
      double probe = 0.0;
      if (!parse_double(fields.front(), probe)) {
        cols = columns_from_header(fields, line_no);
        continue;
      }
      if (fields.size() == 6) {
        cols.speed = 4;
        cols.heading = 5;
        cols.count = 6;
      }
    }
    if (fields.size() != cols.count) {
      throw TraceParseError(
        line_no, "expected " + std::to_string(cols.count) + " fields, got " +
        std::to_string(fields.size()));
    }
    TraceSample s;
    double time = 0.0;
    if (!parse_double(fields[cols.time], time)) {
      throw TraceParseError(line_no, "bad time value '" + std::string(fields[cols.time]) + "'");
    }
    if (!parse_double(fields[cols.x], s.x) || !parse_double(fields[cols.y], s.y)) {
      throw TraceParseError(line_no, "bad coordinate");
    }
    if (cols.speed < fields.size()) {
      if (!parse_double(fields[cols.speed], s.speed) || s.speed < 0.0) {
        throw TraceParseError(line_no, "bad speed");
      }
    }
    if (cols.heading < fields.size()) {
      double deg = 0.0;
      if (!parse_double(fields[cols.heading], deg)) {
        throw TraceParseError(line_no, "bad heading");
      }
      s.heading = normalize_heading(deg * std::numbers::pi / 180.0);
    }
    const auto id = std::string(fields[cols.id]);
    if (id.empty()) {
      throw TraceParseError(line_no, "empty vehicle id");
    }
    s.step = std::llround(time / step_duration_s);

    auto [it, inserted] = index.try_emplace(id, set.traces.size());
    if (inserted) {
      set.traces.push_back(Trace{id, {}});
    }
    set.traces[it->second].samples.push_back(s);
  }

  for (auto & t : set.traces) {
    std::stable_sort(
      t.samples.begin(), t.samples.end(),
      [](const TraceSample & a, const TraceSample & b) {return a.step < b.step;});
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
      const auto prev = t.samples[i - 1].step;
      const auto cur = t.samples[i].step;
      if (cur == prev) {
        throw TraceError(
          "duplicate sample for vehicle '" + t.vehicle_id + "' at step " + std::to_string(cur));
      }
      if (cur != prev + 1) {
        throw TraceError(
          "gap in trace of vehicle '" + t.vehicle_id + "' between steps " +
          std::to_string(prev) + " and " + std::to_string(cur));
      }
    }
  }
  set.has_kinematics = cols.speed < cols.count && cols.heading < cols.count;
  set.recompute_bounds();
  return set;
}

TraceSet load_traces(const std::filesystem::path & path, double step_duration_s)
{
  std::ifstream in(path);
  if (!in) {
    throw TraceError("cannot open trace file " + path.string());
  }
  return parse_traces(in, step_duration_s);
}

void write_traces(const TraceSet & traces, std::ostream & out)
{
  out << "time,id,x,y\n";
  out << std::setprecision(10);
  for (const auto & t : traces.traces) {
    for (const auto & s : t.samples) {
      out << static_cast<double>(s.step) * traces.step_duration_s << ',' << t.vehicle_id << ','
          << s.x << ',' << s.y << '\n';
    }
  }
}

void save_traces(const TraceSet & traces, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw TraceError("cannot write trace file " + path.string());
  }
  write_traces(traces, out);
}

TraceSet derive_kinematics(TraceSet traces)
{
  const double dt = traces.step_duration_s;
  for (auto & t : traces.traces) {
    auto & s = t.samples;
    if (s.size() < 2) {
      throw TraceError("trace of vehicle '" + t.vehicle_id + "' has fewer than two samples");
    }
    // Heading before the vehicle first moves: the first heading it ever takes.
    double heading = 0.0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const double dx = s[k + 1].x - s[k].x;
      const double dy = s[k + 1].y - s[k].y;
      if (dx != 0.0 || dy != 0.0) {
        heading = normalize_heading(std::atan2(dy, dx));
        break;
      }
    }
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const double dx = s[k + 1].x - s[k].x;
      const double dy = s[k + 1].y - s[k].y;
      const double dist = std::hypot(dx, dy);
      if (dist > 0.0) {
        heading = normalize_heading(std::atan2(dy, dx));
      }
      s[k].speed = dist / dt;
      s[k].heading = heading;
    }
    s.back().speed = s[s.size() - 2].speed;
    s.back().heading = s[s.size() - 2].heading;
  }
  traces.has_kinematics = true;
  return traces;
}

double footprint_area(const Trace & trace)
{
  if (trace.samples.empty()) {
    return 0.0;
  }
  double min_x = trace.samples.front().x;
  double max_x = min_x;
  double min_y = trace.samples.front().y;
  double max_y = min_y;
  for (const auto & s : trace.samples) {
    min_x = std::min(min_x, s.x);
    max_x = std::max(max_x, s.x);
    min_y = std::min(min_y, s.y);
    max_y = std::max(max_y, s.y);
  }
  const double side = std::max(max_x - min_x, max_y - min_y);
  return side * side;
}

double duration_s(const Trace & trace, double step_duration_s)
{
  return static_cast<double>(trace.last_step() - trace.first_step()) * step_duration_s;
}

TraceSet filter_traces(TraceSet traces, double min_area_m2, double min_duration_s)
{
  const double dt = traces.step_duration_s;
  std::erase_if(
    traces.traces, [&](const Trace & t) {
      return t.samples.size() < 2 || footprint_area(t) < min_area_m2 ||
      duration_s(t, dt) < min_duration_s;
    });
  traces.recompute_bounds();
  return traces;
}

TraceSet crop_window(
  const TraceSet & traces, std::int64_t start_step, std::int64_t end_step,
  double min_duration_s)
{
  TraceSet out;
  out.step_duration_s = traces.step_duration_s;
  for (const auto & t : traces.traces) {
    Trace piece{t.vehicle_id, {}};
    for (const auto & s : t.samples) {
      if (s.step >= start_step && s.step < end_step) {
        piece.samples.push_back(s);
      }
    }
    if (piece.samples.size() >= 2 && duration_s(piece, out.step_duration_s) >= min_duration_s) {
      out.traces.push_back(std::move(piece));
    }
  }
  out.recompute_bounds();
  return out;
}

void SynthConfig::validate() const
{
  if (blocks_x < 1 || blocks_y < 0) {
    throw TraceError("synthetic grid needs blocks_x >= 1 and blocks_y >= 0");
  }
  if (!(block_length_m > 0.0) || vehicle_count < 1 || !(duration_s > 0.0) ||
      !(step_duration_s > 0.0))
  {
    throw TraceError("synthetic config dimensions must be positive");
  }
  if (speed_min_mps <= 0.0 || speed_max_mps < speed_min_mps) {
    throw TraceError("synthetic speed range must satisfy 0 < min <= max");
  }
  if (turn_probability < 0.0 || turn_probability > 1.0) {
    throw TraceError("turn probability must lie in [0, 1]");
  }
  if (lane_offset_m < 0.0 || spawn_window_s < 0.0 || spawn_window_s >= duration_s) {
    throw TraceError("invalid lane offset or spawn window");
  }
}

namespace
{

// Unit steps for east, north, west, south.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

struct GridWalker
{
  int node_x = 0;
  int node_y = 0;
  int dir = 0;
  double along = 0.0;
  double speed = 0.0;
};

bool edge_exists(const SynthConfig & cfg, int nx, int ny, int dir)
{
  const int tx = nx + kDx[dir];
  const int ty = ny + kDy[dir];
  return tx >= 0 && tx <= cfg.blocks_x && ty >= 0 && ty <= cfg.blocks_y;
}

int choose_direction(const SynthConfig & cfg, const GridWalker & w, Rng & rng)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int straight = w.dir;
  const int left = (w.dir + 1) % 4;
  const int right = (w.dir + 3) % 4;
  std::vector<int> turns;
  for (int d : {left, right}) {
    if (edge_exists(cfg, w.node_x, w.node_y, d)) {
      turns.push_back(d);
    }
  }
  const bool can_go_straight = edge_exists(cfg, w.node_x, w.node_y, straight);
  const bool wants_turn = unit(rng) < cfg.turn_probability;
  if ((wants_turn || !can_go_straight) && !turns.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, turns.size() - 1);
    return turns[pick(rng)];
  }
  if (can_go_straight) {
    return straight;
  }
  return (w.dir + 2) % 4;
}

}  // namespace

TraceSet generate_synthetic(const SynthConfig & cfg, std::uint64_t seed)
{
  cfg.validate();
  const double dt = cfg.step_duration_s;
  const auto total_steps = static_cast<std::int64_t>(std::llround(cfg.duration_s / dt));
  const auto spawn_steps = static_cast<std::int64_t>(std::floor(cfg.spawn_window_s / dt));
  const double length = cfg.block_length_m;

  TraceSet set;
  set.step_duration_s = dt;
  set.traces.reserve(static_cast<std::size_t>(cfg.vehicle_count));
  for (int v = 0; v < cfg.vehicle_count; ++v) {
    Rng rng = make_rng(seed, Stream::kSynthetic, static_cast<std::uint64_t>(v));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> speed(cfg.speed_min_mps, cfg.speed_max_mps);
    std::uniform_int_distribution<int> node_x(0, cfg.blocks_x);
    std::uniform_int_distribution<int> node_y(0, cfg.blocks_y);
    std::uniform_int_distribution<int> dir(0, 3);
    std::uniform_int_distribution<std::int64_t> spawn(0, spawn_steps);

    GridWalker w;
    do {
      w.node_x = node_x(rng);
      w.node_y = node_y(rng);
      w.dir = dir(rng);
    } while (!edge_exists(cfg, w.node_x, w.node_y, w.dir));
    w.along = unit(rng) * length;
    w.speed = speed(rng);
    const std::int64_t start = spawn(rng);

    Trace trace{"v" + std::to_string(v), {}};
    trace.samples.reserve(static_cast<std::size_t>(total_steps - start));
    for (std::int64_t k = start; k < total_steps; ++k) {
      const int d = w.dir;
      const double cx = w.node_x * length + kDx[d] * w.along;
      const double cy = w.node_y * length + kDy[d] * w.along;
      // Right-hand lane: offset to the right of the travel direction.
      TraceSample s;
      s.step = k;
      s.x = cx + kDy[d] * cfg.lane_offset_m;
      s.y = cy - kDx[d] * cfg.lane_offset_m;
      trace.samples.push_back(s);

      double remaining_time = dt;
      while (remaining_time > 0.0) {
        const double to_node = length - w.along;
        const double travel = w.speed * remaining_time;
        if (travel < to_node) {
          w.along += travel;
          break;
        }
        remaining_time -= to_node / w.speed;
        w.node_x += kDx[w.dir];
        w.node_y += kDy[w.dir];
        w.along = 0.0;
        w.dir = choose_direction(cfg, w, rng);
        w.speed = speed(rng);
      }
    }
    set.traces.push_back(std::move(trace));
  }
  set = derive_kinematics(std::move(set));
  set.recompute_bounds();
  return set;
}

}  // namespace cadsim
