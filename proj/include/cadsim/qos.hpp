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

#ifndef CADSIM__QOS_HPP_
#define CADSIM__QOS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cadsim
{

class QosError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Estimation errors in the observed vehicle's heading frame. Entry i of the
/// three vectors comes from one tracker state and is resampled jointly.
struct ErrorSamples
{
  std::vector<double> dy;     // lateral position, m
  std::vector<double> dx;     // longitudinal position, m
  std::vector<double> dxdot;  // longitudinal speed, m/s

  std::size_t size() const { return dx.size(); }
  bool empty() const { return dx.empty(); }
  void add(double lateral, double longitudinal, double longitudinal_speed);
  void append(const ErrorSamples & other);
};

struct FrameError
{
  double dx = 0.0;
  double dy = 0.0;
  double dxdot = 0.0;
};

/// Projects a world-frame error (estimate minus truth) onto the longitudinal
/// axis (cos h, sin h) and the left normal (-sin h, cos h).
FrameError rotate_error(double ex, double ey, double evx, double evy, double heading);

struct FcwScenario
{
  double lane_half_width_m = 1.8;
  double sv_lateral_m = 1.8;
  double ov2_offset_m = 5.4;
  double true_ttc_s = 3.0;
  double ov1_true_speed_mps = 10.0;
  double sv_lateral_noise_std_m = 0.5;
  double sv_pos_noise_std_m = 0.5;
  double sv_speed_noise_factor = 0.02;
  double ttc_tolerance_s = 0.5;

  void validate() const;
};

/// Minimum Monte Carlo draws per estimate.
inline constexpr std::int64_t kMinDraws = 10000;

/// (x_ov1 - x_sv) / (v_sv - v_ov1); nullopt when the vehicles do not close in.
std::optional<double> compute_ttc(double x_sv, double x_ov1, double v_sv, double v_ov1);

struct LaneProbabilities
{
  double p_true_pos = 0.0;
  double p_false_pos = 0.0;
};

/// Draws are split over `shards` independently seeded blocks; the result is a
/// function of (samples, n, seed, shards) only.
LaneProbabilities mc_lane_probabilities(
  const ErrorSamples & s, std::int64_t n, std::uint64_t seed, const FcwScenario & sc = {},
  int shards = 4);

double mc_ttc_probability(
  const ErrorSamples & s, double delta_s, const FcwScenario & sc, std::int64_t n,
  std::uint64_t seed, int shards = 4);

struct QosReport
{
  double p_true_pos = 0.0;
  double p_false_pos = 0.0;
  double p_ttc_5 = 0.0;
  double p_ttc_15 = 0.0;
  double p_fcw_5 = 0.0;
  double p_fcw_15 = 0.0;
  /// 100 * p_fcw_5.
  double qos = 0.0;
  /// TTC success at the strict tolerance; informational, not part of qos.
  std::optional<double> p_ttc_5_strict;
  std::size_t samples = 0;
};

QosReport qos_fcw(double p_true_pos, double p_false_pos, double p_ttc_5);

struct QosConfig
{
  std::int64_t draws = 100000;
  int shards = 4;
  FcwScenario scenario;
  double delta_s_low = 5.0;
  double delta_s_high = 15.0;
  /// Also report p_ttc at this tolerance (e.g. 0.2 s).
  std::optional<double> strict_tolerance_s;

  void validate() const;
};

QosReport evaluate_qos(const ErrorSamples & s, const QosConfig & cfg, std::uint64_t seed);

void write_error_samples(const ErrorSamples & s, std::ostream & out);

}  // namespace cadsim

#endif  // CADSIM__QOS_HPP_
