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

#include "cadsim/qos.hpp"

#include <array>
#include <cmath>
#include <future>
#include <ostream>
#include <random>

#include "cadsim/rng.hpp"

namespace cadsim
{

namespace
{

/// Zero-mean normal that degenerates to 0 for std == 0.
class Noise
{
public:
  explicit Noise(double std) : std_(std), dist_(0.0, std > 0.0 ? std : 1.0) {}
  double operator()(Rng & rng) { return std_ > 0.0 ? dist_(rng) : 0.0; }

private:
  double std_;
  std::normal_distribution<double> dist_;
};

void check_inputs(const ErrorSamples & s, std::int64_t n, int shards)
{
  if (s.empty()) {
    throw QosError("no error samples collected");
  }
  if (s.dy.size() != s.size() || s.dxdot.size() != s.size()) {
    throw QosError("error sample columns differ in length");
  }
  if (n < kMinDraws) {
    throw std::invalid_argument("at least 10000 Monte Carlo draws required");
  }
  if (shards < 1) {
    throw std::invalid_argument("shard count must be positive");
  }
}

using Hits = std::array<std::int64_t, 2>;

/// Runs `body(rng, draws)` per shard and sums the returned hit counts.
template<typename Body>
Hits sharded(std::int64_t n, std::uint64_t base_seed, int shards, Body body)
{
  std::vector<std::future<Hits>> jobs;
  for (int i = 0; i < shards; ++i) {
    const std::int64_t draws = n / shards + (i < n % shards ? 1 : 0);
    jobs.push_back(std::async(std::launch::async, [=]() {
        Rng rng = make_rng(base_seed, Stream::kShard, static_cast<std::uint64_t>(i));
        return body(rng, draws);
      }));
  }
  Hits hits{0, 0};
  for (auto & j : jobs) {
    const Hits h = j.get();
    hits[0] += h[0];
    hits[1] += h[1];
  }
  return hits;
}

}  // namespace

void ErrorSamples::add(double lateral, double longitudinal, double longitudinal_speed)
{
  dy.push_back(lateral);
  dx.push_back(longitudinal);
  dxdot.push_back(longitudinal_speed);
}

void ErrorSamples::append(const ErrorSamples & other)
{
  dy.insert(dy.end(), other.dy.begin(), other.dy.end());
  dx.insert(dx.end(), other.dx.begin(), other.dx.end());
  dxdot.insert(dxdot.end(), other.dxdot.begin(), other.dxdot.end());
}

FrameError rotate_error(double ex, double ey, double evx, double evy, double heading)
{
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {ex * c + ey * s, -ex * s + ey * c, evx * c + evy * s};
}

void FcwScenario::validate() const
{
  if (!(lane_half_width_m > 0.0 && true_ttc_s > 0.0 && ov1_true_speed_mps >= 0.0 &&
    ttc_tolerance_s > 0.0 && sv_lateral_noise_std_m >= 0.0 && sv_pos_noise_std_m >= 0.0 &&
    sv_speed_noise_factor >= 0.0))
  {
    throw std::invalid_argument("invalid FCW scenario");
  }
}

std::optional<double> compute_ttc(double x_sv, double x_ov1, double v_sv, double v_ov1)
{
  const double closing = v_sv - v_ov1;
  if (!(closing > 0.0)) {
    return std::nullopt;
  }
  return (x_ov1 - x_sv) / closing;
}

LaneProbabilities mc_lane_probabilities(
  const ErrorSamples & s, std::int64_t n, std::uint64_t seed, const FcwScenario & sc, int shards)
{
  check_inputs(s, n, shards);
  sc.validate();
  const Hits hits = sharded(
    n, derive_seed(seed, Stream::kQosLane), shards, [&](Rng & rng, std::int64_t draws) {
      std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
      Noise sv_noise(sc.sv_lateral_noise_std_m);
      std::int64_t tp = 0;
      std::int64_t fp = 0;
      for (std::int64_t k = 0; k < draws; ++k) {
        const double y_sv = sc.sv_lateral_m + sv_noise(rng);
        const double dy = s.dy[pick(rng)];
        const double y_ov1 = sc.sv_lateral_m + dy;
        const double y_ov2 = sc.ov2_offset_m + dy;
        tp += std::abs(y_ov1 - y_sv) <= sc.lane_half_width_m;
        fp += std::abs(y_ov2 - y_sv) <= sc.lane_half_width_m;
      }
      return Hits{tp, fp};
    });
  return {static_cast<double>(hits[0]) / static_cast<double>(n),
    static_cast<double>(hits[1]) / static_cast<double>(n)};
}

double mc_ttc_probability(
  const ErrorSamples & s, double delta_s, const FcwScenario & sc, std::int64_t n,
  std::uint64_t seed, int shards)
{
  check_inputs(s, n, shards);
  sc.validate();
  if (!(delta_s > 0.0)) {
    throw std::invalid_argument("speed difference must be positive");
  }
  const double v_true = sc.ov1_true_speed_mps;
  const Hits hits = sharded(
    n, derive_seed(seed, Stream::kQosTtc), shards, [&](Rng & rng, std::int64_t draws) {
      std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
      Noise pos_noise(sc.sv_pos_noise_std_m);
      Noise speed_noise(sc.sv_speed_noise_factor * (v_true + delta_s));
      std::int64_t ok = 0;
      for (std::int64_t k = 0; k < draws; ++k) {
        const std::size_t i = pick(rng);
        const double x_sv = pos_noise(rng);
        const double x_ov1 = sc.true_ttc_s * delta_s + s.dx[i];
        const double v_sv = v_true + delta_s + speed_noise(rng);
        const double v_ov1 = v_true + s.dxdot[i];
        const auto ttc = compute_ttc(x_sv, x_ov1, v_sv, v_ov1);
        ok += ttc && std::abs(*ttc - sc.true_ttc_s) <= sc.ttc_tolerance_s;
      }
      return Hits{ok, 0};
    });
  return static_cast<double>(hits[0]) / static_cast<double>(n);
}

QosReport qos_fcw(double p_true_pos, double p_false_pos, double p_ttc_5)
{
  for (double p : {p_true_pos, p_false_pos, p_ttc_5}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
  }
  QosReport r;
  r.p_true_pos = p_true_pos;
  r.p_false_pos = p_false_pos;
  r.p_ttc_5 = p_ttc_5;
  r.p_fcw_5 = p_true_pos * (1.0 - p_false_pos) * p_ttc_5;
  r.qos = 100.0 * r.p_fcw_5;
  return r;
}

void QosConfig::validate() const
{
  if (draws < kMinDraws || shards < 1 || !(delta_s_low > 0.0) || !(delta_s_high > 0.0)) {
    throw std::invalid_argument("invalid QoS configuration");
  }
  if (strict_tolerance_s && !(*strict_tolerance_s > 0.0)) {
    throw std::invalid_argument("strict TTC tolerance must be positive");
  }
  scenario.validate();
}

QosReport evaluate_qos(const ErrorSamples & s, const QosConfig & cfg, std::uint64_t seed)
{
  cfg.validate();
  const auto lane = mc_lane_probabilities(s, cfg.draws, seed, cfg.scenario, cfg.shards);
  const double ttc5 = mc_ttc_probability(s, cfg.delta_s_low, cfg.scenario, cfg.draws, seed, cfg.shards);
  const double ttc15 =
    mc_ttc_probability(s, cfg.delta_s_high, cfg.scenario, cfg.draws, seed, cfg.shards);
  QosReport r = qos_fcw(lane.p_true_pos, lane.p_false_pos, ttc5);
  r.p_ttc_15 = ttc15;
  r.p_fcw_15 = lane.p_true_pos * (1.0 - lane.p_false_pos) * ttc15;
  if (cfg.strict_tolerance_s) {
    FcwScenario strict = cfg.scenario;
    strict.ttc_tolerance_s = *cfg.strict_tolerance_s;
    r.p_ttc_5_strict = mc_ttc_probability(s, cfg.delta_s_low, strict, cfg.draws, seed, cfg.shards);
  }
  r.samples = s.size();
  return r;
}

void write_error_samples(const ErrorSamples & s, std::ostream & out)
{
  out << "dy,dx,dxdot\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << s.dy[i] << ',' << s.dx[i] << ',' << s.dxdot[i] << '\n';
  }
}

}  // namespace cadsim
