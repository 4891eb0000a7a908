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

#ifndef CADSIM__KALMAN_HPP_
#define CADSIM__KALMAN_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

namespace cadsim
{

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;
using Pseudonym = std::uint64_t;

/// A pseudonymous broadcast. Carries no ground-truth identity.
struct Beacon
{
  Pseudonym pseudonym = 0;
  std::int64_t step = 0;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double heading = 0.0;

  /// (x, y, vx, vy) with velocity rebuilt from speed and heading.
  Vector4 measurement() const;
};

enum class TrackStatus { kActive, kInactive };

/// Constant-velocity Kalman track over (x, y, vx, vy).
struct KalmanTrack
{
  std::uint64_t id = 0;
  Vector4 state = Vector4::Zero();
  Matrix4 covariance = Matrix4::Identity();
  std::int64_t state_step = 0;        // step the state is predicted to
  std::int64_t last_update_step = 0;  // step of the last absorbed beacon
  Pseudonym pseudonym = 0;
  TrackStatus status = TrackStatus::kActive;
};

/// Innovation z~, its covariance S and d2 = z~' S^-1 z~.
struct Residual
{
  Vector4 z_tilde = Vector4::Zero();
  Matrix4 innovation_cov = Matrix4::Identity();
  double d2 = 0.0;
};

class NumericError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Noise model shared by predict/update.
struct KalmanNoise
{
  double accel_std = 2.0;  // white acceleration, m/s^2
  double pos_std = 0.5;    // m
  double vel_std = 0.25;   // m/s

  Matrix4 measurement_cov() const;
  Matrix4 process_cov(double dt) const;
};

/// d2 for an arbitrary-dimension residual; throws NumericError when S is not
/// symmetric positive definite.
double normalized_innovation(const Eigen::VectorXd & z_tilde, const Eigen::MatrixXd & innovation_cov);

KalmanTrack init_track(std::uint64_t id, const Beacon & beacon, const KalmanNoise & noise);

/// Propagates `steps` steps of `dt` seconds each.
KalmanTrack kf_predict(KalmanTrack track, int steps, double dt, const KalmanNoise & noise);
void predict_in_place(KalmanTrack & track, int steps, double dt, const KalmanNoise & noise);

Residual gate_distance(const KalmanTrack & track, const Beacon & beacon, const KalmanNoise & noise);

/// Joseph-form correction. The track becomes active and adopts the beacon's
/// pseudonym.
KalmanTrack kf_update(KalmanTrack track, const Beacon & beacon, const KalmanNoise & noise);
void update_in_place(KalmanTrack & track, const Beacon & beacon, const KalmanNoise & noise);

}  // namespace cadsim

#endif  // CADSIM__KALMAN_HPP_
