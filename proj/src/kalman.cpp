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

#include "cadsim/kalman.hpp"

#include <cmath>

namespace cadsim
{

Vector4 Beacon::measurement() const
{
  return Vector4(x, y, speed * std::cos(heading), speed * std::sin(heading));
}

Matrix4 KalmanNoise::measurement_cov() const
{
  const double p = pos_std * pos_std;
  const double v = vel_std * vel_std;
  return Vector4(p, p, v, v).asDiagonal();
}

Matrix4 KalmanNoise::process_cov(double dt) const
{
  const double q = accel_std * accel_std;
  const double dt2 = dt * dt;
  const double pp = q * dt2 * dt2 / 4.0;
  const double pv = q * dt2 * dt / 2.0;
  const double vv = q * dt2;
  Matrix4 out = Matrix4::Zero();
  out(0, 0) = out(1, 1) = pp;
  out(0, 2) = out(2, 0) = out(1, 3) = out(3, 1) = pv;
  out(2, 2) = out(3, 3) = vv;
  return out;
}

double normalized_innovation(const Eigen::VectorXd & z_tilde, const Eigen::MatrixXd & innovation_cov)
{
  if (innovation_cov.rows() != z_tilde.size() || innovation_cov.cols() != z_tilde.size()) {
    throw NumericError("innovation covariance does not match residual dimension");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("innovation covariance is not positive definite");
  }
  return z_tilde.dot(llt.solve(z_tilde));
}

KalmanTrack init_track(std::uint64_t id, const Beacon & beacon, const KalmanNoise & noise)
{
  KalmanTrack t;
  t.id = id;
  t.state = beacon.measurement();
  const double p = noise.pos_std * noise.pos_std;
  const double v = 10.0 * noise.vel_std * noise.vel_std;
  t.covariance = Vector4(p, p, v, v).asDiagonal();
  t.state_step = beacon.step;
  t.last_update_step = beacon.step;
  t.pseudonym = beacon.pseudonym;
  t.status = TrackStatus::kActive;
  return t;
}

void predict_in_place(KalmanTrack & track, int steps, double dt, const KalmanNoise & noise)
{
  if (steps <= 0) {
    return;
  }
  const Matrix4 q = noise.process_cov(dt);
  auto & x = track.state;
  auto & p = track.covariance;
  for (int i = 0; i < steps; ++i) {
    x(0) += dt * x(2);
    x(1) += dt * x(3);
    // P <- F P F' with F = [I dt*I; 0 I], written out blockwise.
    const Eigen::Matrix2d ppos = p.topLeftCorner<2, 2>();
    const Eigen::Matrix2d pcross = p.topRightCorner<2, 2>();
    const Eigen::Matrix2d pvel = p.bottomRightCorner<2, 2>();
    const Eigen::Matrix2d new_cross = pcross + dt * pvel;
    p.topLeftCorner<2, 2>() = ppos + dt * (pcross + pcross.transpose()) + dt * dt * pvel;
    p.topRightCorner<2, 2>() = new_cross;
    p.bottomLeftCorner<2, 2>() = new_cross.transpose();
    p += q;
  }
  track.state_step += steps;
}

KalmanTrack kf_predict(KalmanTrack track, int steps, double dt, const KalmanNoise & noise)
{
  predict_in_place(track, steps, dt, noise);
  return track;
}

Residual gate_distance(const KalmanTrack & track, const Beacon & beacon, const KalmanNoise & noise)
{
  Residual r;
  r.z_tilde = beacon.measurement() - track.state;
  r.innovation_cov = track.covariance + noise.measurement_cov();
  Eigen::LLT<Matrix4> llt(r.innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("innovation covariance is not positive definite");
  }
  r.d2 = r.z_tilde.dot(llt.solve(r.z_tilde));
  return r;
}

void update_in_place(KalmanTrack & track, const Beacon & beacon, const KalmanNoise & noise)
{
  const Matrix4 r = noise.measurement_cov();
  const Matrix4 s = track.covariance + r;
  Eigen::LLT<Matrix4> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericError("innovation covariance is not positive definite");
  }
  // H = I, so K = P S^-1 = (S^-1 P)' by symmetry.
  const Matrix4 gain = llt.solve(track.covariance).transpose();
  const Vector4 z_tilde = beacon.measurement() - track.state;
  track.state += gain * z_tilde;
  const Matrix4 i_minus_k = Matrix4::Identity() - gain;
  Matrix4 p = i_minus_k * track.covariance * i_minus_k.transpose() + gain * r * gain.transpose();
  track.covariance = 0.5 * (p + p.transpose());
  track.last_update_step = beacon.step;
  track.pseudonym = beacon.pseudonym;
  track.status = TrackStatus::kActive;
}

KalmanTrack kf_update(KalmanTrack track, const Beacon & beacon, const KalmanNoise & noise)
{
  update_in_place(track, beacon, noise);
  return track;
}

}  // namespace cadsim
