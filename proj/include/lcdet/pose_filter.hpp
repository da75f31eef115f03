#pragma once

#include <map>
#include <vector>

#include "lcdet/geometry.hpp"

namespace lcdet {

// World-frame gravity, treated as a known constant.
inline const Vec3 kGravity{0.0, 0.0, -9.81};

// Error-state covariance block offsets: (rotation error, velocity, position).
inline constexpr int kRotBlock = 0;
inline constexpr int kVelBlock = 3;
inline constexpr int kPosBlock = 6;

struct FilterState {
  Vec3 position = Vec3::Zero();          // m
  Quat rotation = Quat::Identity();      // world-from-body
  Vec3 velocity = Vec3::Zero();          // m/s
  Mat9 covariance = Mat9::Zero();        // over (rot error, velocity, position)

  Mat3 position_covariance() const {
    return covariance.block<3, 3>(kPosBlock, kPosBlock);
  }
  Mat3 rotation_covariance() const {
    return covariance.block<3, 3>(kRotBlock, kRotBlock);
  }
};

struct ControlInput {
  Vec3 angular_velocity = Vec3::Zero();     // rad/s, body frame
  Vec3 linear_acceleration = Vec3::Zero();  // m/s², body-frame specific force
  double dt = 0.0;                          // s, > 0
};

struct NoiseConfig {
  Mat6 process_noise = Mat6::Zero();      // per-sample (gyro, accel) covariance
  Mat3 observation_noise = Mat3::Zero();  // position observation covariance

  static NoiseConfig from_sigmas(double gyro_sigma, double accel_sigma,
                                 double obs_sigma);
};

struct PositionObservation {
  Vec3 observed_position = Vec3::Zero();  // m, world frame
};

// IMU-style prediction step. Propagates pose, velocity and the error-state
// covariance F P Fᵀ + G Q Gᵀ. Rejects a non-PSD input covariance.
FilterState propagate(const FilterState& state, const ControlInput& control,
                      const NoiseConfig& noise);

// Direct position measurement update. Innovation covariance must be
// invertible; the error message carries its condition number otherwise.
FilterState update(const FilterState& state, const PositionObservation& obs,
                   const NoiseConfig& noise);

// Batch driver. Frame 0 is the initial state (controls[0] is kept only for
// timestamp alignment); controls[n] moves frame n-1 to n. An observation at
// frame n is applied after the propagation to n. Errors carry the frame index.
std::vector<FilterState> run_filter(
    const std::vector<ControlInput>& controls,
    const std::map<int, PositionObservation>& observations,
    const NoiseConfig& noise, const FilterState& initial);

}  // namespace lcdet
