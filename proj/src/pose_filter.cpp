#include "lcdet/pose_filter.hpp"

#include <sstream>

#include <Eigen/Dense>

#include "lcdet/error.hpp"
#include "lcdet/kalman.hpp"

namespace lcdet {

NoiseConfig NoiseConfig::from_sigmas(double gyro_sigma, double accel_sigma,
                                     double obs_sigma) {
  NoiseConfig out;
  out.process_noise.topLeftCorner<3, 3>() =
      gyro_sigma * gyro_sigma * Mat3::Identity();
  out.process_noise.bottomRightCorner<3, 3>() =
      accel_sigma * accel_sigma * Mat3::Identity();
  out.observation_noise = obs_sigma * obs_sigma * Mat3::Identity();
  return out;
}

FilterState propagate(const FilterState& state, const ControlInput& control,
                      const NoiseConfig& noise) {
  if (!(control.dt > 0.0)) {
    fail(ErrorCode::invalid_argument, "propagate: control.dt must be > 0");
  }
  kalman::require_psd(state.covariance, "state covariance");

  const double dt = control.dt;
  const Mat3 rot = state.rotation.toRotationMatrix();
  const Vec3 accel_world = rot * control.linear_acceleration + kGravity;

  FilterState out;
  out.rotation =
      (state.rotation * quat_exp(control.angular_velocity * dt)).normalized();
  out.velocity = state.velocity + accel_world * dt;
  out.position =
      state.position + state.velocity * dt + 0.5 * accel_world * dt * dt;

  // Error-state Jacobians for a multiplicative (body-side) rotation error.
  const Mat3 accel_skew = skew(control.linear_acceleration);
  Mat9 f = Mat9::Identity();
  f.block<3, 3>(kRotBlock, kRotBlock) =
      so3_exp(control.angular_velocity * dt).transpose();
  f.block<3, 3>(kVelBlock, kRotBlock) = -rot * accel_skew * dt;
  f.block<3, 3>(kPosBlock, kRotBlock) = -0.5 * rot * accel_skew * dt * dt;
  f.block<3, 3>(kPosBlock, kVelBlock) = Mat3::Identity() * dt;

  Eigen::Matrix<double, 9, 6> g = Eigen::Matrix<double, 9, 6>::Zero();
  g.block<3, 3>(kRotBlock, 0) = Mat3::Identity() * dt;
  g.block<3, 3>(kVelBlock, 3) = rot * dt;

  out.covariance =
      kalman::predict_covariance(state.covariance, f, g, noise.process_noise);
  return out;
}

FilterState update(const FilterState& state, const PositionObservation& obs,
                   const NoiseConfig& noise) {
  if (!obs.observed_position.allFinite()) {
    fail(ErrorCode::invalid_argument,
         "update: observation has non-finite components");
  }

  Eigen::Matrix<double, 3, 9> h = Eigen::Matrix<double, 3, 9>::Zero();
  h.block<3, 3>(0, kPosBlock) = Mat3::Identity();

  const Vec3 innovation = obs.observed_position - state.position;
  const auto res = kalman::update(state.covariance, h,
                                  noise.observation_noise, innovation);

  FilterState out;
  out.rotation =
      (state.rotation * quat_exp(res.correction.segment<3>(kRotBlock)))
          .normalized();
  out.velocity = state.velocity + res.correction.segment<3>(kVelBlock);
  out.position = state.position + res.correction.segment<3>(kPosBlock);
  out.covariance = res.covariance;
  return out;
}

std::vector<FilterState> run_filter(
    const std::vector<ControlInput>& controls,
    const std::map<int, PositionObservation>& observations,
    const NoiseConfig& noise, const FilterState& initial) {
  if (controls.empty()) {
    fail(ErrorCode::invalid_argument, "run_filter: controls must be nonempty");
  }

  std::vector<FilterState> out;
  out.reserve(controls.size());
  FilterState current = initial;
  for (size_t n = 0; n < controls.size(); ++n) {
    try {
      if (n > 0) current = propagate(current, controls[n], noise);
      if (auto it = observations.find(int(n)); it != observations.end()) {
        current = update(current, it->second, noise);
      }
    } catch (const Error& e) {
      std::ostringstream os;
      os << "frame " << n << ": " << e.what();
      fail(e.code(), os.str());
    }
    out.push_back(current);
  }
  return out;
}

}  // namespace lcdet
