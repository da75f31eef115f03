#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lcdet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

// Quaternion for a rotation vector, stable near zero.
inline Quat quat_exp(const Vec3& phi) {
  const double angle = phi.norm();
  double half_sinc;  // sin(angle/2) / angle
  if (angle < 1e-8) {
    half_sinc = 0.5 - angle * angle / 48.0;
  } else {
    half_sinc = std::sin(0.5 * angle) / angle;
  }
  Quat q(std::cos(0.5 * angle), half_sinc * phi.x(), half_sinc * phi.y(),
         half_sinc * phi.z());
  q.normalize();
  return q;
}

inline Mat3 so3_exp(const Vec3& phi) { return quat_exp(phi).toRotationMatrix(); }

// Rotation vector of a unit quaternion.
inline Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(vn, q.w());
  return (angle / vn) * q.vec();
}

}  // namespace lcdet
