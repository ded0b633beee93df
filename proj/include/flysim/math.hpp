#pragma once

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace flysim {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;
using Rng = std::mt19937_64;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

// Quaternion as (w, x, y, z).
inline Vec4 quat_to_wxyz(const Quat& q) { return {q.w(), q.x(), q.y(), q.z()}; }
inline Quat quat_from_wxyz(const Vec4& v) { return Quat(v[0], v[1], v[2], v[3]); }

// Body-to-world rotation. Uses the unit-quaternion formula for any input so
// that the map stays a fixed polynomial in (w, x, y, z); the Jacobians in
// differentiation.hpp rely on this.
inline Mat3 rotation_matrix(const Quat& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
       2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
       2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

// dR/dw, dR/dx, dR/dy, dR/dz of rotation_matrix().
inline std::array<Mat3, 4> rotation_partials(const Quat& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  std::array<Mat3, 4> d;
  d[0] << 0.0, -z, y,
          z, 0.0, -x,
          -y, x, 0.0;
  d[1] << 0.0, y, z,
          y, -2.0 * x, -w,
          z, w, -2.0 * x;
  d[2] << -2.0 * y, x, w,
          x, 0.0, z,
          -w, z, -2.0 * y;
  d[3] << -2.0 * z, -w, x,
          w, -2.0 * z, y,
          x, y, 0.0;
  for (auto& m : d) m *= 2.0;
  return d;
}

// Roll-pitch-yaw (ZYX intrinsic) to quaternion.
inline Quat quat_from_rpy(double roll, double pitch, double yaw) {
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
              Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

inline double yaw_of(const Quat& q) {
  const Mat3 r = rotation_matrix(q);
  return std::atan2(r(1, 0), r(0, 0));
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline bool all_finite(const Quat& q) { return q.coeffs().allFinite(); }

}  // namespace flysim
