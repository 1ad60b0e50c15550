#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace sphflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid placement of a primitive: rotation about the local origin, then
/// translation to `origin`. Rotation angles are degrees about the global x, y
/// and z axes, applied in that order (R = Rz * Ry * Rx).
struct Frame {
  Vec3 origin = Vec3::Zero();
  Vec3 rotation_deg = Vec3::Zero();

  Mat3 rotation() const {
    const Eigen::AngleAxisd rx(deg_to_rad(rotation_deg.x()), Vec3::UnitX());
    const Eigen::AngleAxisd ry(deg_to_rad(rotation_deg.y()), Vec3::UnitY());
    const Eigen::AngleAxisd rz(deg_to_rad(rotation_deg.z()), Vec3::UnitZ());
    return (rz * ry * rx).toRotationMatrix();
  }

  Vec3 to_global(const Vec3& local) const { return rotation() * local + origin; }
  Vec3 to_local(const Vec3& global) const {
    return rotation().transpose() * (global - origin);
  }

  bool operator==(const Frame& other) const {
    return origin == other.origin && rotation_deg == other.rotation_deg;
  }
};

/// Applies `frame` to every point: rotate about the frame origin, then
/// translate.
inline std::vector<Vec3> transform_local_to_global(std::span<const Vec3> points,
                                                   const Frame& frame) {
  const Mat3 r = frame.rotation();
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(r * p + frame.origin);
  return out;
}

/// Angle between two rotations, degrees.
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

/// Skew-symmetric cross-product matrix.
inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

}  // namespace sphflow
