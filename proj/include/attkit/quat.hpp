#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace attkit {

using Vec3 = Eigen::Vector3d;

// Unit quaternion, scalar first [w, x, y, z], Hamilton product.
// Convention throughout: q maps sensor coordinates to earth coordinates,
//   v_earth = q (0, v_sensor) q^-1.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quaternion identity() { return {}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Vec3 vec() const { return {x, y, z}; }
  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }

  bool is_finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline void require_finite(const Quaternion& q, const char* who) {
  if (!q.is_finite()) throw std::invalid_argument(std::string(who) + ": non-finite quaternion");
}

inline double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Quaternion normalized(const Quaternion& q) {
  require_finite(q, "normalized");
  const double n = q.norm();
  if (n <= 0.0) throw std::invalid_argument("normalized: zero quaternion");
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Hamilton product, renormalized so long chains cannot drift off the unit sphere.
inline Quaternion multiply(const Quaternion& a, const Quaternion& b) {
  require_finite(a, "multiply");
  require_finite(b, "multiply");
  Quaternion r{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
               a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
               a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
               a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  return normalized(r);
}

// Conjugate. Equals the inverse for unit quaternions.
inline Quaternion inverse(const Quaternion& q) {
  require_finite(q, "inverse");
  return {q.w, -q.x, -q.y, -q.z};
}

inline Vec3 rotate_vec(const Quaternion& q, const Vec3& v) {
  require_finite(q, "rotate_vec");
  if (!v.allFinite()) throw std::invalid_argument("rotate_vec: non-finite vector");
  const Vec3 u = q.vec();
  const Vec3 t = 2.0 * u.cross(v);
  return v + q.w * t + u.cross(t);
}

inline Quaternion from_axis_angle(const Vec3& axis, double angle) {
  if (!axis.allFinite() || !std::isfinite(angle))
    throw std::invalid_argument("from_axis_angle: non-finite input");
  const double n = axis.norm();
  if (n <= 0.0) {
    if (angle != 0.0) throw std::invalid_argument("from_axis_angle: zero axis with nonzero angle");
    return Quaternion::identity();
  }
  const double h = 0.5 * angle;
  const double s = std::sin(h) / n;
  return {std::cos(h), s * axis.x(), s * axis.y(), s * axis.z()};
}

// Rotation angle in [0, pi].
inline double rotation_angle(const Quaternion& q) {
  const double c = std::min(std::abs(dot(q, q) > 0 ? q.w / q.norm() : 1.0), 1.0);
  return 2.0 * std::acos(c);
}

// One strapdown step: rotate q by the constant rate omega held for dt seconds
// (exact exponential map, not a truncated series).
inline Quaternion integrate_gyro(const Quaternion& q, const Vec3& omega, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_gyro: dt must be positive");
  if (!omega.allFinite()) throw std::invalid_argument("integrate_gyro: non-finite rate");
  return multiply(q, from_axis_angle(omega, omega.norm() * dt));
}

// Attitude-only estimation error in radians, in [0, pi]: the angle between the
// true and estimated vertical axes. Computed from q_err = q_true * q_est^-1 as
// 2 * acos(sqrt(w^2 + z^2)), which discards the heading component of the error.
// Invariant under left-composition of either argument with any rotation about e_z.
double attitude_error(const Quaternion& q_true, const Quaternion& q_est);

// q_err split as q_err = heading * attitude, heading a pure z rotation and
// attitude a rotation about a horizontal axis.
struct HeadingAttitude {
  Quaternion heading;
  Quaternion attitude;
};
HeadingAttitude decompose_error(const Quaternion& q_err);

// Shortest-arc spherical interpolation; t in [0, 1]. Falls back to normalized
// linear interpolation when the inputs are nearly parallel.
Quaternion slerp(const Quaternion& a, const Quaternion& b, double t);

}  // namespace attkit
