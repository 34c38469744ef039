#include "attkit/quat.hpp"

#include <algorithm>

namespace attkit {

double attitude_error(const Quaternion& q_true, const Quaternion& q_est) {
  const Quaternion e = multiply(q_true, inverse(q_est));
  // sqrt(w^2 + z^2) is the cosine of half the residual tilt; clamp for acos.
  const double a = std::min(std::sqrt(e.w * e.w + e.z * e.z), 1.0);
  return 2.0 * std::acos(a);
}

HeadingAttitude decompose_error(const Quaternion& q_err) {
  require_finite(q_err, "decompose_error");
  const Quaternion e = normalized(q_err);
  const double s = std::sqrt(e.w * e.w + e.z * e.z);
  if (s < 1e-12) {
    // 180 degree tilt about a horizontal axis; heading is undefined, pick identity.
    return {Quaternion::identity(), e};
  }
  const Quaternion heading{e.w / s, 0.0, 0.0, e.z / s};
  // attitude = heading^-1 * q_err, closed form (z component vanishes exactly).
  const Quaternion attitude{s, (e.w * e.x + e.z * e.y) / s, (e.w * e.y - e.z * e.x) / s, 0.0};
  return {heading, normalized(attitude)};
}

Quaternion slerp(const Quaternion& a, const Quaternion& b, double t) {
  require_finite(a, "slerp");
  require_finite(b, "slerp");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("slerp: t outside [0, 1]");
  if (t == 0.0) return normalized(a);
  if (t == 1.0) return normalized(b);
  Quaternion bb = b;
  double d = dot(a, b);
  if (d < 0.0) {  // take the shorter arc
    bb = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  d = std::min(d / (a.norm() * b.norm()), 1.0);
  if (d > 1.0 - 1e-10) {
    return normalized({a.w + t * (bb.w - a.w), a.x + t * (bb.x - a.x), a.y + t * (bb.y - a.y),
                       a.z + t * (bb.z - a.z)});
  }
  const double th = std::acos(d);
  const double sa = std::sin((1.0 - t) * th) / std::sin(th);
  const double sb = std::sin(t * th) / std::sin(th);
  return normalized({sa * a.w + sb * bb.w, sa * a.x + sb * bb.x, sa * a.y + sb * bb.y,
                     sa * a.z + sb * bb.z});
}

}  // namespace attkit
