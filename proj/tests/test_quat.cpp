#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "attkit/quat.hpp"
#include "attkit/rng.hpp"

using namespace attkit;

namespace {
Eigen::Quaterniond to_eigen(const Quaternion& q) { return {q.w, q.x, q.y, q.z}; }
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_CASE("multiply matches the Eigen quaternion product") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Quaternion a = rng.unit_quaternion();
    Quaternion b = rng.unit_quaternion();
    Quaternion c = multiply(a, b);
    Eigen::Quaterniond e = to_eigen(a) * to_eigen(b);
    CHECK(c.w == doctest::Approx(e.w()).epsilon(1e-12));
    CHECK(c.x == doctest::Approx(e.x()).epsilon(1e-12));
    CHECK(c.y == doctest::Approx(e.y()).epsilon(1e-12));
    CHECK(c.z == doctest::Approx(e.z()).epsilon(1e-12));
  }
}

TEST_CASE("multiply renormalizes drifting operands") {
  Rng rng(12);
  Quaternion q = rng.unit_quaternion();
  Quaternion scaled{3.0 * q.w, 3.0 * q.x, 3.0 * q.y, 3.0 * q.z};
  Quaternion r = multiply(scaled, Quaternion{});
  CHECK(r.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("inverse composes to identity and rotate_vec matches the sandwich") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    Quaternion q = rng.unit_quaternion();
    Quaternion id = multiply(q, inverse(q));
    CHECK(std::abs(id.w) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(id.x) < 1e-12);
    CHECK(std::abs(id.y) < 1e-12);
    CHECK(std::abs(id.z) < 1e-12);

    Vec3 v = rng.normal_vec3(1.0);
    Vec3 got = rotate_vec(q, v);
    Vec3 want = to_eigen(q) * v;
    CHECK((got - want).norm() < 1e-12);
  }
}

TEST_CASE("from_axis_angle round-trips through rotation_angle") {
  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    Vec3 axis = rng.normal_vec3(1.0);
    if (axis.norm() < 1e-6) continue;
    double angle = rng.uniform(0.0, kPi);
    Quaternion q = from_axis_angle(axis, angle);
    CHECK(rotation_angle(q) == doctest::Approx(angle).epsilon(1e-10));
  }
  CHECK_THROWS_AS(from_axis_angle(Vec3::Zero(), 0.5), std::invalid_argument);
  // Zero angle is fine regardless of the axis.
  Quaternion id = from_axis_angle(Vec3::Zero(), 0.0);
  CHECK(id.w == doctest::Approx(1.0));
}

TEST_CASE("attitude_error equals the angle between predicted gravity directions") {
  Rng rng(15);
  for (int i = 0; i < 500; ++i) {
    Quaternion t = rng.unit_quaternion();
    Quaternion p = rng.unit_quaternion();
    double e = attitude_error(t, p);
    // Gravity oracle: both attitudes predict the earth z axis in sensor
    // coordinates; the attitude error is exactly the angle between the two
    // predictions, independent of heading.
    Vec3 gt = rotate_vec(inverse(t), Vec3::UnitZ());
    Vec3 gp = rotate_vec(inverse(p), Vec3::UnitZ());
    double want = std::acos(std::clamp(gt.dot(gp), -1.0, 1.0));
    CHECK(e == doctest::Approx(want).epsilon(1e-9));
    CHECK(e >= 0.0);
    CHECK(e <= kPi + 1e-12);
    // Swapping the arguments conjugates the error quaternion, which keeps
    // the w and z magnitudes.
    CHECK(attitude_error(p, t) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("attitude_error ignores heading rotations on either argument") {
  Rng rng(16);
  for (int i = 0; i < 1000; ++i) {
    Quaternion t = rng.unit_quaternion();
    Quaternion p = rng.unit_quaternion();
    double e = attitude_error(t, p);
    Quaternion zrot = from_axis_angle(Vec3::UnitZ(), rng.uniform(-kPi, kPi));
    CHECK(attitude_error(multiply(zrot, t), p) == doctest::Approx(e).epsilon(1e-9));
    Quaternion zrot2 = from_axis_angle(Vec3::UnitZ(), rng.uniform(-kPi, kPi));
    CHECK(attitude_error(t, multiply(zrot2, p)) == doctest::Approx(e).epsilon(1e-9));
  }
}

TEST_CASE("decompose_error splits into a z rotation and a horizontal-axis rotation") {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    Quaternion t = rng.unit_quaternion();
    Quaternion p = rng.unit_quaternion();
    HeadingAttitude d = decompose_error(multiply(t, inverse(p)));

    CHECK(std::abs(d.heading.x) < 1e-12);
    CHECK(std::abs(d.heading.y) < 1e-12);
    CHECK(std::abs(d.attitude.z) < 1e-12);
    CHECK(d.heading.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.attitude.norm() == doctest::Approx(1.0).epsilon(1e-12));

    // heading * attitude reconstructs the error quaternion up to sign.
    Quaternion e = multiply(t, inverse(p));
    Quaternion r = multiply(d.heading, d.attitude);
    double sign = (e.w * r.w + e.x * r.x + e.y * r.y + e.z * r.z) < 0.0 ? -1.0 : 1.0;
    CHECK(std::abs(e.w - sign * r.w) < 1e-9);
    CHECK(std::abs(e.x - sign * r.x) < 1e-9);
    CHECK(std::abs(e.y - sign * r.y) < 1e-9);
    CHECK(std::abs(e.z - sign * r.z) < 1e-9);

    CHECK(rotation_angle(d.attitude) == doctest::Approx(attitude_error(t, p)).epsilon(1e-9));
  }
}

TEST_CASE("decompose_error of a pure z rotation leaves no attitude part") {
  Quaternion t = from_axis_angle(Vec3::UnitZ(), 1.2);
  HeadingAttitude d = decompose_error(t);
  CHECK(rotation_angle(d.attitude) < 1e-12);
  CHECK(rotation_angle(d.heading) == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("slerp matches the constant-velocity axis-angle path") {
  Rng rng(18);
  for (int i = 0; i < 200; ++i) {
    Quaternion q0 = rng.unit_quaternion();
    Vec3 axis = rng.normal_vec3(1.0);
    if (axis.norm() < 1e-6) continue;
    double theta = rng.uniform(0.05, 3.0);
    Quaternion q1 = multiply(q0, from_axis_angle(axis, theta));
    double u = rng.uniform();
    Quaternion got = slerp(q0, q1, u);
    Quaternion want = multiply(q0, from_axis_angle(axis, u * theta));
    double d = std::abs(dot(got, want));
    CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("slerp takes the shorter arc and pins the endpoints") {
  Rng rng(19);
  Quaternion q0 = rng.unit_quaternion();
  Quaternion q1 = rng.unit_quaternion();
  Quaternion q1n{-q1.w, -q1.x, -q1.y, -q1.z};
  Quaternion a = slerp(q0, q1, 0.3);
  Quaternion b = slerp(q0, q1n, 0.3);
  CHECK(std::abs(dot(a, b)) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(std::abs(dot(slerp(q0, q1, 0.0), q0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(dot(slerp(q0, q1, 1.0), q1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(slerp(q0, q1, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(slerp(q0, q1, 1.1), std::invalid_argument);
}

TEST_CASE("slerp of nearly identical attitudes stays finite and unit") {
  Quaternion q0 = from_axis_angle(Vec3::UnitX(), 0.5);
  Quaternion q1 = from_axis_angle(Vec3::UnitX(), 0.5 + 1e-13);
  Quaternion m = slerp(q0, q1, 0.5);
  CHECK(m.is_finite());
  CHECK(m.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("integrate_gyro reproduces the closed-form constant-rate rotation") {
  Vec3 omega{0.3, -0.7, 0.2};
  double rate = 100.0;
  int n = 100;
  Quaternion q{};
  for (int k = 0; k < n; ++k) q = integrate_gyro(q, omega, 1.0 / rate);
  Quaternion want = from_axis_angle(omega, omega.norm() * n / rate);
  CHECK(std::abs(dot(q, want)) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(integrate_gyro(q, omega, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_gyro(q, omega, -0.01), std::invalid_argument);
}
