#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "attkit/quat.hpp"

namespace attkit {

// Deterministic random source. mt19937_64 output is specified bit-for-bit by
// the standard; the uniform/normal transforms live here because the standard
// library distributions are free to differ between implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (one draw per call, second branch unused
  // so the draw count stays easy to reason about).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double stddev) { return stddev * normal(); }

  Vec3 normal_vec3(double stddev) {
    const double a = normal(stddev);
    const double b = normal(stddev);
    const double c = normal(stddev);
    return {a, b, c};
  }

  // Uniform over the rotation group (Shoemake's subgroup method).
  Quaternion unit_quaternion() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double r1 = std::sqrt(1.0 - u1);
    const double r2 = std::sqrt(u1);
    const double t1 = 2.0 * std::numbers::pi * u2;
    const double t2 = 2.0 * std::numbers::pi * u3;
    return normalized({r2 * std::cos(t2), r1 * std::sin(t1), r1 * std::cos(t1), r2 * std::sin(t2)});
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace attkit
