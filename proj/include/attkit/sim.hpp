#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attkit/sequence.hpp"

namespace attkit {

constexpr double kGravity = 9.81;  // m/s^2, +z up in earth coordinates

enum class ProfileKind { rest, constant_rate, sinusoidal_multi_axis, random_smooth };

ProfileKind profile_kind_from_string(const std::string& s);

// Continuous-time motion description, deterministic given seed.
//   rest                  zero angular rate
//   constant_rate         amplitude rad/s about e_z
//   sinusoidal_multi_axis per-axis sinusoids at fixed fractions of
//                         frequency_band, phases drawn from seed
//   random_smooth         per-axis sums of sinusoids with frequencies in
//                         (0, frequency_band], per-axis RMS = amplitude / 2,
//                         plus a random initial attitude
// translation_accel_amplitude adds earth-frame translational acceleration of
// the same smooth kind (sinusoidal and random profiles only).
struct MotionProfile {
  ProfileKind kind = ProfileKind::rest;
  double amplitude = 0.0;        // rad/s
  double frequency_band = 1.0;   // Hz
  double translation_accel_amplitude = 0.0;  // m/s^2
  double duration = 10.0;        // s
  std::uint64_t seed = 0;
};

// Samples the profile at rate_hz: n = round(duration * rate_hz) rows at
// t_k = k / rate_hz. Truth is the exact integral of the sampled rates under
// the same per-step constant-rate model as strapdown_gyro, so integrating the
// ideal gyro reproduces truth to rounding error. Ideal accelerometer reads
// gravity plus earth-frame translational acceleration, rotated into the
// sensor frame. All truth samples valid.
ImuSequence generate(const MotionProfile& profile, double rate_hz);

// Additive sensor imperfections: a constant gyro bias drawn once per axis
// from N(0, gyr_bias_std^2) and white per-sample noise on both channels.
// Draw order is fixed (bias xyz, then per sample gyro xyz / accel xyz), so a
// given seed always produces the same output.
struct ErrorSpec {
  double gyr_noise_std = 0.0;  // rad/s
  double acc_noise_std = 0.0;  // m/s^2
  double gyr_bias_std = 0.0;   // rad/s
  std::uint64_t seed = 0;
};

ImuSequence inject_errors(const ImuSequence& seq, const ErrorSpec& spec);

// Prepends duration_s of perfect rest consistent with the first truth sample:
// zero rate, accelerometer = gravity at the initial attitude, constant truth.
// Timestamps shift so the output still starts at the original start time.
ImuSequence prepend_rest(const ImuSequence& seq, double duration_s);

// Pure gyro integration: q[0] = q0, q[k] = integrate_gyro(q[k-1], gyr[k], dt[k]).
std::vector<Quaternion> strapdown_gyro(const ImuSequence& seq, const Quaternion& q0);

}  // namespace attkit
