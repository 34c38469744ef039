#pragma once

#include <cstdint>

#include "attkit/rng.hpp"
#include "attkit/sequence.hpp"

namespace attkit {

// Re-expresses the recording as if the sensor had been mounted rotated by r:
// both channels are rotated into the new sensor frame and the truth is
// right-composed with r, so the physical motion (and every attitude error
// against the new truth) is unchanged.
ImuSequence virtual_rotation(const ImuSequence& seq, const Quaternion& r);

// Randomized sensor imperfections for training: noise standard deviations
// drawn uniformly from [0, max] per call, plus a constant per-axis gyro bias
// from N(0, gyr_bias_std^2). Draw order is fixed: gyro noise std, accel noise
// std, bias xyz, then per-sample gyro xyz / accel xyz.
struct ErrorAugmentConfig {
  double gyr_noise_std_max = 0.0;  // rad/s
  double acc_noise_std_max = 0.0;  // m/s^2
  double gyr_bias_std = 0.0;       // rad/s
};

ImuSequence error_augment(const ImuSequence& seq, const ErrorAugmentConfig& cfg, Rng& rng);

// Per-channel standardization over the six inertial columns
// (gyr xyz, acc xyz), shared across sequences.
struct StandardizationStats {
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> std = Eigen::Matrix<double, 6, 1>::Ones();
};

// Pooled mean and standard deviation per channel over every sample of every
// sequence. Deviations are floored at 1e-9 so constant channels stay finite.
StandardizationStats standardize_fit(const std::vector<ImuSequence>& sequences);

ImuSequence standardize_apply(const ImuSequence& seq, const StandardizationStats& stats);

}  // namespace attkit
