#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "attkit/quat.hpp"

namespace attkit {

using Mat3X = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct ImuSample {
  double t;
  Vec3 gyr;  // rad/s
  Vec3 acc;  // m/s^2
};

// One recording: timestamps, inertial channels (row per sample), and optional
// ground-truth orientation with a per-sample validity mask (mocap gaps etc.).
struct ImuSequence {
  Eigen::VectorXd t;
  Mat3X gyr;
  Mat3X acc;
  std::vector<Quaternion> truth;      // empty or one per sample
  std::vector<std::uint8_t> valid;    // one per sample, 1 = truth usable
  double rate_hz = 0.0;               // nominal sampling rate
  std::string name;
  std::string dataset;

  Eigen::Index size() const { return t.size(); }
  bool has_truth() const { return !truth.empty(); }

  ImuSample sample(Eigen::Index i) const {
    return {t[i], gyr.row(i).transpose(), acc.row(i).transpose()};
  }

  // Step duration ending at sample i; the first sample gets the nominal period.
  double dt_at(Eigen::Index i) const { return i == 0 ? 1.0 / rate_hz : t[i] - t[i - 1]; }

  // Throws std::invalid_argument when the invariants do not hold: consistent
  // lengths, strictly increasing finite time, positive rate consistent with
  // the median step, unit truth at valid samples.
  void validate() const;

  Eigen::Index count_valid() const;
};

Eigen::VectorXd sample_dts(const ImuSequence& seq);

}  // namespace attkit
