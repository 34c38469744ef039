#include "attkit/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace attkit {

ImuSequence virtual_rotation(const ImuSequence& seq, const Quaternion& r) {
  seq.validate();
  require_finite(r, "virtual_rotation");
  const Quaternion rn = normalized(r);
  const Quaternion rinv = inverse(rn);

  ImuSequence out = seq;
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    out.gyr.row(i) = rotate_vec(rinv, seq.gyr.row(i).transpose()).transpose();
    out.acc.row(i) = rotate_vec(rinv, seq.acc.row(i).transpose()).transpose();
  }
  if (seq.has_truth())
    for (Eigen::Index i = 0; i < seq.size(); ++i) out.truth[i] = multiply(seq.truth[i], rn);
  return out;
}

ImuSequence error_augment(const ImuSequence& seq, const ErrorAugmentConfig& cfg, Rng& rng) {
  seq.validate();
  if (cfg.gyr_noise_std_max < 0.0 || cfg.acc_noise_std_max < 0.0 || cfg.gyr_bias_std < 0.0)
    throw std::invalid_argument("error_augment: negative bound");

  const double gyr_std = rng.uniform(0.0, cfg.gyr_noise_std_max);
  const double acc_std = rng.uniform(0.0, cfg.acc_noise_std_max);
  Vec3 bias = Vec3::Zero();
  if (cfg.gyr_bias_std > 0.0) bias = rng.normal_vec3(cfg.gyr_bias_std);

  ImuSequence out = seq;
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    Vec3 g = seq.gyr.row(i).transpose();
    Vec3 a = seq.acc.row(i).transpose();
    g += bias;
    if (gyr_std > 0.0) g += rng.normal_vec3(gyr_std);
    if (acc_std > 0.0) a += rng.normal_vec3(acc_std);
    out.gyr.row(i) = g.transpose();
    out.acc.row(i) = a.transpose();
  }
  return out;
}

StandardizationStats standardize_fit(const std::vector<ImuSequence>& sequences) {
  if (sequences.empty()) throw std::invalid_argument("standardize_fit: no sequences");
  Eigen::Matrix<double, 6, 1> sum = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> sumsq = Eigen::Matrix<double, 6, 1>::Zero();
  double n = 0.0;
  for (const auto& seq : sequences) {
    seq.validate();
    for (int c = 0; c < 3; ++c) {
      sum[c] += seq.gyr.col(c).sum();
      sum[3 + c] += seq.acc.col(c).sum();
      sumsq[c] += seq.gyr.col(c).squaredNorm();
      sumsq[3 + c] += seq.acc.col(c).squaredNorm();
    }
    n += static_cast<double>(seq.size());
  }
  StandardizationStats stats;
  stats.mean = sum / n;
  for (int c = 0; c < 6; ++c) {
    const double var = std::max(sumsq[c] / n - stats.mean[c] * stats.mean[c], 0.0);
    stats.std[c] = std::max(std::sqrt(var), 1e-9);
  }
  return stats;
}

ImuSequence standardize_apply(const ImuSequence& seq, const StandardizationStats& stats) {
  seq.validate();
  for (int c = 0; c < 6; ++c)
    if (!(stats.std[c] > 0.0)) throw std::invalid_argument("standardize_apply: non-positive std");
  ImuSequence out = seq;
  for (int c = 0; c < 3; ++c) {
    out.gyr.col(c) = (seq.gyr.col(c).array() - stats.mean[c]) / stats.std[c];
    out.acc.col(c) = (seq.acc.col(c).array() - stats.mean[3 + c]) / stats.std[3 + c];
  }
  return out;
}

}  // namespace attkit
