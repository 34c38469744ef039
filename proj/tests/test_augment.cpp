#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attkit/augment.hpp"
#include "attkit/metrics.hpp"
#include "attkit/sim.hpp"

using namespace attkit;

namespace {
ImuSequence sample_sequence(std::uint64_t seed, double duration = 4.0) {
  MotionProfile p;
  p.kind = ProfileKind::random_smooth;
  p.amplitude = 1.2;
  p.duration = duration;
  p.seed = seed;
  return generate(p, 100.0);
}
}  // namespace

TEST_CASE("virtual rotation keeps the recording physically consistent") {
  ImuSequence seq = sample_sequence(61);
  Rng rng(62);
  Quaternion r = rng.unit_quaternion();
  ImuSequence rot = virtual_rotation(seq, r);
  rot.validate();

  // Channel norms are preserved sample by sample.
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    CHECK(rot.gyr.row(i).norm() == doctest::Approx(seq.gyr.row(i).norm()).epsilon(1e-12));
    CHECK(rot.acc.row(i).norm() == doctest::Approx(seq.acc.row(i).norm()).epsilon(1e-12));
  }

  // The rotated truth still explains the rotated gyro: strapdown agrees.
  auto est = strapdown_gyro(rot, rot.truth.front());
  CHECK(rmse_deg(est, rot.truth, rot.valid) < 1e-8);

  // And the rotated truth still predicts the rotated accelerometer.
  for (Eigen::Index i = 0; i < rot.size(); ++i) {
    Vec3 want = rotate_vec(inverse(rot.truth[static_cast<std::size_t>(i)]),
                           kGravity * Vec3::UnitZ());
    CHECK((rot.acc.row(i).transpose() - want).norm() < 1e-9);
  }
}

TEST_CASE("identity rotation is a no-op") {
  ImuSequence seq = sample_sequence(63);
  ImuSequence same = virtual_rotation(seq, Quaternion{});
  CHECK((same.gyr - seq.gyr).norm() == 0.0);
  CHECK((same.acc - seq.acc).norm() == 0.0);
  for (std::size_t i = 0; i < seq.truth.size(); ++i)
    CHECK(rotation_angle(multiply(same.truth[i], inverse(seq.truth[i]))) < 1e-15);
}

TEST_CASE("error_augment is reproducible and bounded by its config") {
  ImuSequence seq = sample_sequence(64);
  ErrorAugmentConfig cfg;
  cfg.gyr_noise_std_max = 0.02;
  cfg.acc_noise_std_max = 0.3;
  cfg.gyr_bias_std = 0.01;

  Rng r1(99), r2(99), r3(100);
  ImuSequence a = error_augment(seq, cfg, r1);
  ImuSequence b = error_augment(seq, cfg, r2);
  ImuSequence c = error_augment(seq, cfg, r3);
  CHECK((a.gyr - b.gyr).norm() == 0.0);
  CHECK((a.acc - b.acc).norm() == 0.0);
  CHECK((a.gyr - c.gyr).norm() > 1e-6);

  // Truth and timing are untouched.
  CHECK((a.t - seq.t).norm() == 0.0);
  for (std::size_t i = 0; i < seq.truth.size(); ++i)
    CHECK(rotation_angle(multiply(a.truth[i], inverse(seq.truth[i]))) < 1e-15);
}

TEST_CASE("zero config leaves the channels untouched") {
  ImuSequence seq = sample_sequence(65);
  ErrorAugmentConfig cfg;
  Rng rng(1);
  ImuSequence same = error_augment(seq, cfg, rng);
  CHECK((same.gyr - seq.gyr).norm() == 0.0);
  CHECK((same.acc - seq.acc).norm() == 0.0);
}

TEST_CASE("standardize_fit pools the documented moments") {
  // Two tiny handmade sequences so the pooled moments are easy to verify.
  ImuSequence s1 = sample_sequence(66, 1.0);
  ImuSequence s2 = sample_sequence(67, 2.0);
  StandardizationStats st = standardize_fit({s1, s2});

  Eigen::Index n = s1.size() + s2.size();
  for (int c = 0; c < 3; ++c) {
    double sum = s1.gyr.col(c).sum() + s2.gyr.col(c).sum();
    double mean = sum / n;
    CHECK(st.mean[c] == doctest::Approx(mean).epsilon(1e-12));
    double sq = (s1.gyr.col(c).array() - mean).square().sum() +
                (s2.gyr.col(c).array() - mean).square().sum();
    CHECK(st.std[c] == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));
  }
  for (int c = 0; c < 3; ++c) {
    double sum = s1.acc.col(c).sum() + s2.acc.col(c).sum();
    double mean = sum / n;
    CHECK(st.mean[3 + c] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("standardize_apply yields zero mean and unit deviation on the fit set") {
  ImuSequence seq = sample_sequence(68, 6.0);
  StandardizationStats st = standardize_fit({seq});
  ImuSequence z = standardize_apply(seq, st);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(z.gyr.col(c).mean()) < 1e-10);
    CHECK(std::sqrt(z.gyr.col(c).squaredNorm() / z.size()) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(z.acc.col(c).mean()) < 1e-10);
    CHECK(std::sqrt(z.acc.col(c).squaredNorm() / z.size()) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("constant channels stay finite through standardization") {
  MotionProfile p;
  p.kind = ProfileKind::rest;
  p.duration = 1.0;
  ImuSequence seq = generate(p, 50.0);
  StandardizationStats st = standardize_fit({seq});
  ImuSequence z = standardize_apply(seq, st);
  CHECK(z.gyr.allFinite());
  CHECK(z.acc.allFinite());
  for (int c = 0; c < 6; ++c) CHECK(st.std[c] >= 1e-9);
}
