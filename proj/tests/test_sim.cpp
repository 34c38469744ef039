#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attkit/metrics.hpp"
#include "attkit/sim.hpp"

using namespace attkit;

namespace {
MotionProfile smooth_profile(std::uint64_t seed, double duration = 4.0) {
  MotionProfile p;
  p.kind = ProfileKind::random_smooth;
  p.amplitude = 1.5;
  p.frequency_band = 1.0;
  p.duration = duration;
  p.seed = seed;
  return p;
}
}  // namespace

TEST_CASE("generated sequences validate and carry truth") {
  for (auto kind : {ProfileKind::rest, ProfileKind::constant_rate,
                    ProfileKind::sinusoidal_multi_axis, ProfileKind::random_smooth}) {
    MotionProfile p;
    p.kind = kind;
    p.amplitude = 1.0;
    p.duration = 2.0;
    p.seed = 7;
    ImuSequence seq = generate(p, 100.0);
    CHECK(seq.size() == 200);
    CHECK(seq.has_truth());
    CHECK(seq.count_valid() == seq.size());
    seq.validate();
  }
}

TEST_CASE("ideal gyro integrates back to the stored truth") {
  // The generator builds truth by integrating the same angular rates it
  // writes to the gyro channel, so a strapdown pass must reproduce it.
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    ImuSequence seq = generate(smooth_profile(seed), 200.0);
    auto est = strapdown_gyro(seq, seq.truth.front());
    CHECK(rmse_deg(est, seq.truth, seq.valid) < 1e-8);
  }
}

TEST_CASE("accelerometer reads rotated gravity when there is no translation") {
  ImuSequence seq = generate(smooth_profile(11), 100.0);
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    CHECK(seq.acc.row(i).norm() == doctest::Approx(kGravity).epsilon(1e-10));
    Vec3 want = rotate_vec(inverse(seq.truth[static_cast<std::size_t>(i)]),
                           kGravity * Vec3::UnitZ());
    CHECK((seq.acc.row(i).transpose() - want).norm() < 1e-9);
  }
}

TEST_CASE("translational acceleration perturbs the accelerometer magnitude") {
  MotionProfile p = smooth_profile(12);
  p.translation_accel_amplitude = 2.0;
  ImuSequence seq = generate(p, 100.0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < seq.size(); ++i)
    worst = std::max(worst, std::abs(seq.acc.row(i).norm() - kGravity));
  CHECK(worst > 0.1);
}

TEST_CASE("rest profile is motionless with gravity along z") {
  MotionProfile p;
  p.kind = ProfileKind::rest;
  p.duration = 1.0;
  ImuSequence seq = generate(p, 50.0);
  CHECK(seq.gyr.norm() == 0.0);
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    CHECK(seq.acc(i, 2) == doctest::Approx(kGravity));
    CHECK(std::abs(seq.acc(i, 0)) < 1e-12);
    CHECK(std::abs(seq.acc(i, 1)) < 1e-12);
  }
}

TEST_CASE("constant_rate spins about z at the requested amplitude") {
  MotionProfile p;
  p.kind = ProfileKind::constant_rate;
  p.amplitude = 0.8;
  p.duration = 2.0;
  ImuSequence seq = generate(p, 100.0);
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    CHECK(seq.gyr(i, 2) == doctest::Approx(0.8));
    CHECK(seq.gyr(i, 0) == 0.0);
    CHECK(seq.gyr(i, 1) == 0.0);
  }
}

TEST_CASE("random_smooth hits the requested per-axis RMS") {
  MotionProfile p = smooth_profile(21, 60.0);
  p.amplitude = 2.0;
  ImuSequence seq = generate(p, 100.0);
  for (int axis = 0; axis < 3; ++axis) {
    double rms = std::sqrt(seq.gyr.col(axis).squaredNorm() / seq.size());
    // amplitude/2 per axis by construction; generous band for phase effects.
    CHECK(rms == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("same seed reproduces the sequence, different seeds diverge") {
  ImuSequence a = generate(smooth_profile(5), 100.0);
  ImuSequence b = generate(smooth_profile(5), 100.0);
  ImuSequence c = generate(smooth_profile(6), 100.0);
  CHECK((a.gyr - b.gyr).norm() == 0.0);
  CHECK((a.acc - b.acc).norm() == 0.0);
  CHECK((a.gyr - c.gyr).norm() > 1e-3);
}

TEST_CASE("inject_errors adds a constant bias and reproducible noise") {
  ImuSequence clean = generate(smooth_profile(8), 100.0);

  ErrorSpec bias_only;
  bias_only.gyr_bias_std = 0.05;
  bias_only.seed = 42;
  ImuSequence biased = inject_errors(clean, bias_only);
  Eigen::RowVector3d delta0 = biased.gyr.row(0) - clean.gyr.row(0);
  CHECK(delta0.norm() > 1e-4);
  for (Eigen::Index i = 1; i < clean.size(); ++i)
    CHECK((biased.gyr.row(i) - clean.gyr.row(i) - delta0).norm() < 1e-15);
  CHECK((biased.acc - clean.acc).norm() == 0.0);

  ErrorSpec noisy;
  noisy.gyr_noise_std = 0.01;
  noisy.acc_noise_std = 0.1;
  noisy.seed = 43;
  ImuSequence n1 = inject_errors(clean, noisy);
  ImuSequence n2 = inject_errors(clean, noisy);
  CHECK((n1.gyr - n2.gyr).norm() == 0.0);
  CHECK((n1.acc - n2.acc).norm() == 0.0);
  noisy.seed = 44;
  ImuSequence n3 = inject_errors(clean, noisy);
  CHECK((n1.gyr - n3.gyr).norm() > 1e-4);

  // Noise magnitude sanity: sample std close to the requested one.
  double observed = std::sqrt((n1.gyr - clean.gyr).squaredNorm() / (3.0 * clean.size()));
  CHECK(observed == doctest::Approx(0.01).epsilon(0.1));
}

TEST_CASE("prepend_rest adds a motionless prefix and shifts the original") {
  ImuSequence seq = generate(smooth_profile(9), 100.0);
  ImuSequence out = prepend_rest(seq, 2.0);
  CHECK(out.size() == seq.size() + 200);
  out.validate();
  CHECK(out.t[0] == doctest::Approx(seq.t[0]));
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(out.gyr.row(i).norm() == 0.0);
    CHECK(std::abs(out.acc.row(i).norm() - kGravity) < 1e-12);
  }
  // Original samples keep their spacing and data.
  CHECK((out.gyr.bottomRows(seq.size()) - seq.gyr).norm() == 0.0);
  CHECK(out.t[200] - out.t[199] == doctest::Approx(0.01).epsilon(1e-9));
  // Truth continues seamlessly: prefix holds the first attitude.
  CHECK(attitude_error(out.truth[0], seq.truth[0]) < 1e-12);
  CHECK(attitude_error(out.truth[199], seq.truth[0]) < 1e-12);
}

TEST_CASE("prepend_rest needs truth and a positive duration") {
  ImuSequence seq = generate(smooth_profile(10), 100.0);
  CHECK_THROWS_AS(prepend_rest(seq, 0.0), std::invalid_argument);
  ImuSequence no_truth = seq;
  no_truth.truth.clear();
  no_truth.valid.clear();
  CHECK_THROWS_AS(prepend_rest(no_truth, 1.0), std::invalid_argument);
}
