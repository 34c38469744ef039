#include "attkit/sim.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "attkit/rng.hpp"

namespace attkit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Band-limited smooth scalar signal: sum of sinusoids with random frequencies
// in (0, band], random phases, and amplitudes normalized to a target RMS.
class SinusoidSum {
 public:
  SinusoidSum() = default;

  static SinusoidSum random(Rng& rng, double band, double rms, int count = 16) {
    SinusoidSum s;
    s.freq_.resize(count);
    s.amp_.resize(count);
    s.phase_.resize(count);
    double sumsq = 0.0;
    for (int i = 0; i < count; ++i) {
      s.freq_[i] = rng.uniform(0.0, band);
      if (s.freq_[i] == 0.0) s.freq_[i] = band;  // keep strictly inside (0, band]
      s.amp_[i] = rng.normal();
      s.phase_[i] = rng.uniform(0.0, kTwoPi);
      sumsq += 0.5 * s.amp_[i] * s.amp_[i];
    }
    if (rms > 0.0 && sumsq > 0.0) {
      const double scale = rms / std::sqrt(sumsq);
      for (double& a : s.amp_) a *= scale;
    } else {
      for (double& a : s.amp_) a = 0.0;
    }
    return s;
  }

  static SinusoidSum single(double freq, double amp, double phase) {
    SinusoidSum s;
    s.freq_ = {freq};
    s.amp_ = {amp};
    s.phase_ = {phase};
    return s;
  }

  double operator()(double t) const {
    double v = 0.0;
    for (size_t i = 0; i < freq_.size(); ++i)
      v += amp_[i] * std::sin(kTwoPi * freq_[i] * t + phase_[i]);
    return v;
  }

 private:
  std::vector<double> freq_, amp_, phase_;
};

struct ContinuousMotion {
  std::array<SinusoidSum, 3> omega;   // sensor-frame angular rate per axis
  std::array<SinusoidSum, 3> accel;   // earth-frame translational acceleration
  double constant_z = 0.0;            // extra constant rate about e_z
  Quaternion q0 = Quaternion::identity();

  Vec3 rate_at(double t) const {
    return {omega[0](t), omega[1](t), omega[2](t) + constant_z};
  }
  Vec3 accel_at(double t) const { return {accel[0](t), accel[1](t), accel[2](t)}; }
};

ContinuousMotion build_motion(const MotionProfile& p) {
  ContinuousMotion m;
  Rng rng(p.seed);
  switch (p.kind) {
    case ProfileKind::rest:
      break;
    case ProfileKind::constant_rate:
      m.constant_z = p.amplitude;
      break;
    case ProfileKind::sinusoidal_multi_axis: {
      // fixed frequency fractions keep the three axes incommensurate
      const double frac[3] = {0.50, 0.31, 0.17};
      for (int a = 0; a < 3; ++a)
        m.omega[a] = SinusoidSum::single(p.frequency_band * frac[a], p.amplitude,
                                         rng.uniform(0.0, kTwoPi));
      for (int a = 0; a < 3; ++a)
        m.accel[a] = SinusoidSum::random(rng, p.frequency_band,
                                         0.5 * p.translation_accel_amplitude);
      break;
    }
    case ProfileKind::random_smooth: {
      for (int a = 0; a < 3; ++a)
        m.omega[a] = SinusoidSum::random(rng, p.frequency_band, 0.5 * p.amplitude);
      for (int a = 0; a < 3; ++a)
        m.accel[a] = SinusoidSum::random(rng, p.frequency_band,
                                         0.5 * p.translation_accel_amplitude);
      m.q0 = rng.unit_quaternion();
      break;
    }
  }
  return m;
}

}  // namespace

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "rest") return ProfileKind::rest;
  if (s == "constant_rate") return ProfileKind::constant_rate;
  if (s == "sinusoidal_multi_axis") return ProfileKind::sinusoidal_multi_axis;
  if (s == "random_smooth") return ProfileKind::random_smooth;
  throw std::invalid_argument("unknown motion profile: " + s);
}

ImuSequence generate(const MotionProfile& profile, double rate_hz) {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("generate: rate_hz must be positive");
  if (!(profile.duration > 0.0)) throw std::invalid_argument("generate: duration must be positive");
  if (profile.amplitude < 0.0 || profile.frequency_band <= 0.0 ||
      profile.translation_accel_amplitude < 0.0)
    throw std::invalid_argument("generate: profile parameters out of range");

  const auto n = static_cast<Eigen::Index>(std::llround(profile.duration * rate_hz));
  if (n < 2) throw std::invalid_argument("generate: fewer than 2 samples");
  const double dt = 1.0 / rate_hz;
  const ContinuousMotion motion = build_motion(profile);

  ImuSequence seq;
  seq.t.resize(n);
  seq.gyr.resize(n, 3);
  seq.acc.resize(n, 3);
  seq.truth.resize(n);
  seq.valid.assign(n, 1);
  seq.rate_hz = rate_hz;

  Quaternion q = motion.q0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = k * dt;
    const Vec3 w = motion.rate_at(t);
    seq.t[k] = t;
    seq.gyr.row(k) = w.transpose();
    if (k > 0) q = integrate_gyro(q, w, dt);
    seq.truth[k] = q;
    const Vec3 a_earth = kGravity * Vec3::UnitZ() + motion.accel_at(t);
    seq.acc.row(k) = rotate_vec(inverse(q), a_earth).transpose();
  }
  return seq;
}

ImuSequence inject_errors(const ImuSequence& seq, const ErrorSpec& spec) {
  seq.validate();
  if (spec.gyr_noise_std < 0.0 || spec.acc_noise_std < 0.0 || spec.gyr_bias_std < 0.0)
    throw std::invalid_argument("inject_errors: negative standard deviation");

  ImuSequence out = seq;
  Rng rng(spec.seed);
  Vec3 bias = Vec3::Zero();
  if (spec.gyr_bias_std > 0.0) bias = rng.normal_vec3(spec.gyr_bias_std);
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    Vec3 g = seq.gyr.row(i).transpose();
    Vec3 a = seq.acc.row(i).transpose();
    g += bias;
    if (spec.gyr_noise_std > 0.0) g += rng.normal_vec3(spec.gyr_noise_std);
    if (spec.acc_noise_std > 0.0) a += rng.normal_vec3(spec.acc_noise_std);
    out.gyr.row(i) = g.transpose();
    out.acc.row(i) = a.transpose();
  }
  return out;
}

ImuSequence prepend_rest(const ImuSequence& seq, double duration_s) {
  seq.validate();
  if (!seq.has_truth()) throw std::invalid_argument("prepend_rest: sequence has no truth");
  if (!(duration_s > 0.0)) throw std::invalid_argument("prepend_rest: duration must be positive");

  const auto m = static_cast<Eigen::Index>(std::llround(duration_s * seq.rate_hz));
  if (m == 0) return seq;
  const Eigen::Index n = seq.size();
  const double dt = 1.0 / seq.rate_hz;
  const Quaternion q0 = seq.truth.front();
  const Vec3 acc_rest = rotate_vec(inverse(q0), kGravity * Vec3::UnitZ());

  ImuSequence out;
  out.t.resize(n + m);
  out.gyr.resize(n + m, 3);
  out.acc.resize(n + m, 3);
  out.truth.resize(n + m);
  out.valid.assign(n + m, 1);
  out.rate_hz = seq.rate_hz;
  out.name = seq.name;
  out.dataset = seq.dataset;

  const double t0 = seq.t[0];
  for (Eigen::Index i = 0; i < m; ++i) {
    out.t[i] = t0 + i * dt;
    out.gyr.row(i).setZero();
    out.acc.row(i) = acc_rest.transpose();
    out.truth[i] = q0;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.t[m + i] = seq.t[i] + m * dt;
    out.gyr.row(m + i) = seq.gyr.row(i);
    out.acc.row(m + i) = seq.acc.row(i);
    out.truth[m + i] = seq.truth[i];
    if (!seq.valid.empty()) out.valid[m + i] = seq.valid[i];
  }
  return out;
}

std::vector<Quaternion> strapdown_gyro(const ImuSequence& seq, const Quaternion& q0) {
  seq.validate();
  std::vector<Quaternion> out(seq.size());
  out[0] = normalized(q0);
  for (Eigen::Index k = 1; k < seq.size(); ++k)
    out[k] = integrate_gyro(out[k - 1], seq.gyr.row(k).transpose(), seq.dt_at(k));
  return out;
}

}  // namespace attkit
