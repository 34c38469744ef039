#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attkit/sequence.hpp"

namespace attkit {

enum class FilterKind { A, B };

FilterKind filter_kind_from_string(const std::string& s);

// Filter-A: gradient-descent corrected gyro integration. gain is the descent
// step (1/s); ki unused.
// Filter-B: passive PI correction on the rate. gain is the proportional term,
// ki feeds an integral that absorbs constant gyro bias.
struct FilterParams {
  FilterKind kind = FilterKind::A;
  double gain = 0.1;
  double ki = 0.0;
  bool init_from_accel = true;
};

struct FilterState {
  Quaternion q;
  Vec3 bias_integral = Vec3::Zero();
};

// Tilt from a single accelerometer sample: the shortest-arc rotation taking
// the measured specific-force direction to earth +z. Heading-free by
// construction (rotation axis is horizontal).
Quaternion accel_init(const Vec3& acc);

// One update. Both filters take an exact gyro integration step; the
// accelerometer correction is skipped when the measurement is degenerate
// (norm below 1e-6 m/s^2).
FilterState filter_step(const FilterState& state, const FilterParams& params, const Vec3& gyr,
                        const Vec3& acc, double dt);

// Causal run over a sequence. out[0] is the initial attitude (explicit q0 if
// given, else accelerometer tilt if init_from_accel, else identity); out[k]
// for k >= 1 is the state after consuming sample k.
std::vector<Quaternion> run_filter(const FilterParams& params, const ImuSequence& seq,
                                   const std::optional<Quaternion>& q0 = std::nullopt);

struct TuningGrid {
  std::vector<double> gains;
  std::vector<double> kis{0.0};  // only used for Filter-B
  bool init_from_accel = true;
};

// 25 log-spaced gains in [1e-3, 1e1]; for Filter-B also ki in {0} plus 24
// log-spaced values in [1e-4, 1e0].
TuningGrid default_tuning_grid(FilterKind kind);

// Exhaustive grid search minimizing the mean attitude RMSE over the given
// sequences. Ties break toward the smaller gain, then the smaller ki.
FilterParams tune_filter(FilterKind kind, const std::vector<ImuSequence>& sequences,
                         const TuningGrid& grid);

// Small JSON files so tuned parameters can feed later runs.
void save_filter_params(const FilterParams& params, const std::filesystem::path& path);
FilterParams load_filter_params(const std::filesystem::path& path);

}  // namespace attkit
