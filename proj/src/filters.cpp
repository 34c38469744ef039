#include "attkit/filters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <stdexcept>

#include "attkit/metrics.hpp"

namespace attkit {

namespace {

constexpr double kAccEps = 1e-6;  // below this norm the accelerometer says nothing

// Gravity direction predicted in the sensor frame: R(q)^T e_z.
Vec3 predicted_gravity(const Quaternion& q) {
  return {2.0 * (q.x * q.z - q.w * q.y), 2.0 * (q.w * q.x + q.y * q.z),
          1.0 - 2.0 * (q.x * q.x + q.y * q.y)};
}

Quaternion step_a(const Quaternion& q, double gain, const Vec3& gyr, const Vec3& acc, double dt) {
  const Quaternion qp = integrate_gyro(q, gyr, dt);
  const double an = acc.norm();
  if (an < kAccEps) return qp;
  const Vec3 v = acc / an;
  const Vec3 f = predicted_gravity(qp) - v;
  // gradient of 0.5*|f|^2 with respect to (w, x, y, z)
  Eigen::Vector4d grad;
  grad[0] = -2.0 * qp.y * f[0] + 2.0 * qp.x * f[1];
  grad[1] = 2.0 * qp.z * f[0] + 2.0 * qp.w * f[1] - 4.0 * qp.x * f[2];
  grad[2] = -2.0 * qp.w * f[0] + 2.0 * qp.z * f[1] - 4.0 * qp.y * f[2];
  grad[3] = 2.0 * qp.x * f[0] + 2.0 * qp.y * f[1];
  const double gn = grad.norm();
  if (gn < 1e-15) return qp;  // already in the cost minimum
  grad /= gn;
  return normalized({qp.w - gain * dt * grad[0], qp.x - gain * dt * grad[1],
                     qp.y - gain * dt * grad[2], qp.z - gain * dt * grad[3]});
}

FilterState step_b(const FilterState& state, double gain, double ki, const Vec3& gyr,
                   const Vec3& acc, double dt) {
  FilterState next = state;
  Vec3 rate = gyr;
  const double an = acc.norm();
  if (an >= kAccEps) {
    const Vec3 v = acc / an;
    const Vec3 err = v.cross(predicted_gravity(state.q));  // measured x predicted
    next.bias_integral += ki * err * dt;
    rate += gain * err + next.bias_integral;
  } else {
    rate += next.bias_integral;
  }
  next.q = integrate_gyro(state.q, rate, dt);
  return next;
}

}  // namespace

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "A" || s == "a" || s == "filterA") return FilterKind::A;
  if (s == "B" || s == "b" || s == "filterB") return FilterKind::B;
  throw std::invalid_argument("unknown filter kind: " + s);
}

Quaternion accel_init(const Vec3& acc) {
  const double n = acc.norm();
  if (!acc.allFinite() || n < kAccEps)
    throw std::invalid_argument("accel_init: degenerate accelerometer sample");
  const Vec3 u = acc / n;
  // shortest arc taking u to e_z: axis u x e_z, angle acos(u.e_z)
  const double c = u.z();
  if (c < -1.0 + 1e-12) return {0.0, 1.0, 0.0, 0.0};  // upside down, pick the x axis
  return normalized({1.0 + c, u.y(), -u.x(), 0.0});
}

FilterState filter_step(const FilterState& state, const FilterParams& params, const Vec3& gyr,
                        const Vec3& acc, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("filter_step: dt must be positive");
  if (!gyr.allFinite() || !acc.allFinite())
    throw std::invalid_argument("filter_step: non-finite sample");
  if (params.gain < 0.0 || params.ki < 0.0)
    throw std::invalid_argument("filter_step: negative gain");
  if (params.kind == FilterKind::A) {
    FilterState next = state;
    next.q = step_a(state.q, params.gain, gyr, acc, dt);
    return next;
  }
  return step_b(state, params.gain, params.ki, gyr, acc, dt);
}

std::vector<Quaternion> run_filter(const FilterParams& params, const ImuSequence& seq,
                                   const std::optional<Quaternion>& q0) {
  seq.validate();
  FilterState state;
  if (q0) {
    state.q = normalized(*q0);
  } else if (params.init_from_accel) {
    state.q = accel_init(seq.acc.row(0).transpose());
  }
  std::vector<Quaternion> out(seq.size());
  out[0] = state.q;
  for (Eigen::Index k = 1; k < seq.size(); ++k) {
    state = filter_step(state, params, seq.gyr.row(k).transpose(), seq.acc.row(k).transpose(),
                        seq.dt_at(k));
    out[k] = state.q;
  }
  return out;
}

TuningGrid default_tuning_grid(FilterKind kind) {
  TuningGrid grid;
  for (int i = 0; i < 25; ++i)
    grid.gains.push_back(std::pow(10.0, -3.0 + 4.0 * i / 24.0));
  if (kind == FilterKind::B) {
    grid.kis = {0.0};
    for (int i = 0; i < 24; ++i)
      grid.kis.push_back(std::pow(10.0, -4.0 + 4.0 * i / 23.0));
  }
  return grid;
}

FilterParams tune_filter(FilterKind kind, const std::vector<ImuSequence>& sequences,
                         const TuningGrid& grid) {
  if (sequences.empty()) throw std::invalid_argument("tune_filter: no sequences");
  if (grid.gains.empty()) throw std::invalid_argument("tune_filter: empty gain grid");
  for (const auto& s : sequences) {
    s.validate();
    if (!s.has_truth()) throw std::invalid_argument("tune_filter: sequence without truth");
  }
  std::vector<double> gains = grid.gains;
  std::vector<double> kis = kind == FilterKind::B ? grid.kis : std::vector<double>{0.0};
  if (kis.empty()) throw std::invalid_argument("tune_filter: empty ki grid");
  std::sort(gains.begin(), gains.end());
  std::sort(kis.begin(), kis.end());

  FilterParams best{kind, gains.front(), kis.front(), grid.init_from_accel};
  double best_score = std::numeric_limits<double>::infinity();
  for (double gain : gains) {
    for (double ki : kis) {
      const FilterParams p{kind, gain, ki, grid.init_from_accel};
      std::vector<double> scores;
      scores.reserve(sequences.size());
      for (const auto& s : sequences)
        scores.push_back(rmse_deg(run_filter(p, s), s.truth, s.valid));
      const double score = mean_of(std::move(scores));
      if (score < best_score) {  // strict: earlier (smaller) candidates win ties
        best_score = score;
        best = p;
      }
    }
  }
  return best;
}

void save_filter_params(const FilterParams& params, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["kind"] = params.kind == FilterKind::A ? "A" : "B";
  j["gain"] = params.gain;
  j["ki"] = params.ki;
  j["init_from_accel"] = params.init_from_accel;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

FilterParams load_filter_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("filter params: " + path.string() + ": " + e.what());
  }
  FilterParams p;
  try {
    p.kind = filter_kind_from_string(j.at("kind").get<std::string>());
    p.gain = j.at("gain").get<double>();
    p.ki = j.value("ki", 0.0);
    p.init_from_accel = j.value("init_from_accel", true);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("filter params: " + path.string() + ": " + e.what());
  }
  if (p.gain < 0.0 || p.ki < 0.0)
    throw std::runtime_error("filter params: " + path.string() + ": negative gain");
  return p;
}

}  // namespace attkit
