#include "attkit/resample.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

namespace attkit {

namespace {

Eigen::Index output_length(Eigen::Index n, double src_hz, double dst_hz) {
  return static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * dst_hz / src_hz));
}

void check_rates(double src_hz, double dst_hz, const char* who) {
  if (!(src_hz > 0.0) || !(dst_hz > 0.0))
    throw std::invalid_argument(std::string(who) + ": rates must be positive");
}

}  // namespace

Eigen::MatrixXd resample_signal(const Eigen::MatrixXd& x, double src_hz, double dst_hz) {
  check_rates(src_hz, dst_hz, "resample_signal");
  const Eigen::Index n = x.rows();
  if (n < 2) throw std::invalid_argument("resample_signal: need at least 2 samples");
  if (!x.allFinite()) throw std::invalid_argument("resample_signal: non-finite input");
  const Eigen::Index m = output_length(n, src_hz, dst_hz);
  if (m < 2) throw std::invalid_argument("resample_signal: output would have fewer than 2 samples");

  Eigen::MatrixXd y(m, x.cols());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> xc(n), X(n), Y, yc;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) xc[i] = x(i, c);
    fft.fwd(X, xc);

    Y.assign(m, {0.0, 0.0});
    const Eigen::Index N = std::min(n, m);
    for (Eigen::Index k = 0; k < N / 2 + 1; ++k) Y[k] = X[k];
    for (Eigen::Index k = 1; k <= (N - 1) / 2; ++k) Y[m - k] = X[n - k];
    if (N % 2 == 0) {
      // keep the spectrum conjugate-even across the Nyquist bin
      if (m < n) {
        Y[N / 2] += std::conj(X[n - N / 2]);  // fold the mirrored half back in
      } else if (m > n) {
        Y[N / 2] *= 0.5;  // split between the two mirrored output bins
        Y[m - N / 2] = std::conj(Y[N / 2]);
      }
    }

    fft.inv(yc, Y);  // includes the 1/m factor
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < m; ++i) y(i, c) = yc[i].real() * scale;
  }
  return y;
}

std::vector<Quaternion> resample_quat(const std::vector<Quaternion>& qs, double src_hz,
                                      double dst_hz, Eigen::Index out_len) {
  check_rates(src_hz, dst_hz, "resample_quat");
  const auto n = static_cast<Eigen::Index>(qs.size());
  if (n < 2) throw std::invalid_argument("resample_quat: need at least 2 samples");
  const Eigen::Index m = out_len >= 0 ? out_len : output_length(n, src_hz, dst_hz);
  if (m < 1) throw std::invalid_argument("resample_quat: empty output");

  const double step = src_hz / dst_hz;
  std::vector<Quaternion> out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double pos = std::clamp(i * step, 0.0, static_cast<double>(n - 1));
    const auto k = static_cast<Eigen::Index>(pos);
    const double frac = pos - static_cast<double>(k);
    out[i] = k >= n - 1 ? normalized(qs[n - 1]) : slerp(qs[k], qs[k + 1], frac);
  }
  return out;
}

ImuSequence resample_sequence(const ImuSequence& seq, double dst_hz) {
  seq.validate();
  check_rates(seq.rate_hz, dst_hz, "resample_sequence");

  ImuSequence out;
  out.gyr = resample_signal(seq.gyr, seq.rate_hz, dst_hz);
  out.acc = resample_signal(seq.acc, seq.rate_hz, dst_hz);
  const Eigen::Index m = out.gyr.rows();
  out.t.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.t[i] = seq.t[0] + i / dst_hz;
  out.rate_hz = dst_hz;
  out.name = seq.name;
  out.dataset = seq.dataset;
  if (seq.has_truth()) {
    out.truth = resample_quat(seq.truth, seq.rate_hz, dst_hz, m);
    out.valid.resize(m);
    const double step = seq.rate_hz / dst_hz;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(i * step)), 0,
                                              seq.size() - 1);
      out.valid[i] = seq.valid.empty() ? 1 : seq.valid[k];
    }
  } else {
    out.valid.assign(m, seq.valid.empty() ? 1 : 0);
  }
  return out;
}

RateGridKind rate_grid_kind_from_string(const std::string& s) {
  if (s == "equidistant_ts") return RateGridKind::equidistant_ts;
  if (s == "equidistant_fs") return RateGridKind::equidistant_fs;
  if (s == "combined") return RateGridKind::combined;
  throw std::invalid_argument("unknown rate grid kind: " + s);
}

std::vector<double> rate_grid(RateGridKind kind, int count, double f_min, double f_max) {
  if (count < 2) throw std::invalid_argument("rate_grid: count must be at least 2");
  if (!(f_min > 0.0) || !(f_max > f_min))
    throw std::invalid_argument("rate_grid: need 0 < f_min < f_max");

  auto fs_grid = [&](int c) {
    std::vector<double> g(c);
    for (int i = 0; i < c; ++i) g[i] = f_min + (f_max - f_min) * i / (c - 1);
    return g;
  };
  auto ts_grid = [&](int c) {
    const double t_lo = 1.0 / f_max, t_hi = 1.0 / f_min;
    std::vector<double> g(c);
    for (int i = 0; i < c; ++i) g[i] = 1.0 / (t_hi - (t_hi - t_lo) * i / (c - 1));
    return g;
  };

  std::vector<double> out;
  switch (kind) {
    case RateGridKind::equidistant_fs:
      out = fs_grid(count);
      break;
    case RateGridKind::equidistant_ts:
      out = ts_grid(count);
      break;
    case RateGridKind::combined: {
      // alternate between the two spacings so each contributes half
      const auto fs = fs_grid(count);
      const auto ts = ts_grid(count);
      for (int i = 0; i < count; ++i) out.push_back(i % 2 == 0 ? fs[i] : ts[i]);
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      if (static_cast<int>(out.size()) != count)
        throw std::logic_error("rate_grid: combined grid collision");
      break;
    }
  }
  return out;
}

std::vector<Quaternion> jitr_run(const EstimatorFn& estimator, double native_hz,
                                 const ImuSequence& seq) {
  seq.validate();
  if (!(native_hz > 0.0)) throw std::invalid_argument("jitr_run: native rate must be positive");

  ImuSequence native;
  native.gyr = resample_signal(seq.gyr, seq.rate_hz, native_hz);
  native.acc = resample_signal(seq.acc, seq.rate_hz, native_hz);
  const Eigen::Index m = native.gyr.rows();
  native.t.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) native.t[i] = seq.t[0] + i / native_hz;
  native.valid.assign(m, 0);
  native.rate_hz = native_hz;
  native.name = seq.name;
  native.dataset = seq.dataset;

  const std::vector<Quaternion> est = estimator(native);
  if (static_cast<Eigen::Index>(est.size()) != m)
    throw std::runtime_error("jitr_run: estimator returned wrong length");
  return resample_quat(est, native_hz, seq.rate_hz, seq.size());
}

}  // namespace attkit
