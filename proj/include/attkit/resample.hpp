#pragma once

#include <functional>
#include <string>
#include <vector>

#include "attkit/sequence.hpp"

namespace attkit {

// Fourier-domain rate conversion of uniformly sampled columns: forward DFT,
// spectrum truncation or zero-padded extension (Nyquist bin split/folded to
// keep the result real), inverse DFT, amplitude rescale. Output length
// m = round(n * dst_hz / src_hz). Exact for signals band-limited below the
// smaller Nyquist frequency; end effects from the periodicity assumption stay
// confined near the boundaries.
Eigen::MatrixXd resample_signal(const Eigen::MatrixXd& x, double src_hz, double dst_hz);

// Orientation series rate conversion: each output sample interpolates the two
// bracketing input samples with shortest-arc slerp at the fractional source
// position i * src_hz / dst_hz (clamped to the valid range). out_len overrides
// the rounded default, which callers need to invert a prior resampling step
// without accumulating a rounding error.
std::vector<Quaternion> resample_quat(const std::vector<Quaternion>& qs, double src_hz,
                                      double dst_hz, Eigen::Index out_len = -1);

// Whole-sequence rate conversion: DFT for the inertial channels, slerp for
// truth, nearest-sample for the valid mask, timestamps rebuilt on the uniform
// destination grid starting at the original start time.
ImuSequence resample_sequence(const ImuSequence& seq, double dst_hz);

enum class RateGridKind { equidistant_ts, equidistant_fs, combined };

RateGridKind rate_grid_kind_from_string(const std::string& s);

// Sampling-rate grid over [f_min, f_max]: equidistant_fs spaces rates evenly
// in frequency, equidistant_ts evenly in sampling interval, combined takes
// half of each (duplicates merged). Ascending, count >= 2.
std::vector<double> rate_grid(RateGridKind kind, int count, double f_min, double f_max);

using EstimatorFn = std::function<std::vector<Quaternion>(const ImuSequence&)>;

// Rate wrapper: resamples the input to native_hz, runs the estimator there,
// and slerps the estimates back onto the original timestamps, so a fixed-rate
// estimator serves any input rate.
std::vector<Quaternion> jitr_run(const EstimatorFn& estimator, double native_hz,
                                 const ImuSequence& seq);

}  // namespace attkit
