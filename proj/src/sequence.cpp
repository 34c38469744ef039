#include "attkit/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace attkit {

void ImuSequence::validate() const {
  const Eigen::Index n = t.size();
  if (n < 2) throw std::invalid_argument("sequence: need at least 2 samples");
  if (gyr.rows() != n || acc.rows() != n)
    throw std::invalid_argument("sequence: channel row count does not match timestamps");
  if (!valid.empty() && static_cast<Eigen::Index>(valid.size()) != n)
    throw std::invalid_argument("sequence: valid mask length does not match timestamps");
  if (has_truth() && static_cast<Eigen::Index>(truth.size()) != n)
    throw std::invalid_argument("sequence: truth length does not match timestamps");
  if (!t.allFinite() || !gyr.allFinite() || !acc.allFinite())
    throw std::invalid_argument("sequence: non-finite values");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("sequence: time not strictly increasing");
  if (!(rate_hz > 0.0)) throw std::invalid_argument("sequence: rate_hz must be positive");

  Eigen::VectorXd dts = sample_dts(*this);
  std::vector<double> d(dts.data() + 1, dts.data() + n);
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  const double med = d[d.size() / 2];
  if (std::abs(med - 1.0 / rate_hz) > 0.01 / rate_hz)
    throw std::invalid_argument("sequence: rate_hz inconsistent with median time step");

  if (has_truth()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!valid.empty() && !valid[i]) continue;
      if (!truth[i].is_finite() || std::abs(truth[i].norm() - 1.0) > 1e-3)
        throw std::invalid_argument("sequence: truth not a unit quaternion at sample " +
                                    std::to_string(i));
    }
  }
}

Eigen::Index ImuSequence::count_valid() const {
  if (valid.empty()) return has_truth() ? size() : 0;
  Eigen::Index c = 0;
  for (auto v : valid) c += v ? 1 : 0;
  return c;
}

Eigen::VectorXd sample_dts(const ImuSequence& seq) {
  const Eigen::Index n = seq.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = seq.dt_at(i);
  return out;
}

}  // namespace attkit
