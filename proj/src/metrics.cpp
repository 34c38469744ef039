#include "attkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace attkit {

double rmse_deg(const std::vector<Quaternion>& est, const std::vector<Quaternion>& truth,
                const std::vector<std::uint8_t>& mask) {
  if (est.size() != truth.size()) throw std::invalid_argument("rmse_deg: length mismatch");
  if (!mask.empty() && mask.size() != truth.size())
    throw std::invalid_argument("rmse_deg: mask length mismatch");
  double sum = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < est.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double e = attitude_error(truth[i], est[i]);
    sum += e * e;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("rmse_deg: no valid samples");
  return std::sqrt(sum / static_cast<double>(count)) * kRadToDeg;
}

double mean_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("mean_of: empty");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median_of: empty");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double max_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("max_of: empty");
  return *std::max_element(v.begin(), v.end());
}

}  // namespace attkit
