#pragma once

#include <vector>

#include "attkit/sequence.hpp"

namespace attkit {

constexpr double kRadToDeg = 180.0 / 3.141592653589793238462643383279502884;
constexpr double kDegToRad = 1.0 / kRadToDeg;

// Root-mean-square attitude error in degrees over the samples where mask is
// nonzero (empty mask = all samples). Throws when no sample contributes.
double rmse_deg(const std::vector<Quaternion>& est, const std::vector<Quaternion>& truth,
                const std::vector<std::uint8_t>& mask = {});

double mean_of(std::vector<double> v);
double median_of(std::vector<double> v);
double max_of(const std::vector<double>& v);

}  // namespace attkit
