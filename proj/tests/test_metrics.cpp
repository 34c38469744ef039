#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "attkit/metrics.hpp"
#include "attkit/quat.hpp"

using namespace attkit;

TEST_CASE("rmse_deg matches a hand-computed value") {
  // Truth identity everywhere; estimates tilted about x by known angles.
  std::vector<Quaternion> truth(3), est(3);
  est[0] = from_axis_angle(Vec3::UnitX(), 10.0 * kDegToRad);
  est[1] = from_axis_angle(Vec3::UnitX(), 20.0 * kDegToRad);
  est[2] = from_axis_angle(Vec3::UnitY(), 30.0 * kDegToRad);
  double want = std::sqrt((100.0 + 400.0 + 900.0) / 3.0);
  CHECK(rmse_deg(est, truth) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("rmse_deg ignores heading differences") {
  std::vector<Quaternion> truth(4), est(4);
  for (int i = 0; i < 4; ++i) {
    truth[i] = Quaternion{};
    est[i] = from_axis_angle(Vec3::UnitZ(), 0.3 * (i + 1));
  }
  CHECK(rmse_deg(est, truth) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("rmse_deg honors the valid mask") {
  std::vector<Quaternion> truth(3), est(3);
  est[0] = from_axis_angle(Vec3::UnitX(), 10.0 * kDegToRad);
  est[1] = from_axis_angle(Vec3::UnitX(), 90.0 * kDegToRad);  // masked out
  est[2] = from_axis_angle(Vec3::UnitY(), 10.0 * kDegToRad);
  std::vector<std::uint8_t> mask{1, 0, 1};
  CHECK(rmse_deg(est, truth, mask) == doctest::Approx(10.0).epsilon(1e-9));

  std::vector<std::uint8_t> none{0, 0, 0};
  CHECK_THROWS_AS(rmse_deg(est, truth, none), std::invalid_argument);
}

TEST_CASE("rmse_deg rejects mismatched lengths") {
  std::vector<Quaternion> truth(3), est(2);
  CHECK_THROWS_AS(rmse_deg(est, truth), std::invalid_argument);
}

TEST_CASE("mean, median and max behave on small vectors") {
  CHECK(mean_of({1.0, 2.0, 6.0}) == doctest::Approx(3.0));
  CHECK(median_of({5.0, 1.0, 3.0}) == doctest::Approx(3.0));
  CHECK(median_of({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
  CHECK(max_of({0.5, 2.5, -1.0}) == doctest::Approx(2.5));
}
