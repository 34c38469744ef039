#pragma once

#include <filesystem>
#include <vector>

#include "attkit/sequence.hpp"

namespace attkit {

// CSV interchange format, one sample per row:
//   t,gyr_x,gyr_y,gyr_z,acc_x,acc_y,acc_z,qw,qx,qy,qz,valid
// Units: seconds, rad/s, m/s^2; truth is scalar-first and unit. The four
// truth cells are empty exactly where valid is 0 (and on every row when the
// sequence carries no truth at all). Values round-trip exactly: doubles are
// written with the shortest representation that parses back to the same bits.
ImuSequence load_sequence(const std::filesystem::path& path);
void save_sequence(const ImuSequence& seq, const std::filesystem::path& path);

std::vector<ImuSequence> load_sequences(const std::vector<std::filesystem::path>& paths);

// Orientation estimate series as CSV (header t,qw,qx,qy,qz), same exact
// round-trip guarantees as the sequence format.
void save_estimates(const Eigen::VectorXd& t, const std::vector<Quaternion>& quats,
                    const std::filesystem::path& path);

struct EstimateSeries {
  Eigen::VectorXd t;
  std::vector<Quaternion> quats;
};

EstimateSeries load_estimates(const std::filesystem::path& path);

}  // namespace attkit
