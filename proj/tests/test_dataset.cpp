#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "attkit/dataset.hpp"
#include "attkit/sim.hpp"

using namespace attkit;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

ImuSequence sample_sequence(std::uint64_t seed) {
  MotionProfile p;
  p.kind = ProfileKind::random_smooth;
  p.amplitude = 1.1;
  p.duration = 1.0;
  p.seed = seed;
  return generate(p, 100.0);
}

const char* kHeader = "t,gyr_x,gyr_y,gyr_z,acc_x,acc_y,acc_z,qw,qx,qy,qz,valid";

}  // namespace

TEST_CASE("sequences survive a save/load round trip exactly") {
  ImuSequence seq = sample_sequence(101);
  seq.valid[7] = 0;  // loader must preserve a mixed mask
  auto p1 = temp_file("attkit_seq1.csv");
  auto p2 = temp_file("attkit_seq2.csv");
  save_sequence(seq, p1);
  ImuSequence back = load_sequence(p1);
  save_sequence(back, p2);

  CHECK(slurp(p1) == slurp(p2));
  CHECK(back.size() == seq.size());
  CHECK((back.t - seq.t).norm() == 0.0);
  CHECK((back.gyr - seq.gyr).norm() == 0.0);
  CHECK((back.acc - seq.acc).norm() == 0.0);
  REQUIRE(back.truth.size() == seq.truth.size());
  for (std::size_t i = 0; i < seq.truth.size(); ++i) {
    if (i == 7) {
      // Invalid rows drop their truth cells; the placeholder is identity.
      CHECK(back.truth[i].w == 1.0);
      continue;
    }
    CHECK(back.truth[i].w == seq.truth[i].w);
    CHECK(back.truth[i].x == seq.truth[i].x);
    CHECK(back.truth[i].y == seq.truth[i].y);
    CHECK(back.truth[i].z == seq.truth[i].z);
  }
  CHECK(back.valid == seq.valid);
  CHECK(back.rate_hz == doctest::Approx(seq.rate_hz).epsilon(1e-9));
  CHECK(back.name == "attkit_seq1");
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("invalid rows may omit the truth columns entirely") {
  auto p = temp_file("attkit_seq3.csv");
  std::string body = std::string(kHeader) + "\n";
  body += "0,0.1,0,0,0,0,9.81,1,0,0,0,1\n";
  body += "0.01,0.1,0,0,0,0,9.81,,,,,0\n";
  body += "0.02,0.1,0,0,0,0,9.81,1,0,0,0,1\n";
  spit(p, body);
  ImuSequence seq = load_sequence(p);
  CHECK(seq.size() == 3);
  CHECK(seq.count_valid() == 2);
  // The placeholder is the identity quaternion.
  CHECK(seq.truth[1].w == 1.0);
  CHECK(seq.valid[1] == 0);
  std::filesystem::remove(p);
}

TEST_CASE("loader errors carry the file and line") {
  auto p = temp_file("attkit_bad.csv");

  SUBCASE("wrong header") {
    spit(p, "time,gx\n0,1\n");
    try {
      load_sequence(p);
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("attkit_bad.csv") != std::string::npos);
    }
  }
  SUBCASE("partial truth cells") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,0,0,0,0,0,9.81,1,0,0,0,1\n";
    body += "0.01,0,0,0,0,0,9.81,1,,0,0,1\n";
    spit(p, body);
    try {
      load_sequence(p);
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SUBCASE("valid flag out of range") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,0,0,0,0,0,9.81,1,0,0,0,2\n";
    body += "0.01,0,0,0,0,0,9.81,1,0,0,0,1\n";
    spit(p, body);
    CHECK_THROWS(load_sequence(p));
  }
  SUBCASE("valid row with empty truth") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,0,0,0,0,0,9.81,,,,,1\n";
    body += "0.01,0,0,0,0,0,9.81,1,0,0,0,1\n";
    spit(p, body);
    CHECK_THROWS(load_sequence(p));
  }
  SUBCASE("non-increasing timestamps") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,0,0,0,0,0,9.81,1,0,0,0,1\n";
    body += "0,0,0,0,0,0,9.81,1,0,0,0,1\n";
    spit(p, body);
    CHECK_THROWS(load_sequence(p));
  }
  SUBCASE("non-unit truth") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,0,0,0,0,0,9.81,0.5,0,0,0,1\n";
    body += "0.01,0,0,0,0,0,9.81,1,0,0,0,1\n";
    spit(p, body);
    CHECK_THROWS(load_sequence(p));
  }
  SUBCASE("unparsable number") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,zero,0,0,0,0,9.81,1,0,0,0,1\n";
    body += "0.01,0,0,0,0,0,9.81,1,0,0,0,1\n";
    spit(p, body);
    CHECK_THROWS(load_sequence(p));
  }
  SUBCASE("single sample") {
    std::string body = std::string(kHeader) + "\n";
    body += "0,0,0,0,0,0,9.81,1,0,0,0,1\n";
    spit(p, body);
    CHECK_THROWS(load_sequence(p));
  }
  std::filesystem::remove(p);
}

TEST_CASE("the rate comes from the median sampling interval") {
  auto p = temp_file("attkit_rate.csv");
  std::string body = std::string(kHeader) + "\n";
  for (int i = 0; i < 50; ++i) {
    body += std::to_string(i * 0.005) + ",0,0,0,0,0,9.81,1,0,0,0,1\n";
  }
  spit(p, body);
  ImuSequence seq = load_sequence(p);
  CHECK(seq.rate_hz == doctest::Approx(200.0).epsilon(1e-6));
  std::filesystem::remove(p);
}

TEST_CASE("dataset and name come from the file location") {
  auto dir = std::filesystem::temp_directory_path() / "attkit_ds";
  std::filesystem::create_directories(dir);
  ImuSequence seq = sample_sequence(102);
  auto p = dir / "trial_7.csv";
  save_sequence(seq, p);
  ImuSequence back = load_sequence(p);
  CHECK(back.name == "trial_7");
  CHECK(back.dataset == "attkit_ds");
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_sequences keeps the given order") {
  auto dir = std::filesystem::temp_directory_path() / "attkit_multi";
  std::filesystem::create_directories(dir);
  ImuSequence a = sample_sequence(103);
  ImuSequence b = sample_sequence(104);
  save_sequence(a, dir / "a.csv");
  save_sequence(b, dir / "b.csv");
  auto seqs = load_sequences({dir / "b.csv", dir / "a.csv"});
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].name == "b");
  CHECK(seqs[1].name == "a");
  std::filesystem::remove_all(dir);
}

TEST_CASE("estimates round trip through their CSV form") {
  ImuSequence seq = sample_sequence(105);
  std::vector<Quaternion> est = strapdown_gyro(seq, seq.truth.front());
  auto p = temp_file("attkit_est.csv");
  save_estimates(seq.t, est, p);
  EstimateSeries back = load_estimates(p);
  REQUIRE(back.quats.size() == est.size());
  CHECK((back.t - seq.t).norm() == 0.0);
  for (std::size_t i = 0; i < est.size(); ++i) {
    CHECK(back.quats[i].w == est[i].w);
    CHECK(back.quats[i].x == est[i].x);
    CHECK(back.quats[i].y == est[i].y);
    CHECK(back.quats[i].z == est[i].z);
  }
  std::filesystem::remove(p);
}

TEST_CASE("save_estimates validates lengths") {
  Eigen::VectorXd t(3);
  t << 0, 0.01, 0.02;
  std::vector<Quaternion> two(2);
  CHECK_THROWS_AS(save_estimates(t, two, temp_file("attkit_never.csv")),
                  std::invalid_argument);
}

TEST_CASE("truthless sequences write empty truth cells") {
  ImuSequence seq = sample_sequence(106);
  seq.truth.clear();
  seq.valid.clear();
  auto p = temp_file("attkit_notruth.csv");
  save_sequence(seq, p);
  std::string text = slurp(p);
  CHECK(text.find(",,,,0\n") != std::string::npos);
  ImuSequence back = load_sequence(p);
  CHECK(back.count_valid() == 0);
  std::filesystem::remove(p);
}
