#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "attkit/gru.hpp"
#include "attkit/sim.hpp"

using namespace attkit;

namespace {
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

GruNetwork tiny_network(bool time_aware, bool grouped, std::uint64_t seed) {
  Rng rng(seed);
  std::optional<double> native;
  if (!time_aware) native = 100.0;
  return random_network(8, time_aware, grouped, native, rng);
}
}  // namespace

TEST_CASE("gru cell matches a hand-evaluated step") {
  // H = 1, I = 1: every gate is a scalar and the recurrence is explicit.
  GruLayerWeights w;
  w.input_kernel.resize(3, 1);
  w.input_kernel << 0.5, -0.3, 0.8;  // Wr, Wz, Wn
  w.recurrent_kernel.resize(3, 1);
  w.recurrent_kernel << 0.2, 0.4, -0.6;  // Ur, Uz, Un
  w.input_bias.resize(3);
  w.input_bias << 0.05, -0.1, 0.02;
  w.recurrent_bias.resize(3);
  w.recurrent_bias << -0.04, 0.07, 0.11;

  Eigen::VectorXd x(1), h(1);
  x << 0.9;
  h << -0.35;

  double r = sigmoid(0.5 * 0.9 + 0.05 + 0.2 * -0.35 + -0.04);
  double z = sigmoid(-0.3 * 0.9 + -0.1 + 0.4 * -0.35 + 0.07);
  double rec = -0.6 * -0.35 + 0.11;
  double n = std::tanh(0.8 * 0.9 + 0.02 + r * rec);
  double want = (1.0 - z) * n + z * -0.35;

  GruCellCache cache;
  Eigen::VectorXd out = gru_cell_forward(w, x, h, &cache);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(want).epsilon(1e-15));
  CHECK(cache.r[0] == doctest::Approx(r).epsilon(1e-15));
  CHECK(cache.z[0] == doctest::Approx(z).epsilon(1e-15));
  CHECK(cache.n[0] == doctest::Approx(n).epsilon(1e-15));
  CHECK(cache.rec_n[0] == doctest::Approx(rec).epsilon(1e-15));
}

TEST_CASE("gru cell is the identity map for zero update-gate input") {
  // With huge positive update-gate preactivation, z ~ 1 and h' ~ h.
  GruLayerWeights w;
  w.input_kernel = Eigen::MatrixXd::Zero(6, 2);
  w.recurrent_kernel = Eigen::MatrixXd::Zero(6, 2);
  w.input_bias = Eigen::VectorXd::Zero(6);
  w.recurrent_bias = Eigen::VectorXd::Zero(6);
  w.input_bias.segment(2, 2).setConstant(30.0);  // update gate block
  Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd h(2);
  h << 0.3, -0.7;
  Eigen::VectorXd out = gru_cell_forward(w, x, h);
  CHECK((out - h).norm() < 1e-12);
}

TEST_CASE("parameter count matches the closed form") {
  // Per layer: 3H(I + H) + 6H; head: 4H.
  GruNetwork plain = tiny_network(false, false, 3);
  Eigen::Index h = 8;
  Eigen::Index want = (3 * h * (6 + h) + 6 * h) + (3 * h * (h + h) + 6 * h) + 4 * h;
  CHECK(plain.parameter_count() == want);

  GruNetwork aware = tiny_network(true, false, 4);
  want = (3 * h * (7 + h) + 6 * h) + (3 * h * (h + h) + 6 * h) + 4 * h;
  CHECK(aware.parameter_count() == want);

  // The reference size: H = 200 with the time-aware input is ~367k weights.
  Rng rng(5);
  GruNetwork ref = random_network(200, true, false, std::nullopt, rng);
  CHECK(ref.parameter_count() == 367400);
}

TEST_CASE("grouped layer 0 splits the channels between two half-width cells") {
  GruNetwork g = tiny_network(true, true, 6);
  CHECK(g.layer0_gyr.hidden_size() == 4);
  CHECK(g.layer0_acc.hidden_size() == 4);
  CHECK(g.layer0_gyr.input_size() == 4);  // gyr xyz + dt
  CHECK(g.layer0_acc.input_size() == 4);  // acc xyz + dt
  CHECK(g.layer1.input_size() == 8);

  GruState s = GruState::zero(g);
  REQUIRE(s.h.size() == 3);
  CHECK(s.h[0].size() == 4);
  CHECK(s.h[1].size() == 4);
  CHECK(s.h[2].size() == 8);

  GruState sp = GruState::zero(tiny_network(true, false, 7));
  REQUIRE(sp.h.size() == 2);
}

TEST_CASE("assemble_input standardizes the channels and appends raw dt") {
  GruNetwork g = tiny_network(true, false, 8);
  g.standardization.mean << 1, 2, 3, 4, 5, 6;
  g.standardization.std << 2, 2, 2, 4, 4, 4;
  Vec3 gyr(3.0, 4.0, 5.0), acc(8.0, 9.0, 10.0);
  Eigen::VectorXd in = g.assemble_input(gyr, acc, 0.025);
  REQUIRE(in.size() == 7);
  CHECK(in[0] == doctest::Approx(1.0));
  CHECK(in[1] == doctest::Approx(1.0));
  CHECK(in[2] == doctest::Approx(1.0));
  CHECK(in[3] == doctest::Approx(1.0));
  CHECK(in[4] == doctest::Approx(1.0));
  CHECK(in[5] == doctest::Approx(1.0));
  CHECK(in[6] == doctest::Approx(0.025));  // dt stays in seconds
}

TEST_CASE("network_forward emits unit quaternions and carries state") {
  GruNetwork g = tiny_network(true, false, 9);
  MotionProfile p;
  p.kind = ProfileKind::random_smooth;
  p.amplitude = 1.0;
  p.duration = 1.0;
  p.seed = 10;
  ImuSequence seq = generate(p, 100.0);
  Eigen::VectorXd dts = sample_dts(seq);

  NetworkOutput out = network_forward(g, seq.gyr, seq.acc, dts);
  REQUIRE(out.quats.size() == static_cast<std::size_t>(seq.size()));
  for (const auto& q : out.quats) CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));

  // Splitting the sequence and carrying the state matches one long run.
  Eigen::Index half = seq.size() / 2;
  NetworkOutput first =
      network_forward(g, seq.gyr.topRows(half), seq.acc.topRows(half), dts.head(half));
  NetworkOutput second =
      network_forward(g, seq.gyr.bottomRows(seq.size() - half),
                      seq.acc.bottomRows(seq.size() - half), dts.tail(seq.size() - half),
                      &first.final_state);
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    const Quaternion& a = out.quats[static_cast<std::size_t>(i)];
    const Quaternion& b = i < half ? first.quats[static_cast<std::size_t>(i)]
                                   : second.quats[static_cast<std::size_t>(i - half)];
    CHECK(std::abs(dot(a, b)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("grouped and plain networks both run forward") {
  for (bool grouped : {false, true}) {
    GruNetwork g = tiny_network(true, grouped, 11);
    MotionProfile p;
    p.kind = ProfileKind::random_smooth;
    p.amplitude = 1.0;
    p.duration = 0.5;
    p.seed = 12;
    ImuSequence seq = generate(p, 100.0);
    NetworkOutput out = network_forward(g, seq.gyr, seq.acc, sample_dts(seq));
    CHECK(out.quats.size() == static_cast<std::size_t>(seq.size()));
  }
}

TEST_CASE("a zero head is reported as a degenerate output") {
  GruNetwork g = tiny_network(true, false, 13);
  g.head.setZero();
  MotionProfile p;
  p.kind = ProfileKind::rest;
  p.duration = 0.2;
  ImuSequence seq = generate(p, 50.0);
  CHECK_THROWS_AS(network_forward(g, seq.gyr, seq.acc, sample_dts(seq)),
                  DegenerateOutputError);
}

TEST_CASE("weights survive a save/load round trip byte for byte") {
  GruNetwork g = tiny_network(true, true, 14);
  g.standardization.mean << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  g.standardization.std << 1.1, 1.2, 1.3, 1.4, 1.5, 1.6;
  auto dir = std::filesystem::temp_directory_path();
  auto p1 = dir / "attkit_w1.json";
  auto p2 = dir / "attkit_w2.json";
  save_weights(g, p1);
  GruNetwork back = load_weights(p1);
  save_weights(back, p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(!s1.empty());

  CHECK(back.time_aware == g.time_aware);
  CHECK(back.grouped_input == g.grouped_input);
  CHECK((back.head - g.head).norm() == 0.0);
  CHECK((back.layer1.input_kernel - g.layer1.input_kernel).norm() == 0.0);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("non-time-aware weights keep their native rate") {
  GruNetwork g = tiny_network(false, false, 15);
  auto path = std::filesystem::temp_directory_path() / "attkit_w3.json";
  save_weights(g, path);
  GruNetwork back = load_weights(path);
  REQUIRE(back.native_rate_hz.has_value());
  CHECK(*back.native_rate_hz == 100.0);
  CHECK(back.time_aware == false);
  std::filesystem::remove(path);
}

TEST_CASE("the loader names broken tensors") {
  GruNetwork g = tiny_network(true, false, 16);
  auto path = std::filesystem::temp_directory_path() / "attkit_w4.json";
  save_weights(g, path);

  std::ifstream in(path);
  nlohmann::json j = nlohmann::json::parse(in);
  in.close();

  SUBCASE("wrong shape") {
    j["tensors"]["layer1.input_bias"]["shape"] = {7};
    std::ofstream out(path, std::ios::binary);
    out << j.dump(1) << "\n";
    out.close();
    try {
      load_weights(path);
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("layer1.input_bias") != std::string::npos);
    }
  }
  SUBCASE("unexpected tensor") {
    j["tensors"]["layer9.weird"] = {{"shape", {1}}, {"data", {0.0}}};
    std::ofstream out(path, std::ios::binary);
    out << j.dump(1) << "\n";
    out.close();
    try {
      load_weights(path);
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("layer9.weird") != std::string::npos);
    }
  }
  SUBCASE("bad format tag") {
    j["format"] = "something-else";
    std::ofstream out(path, std::ios::binary);
    out << j.dump(1) << "\n";
    out.close();
    CHECK_THROWS(load_weights(path));
  }
  std::filesystem::remove(path);
}

TEST_CASE("random networks are reproducible by seed") {
  Rng a(21), b(21), c(22);
  GruNetwork g1 = random_network(8, true, false, std::nullopt, a);
  GruNetwork g2 = random_network(8, true, false, std::nullopt, b);
  GruNetwork g3 = random_network(8, true, false, std::nullopt, c);
  CHECK((g1.layer0.input_kernel - g2.layer0.input_kernel).norm() == 0.0);
  CHECK((g1.head - g2.head).norm() == 0.0);
  CHECK((g1.layer0.input_kernel - g3.layer0.input_kernel).norm() > 1e-6);
}
