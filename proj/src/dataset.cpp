#include "attkit/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace attkit {

namespace {

constexpr const char* kHeader = "t,gyr_x,gyr_y,gyr_z,acc_x,acc_y,acc_z,qw,qx,qy,qz,valid";

[[noreturn]] void fail(const std::filesystem::path& path, size_t line, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view cell, const std::filesystem::path& path, size_t line) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    fail(path, line, "bad number '" + std::string(cell) + "'");
  return v;
}

void append_double(std::string& out, double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

std::vector<std::string_view> split_row(std::string_view row) {
  std::vector<std::string_view> cells;
  size_t start = 0;
  while (true) {
    const size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(row.substr(start));
      break;
    }
    cells.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

}  // namespace

ImuSequence load_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw std::runtime_error(path.string() + ":1: bad header, expected '" + kHeader + "'");

  std::vector<double> t;
  std::vector<std::array<double, 3>> gyr, acc;
  std::vector<Quaternion> truth;
  std::vector<std::uint8_t> valid;
  bool any_truth = false;

  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 12) fail(path, lineno, "expected 12 columns");

    t.push_back(parse_double(cells[0], path, lineno));
    gyr.push_back({parse_double(cells[1], path, lineno), parse_double(cells[2], path, lineno),
                   parse_double(cells[3], path, lineno)});
    acc.push_back({parse_double(cells[4], path, lineno), parse_double(cells[5], path, lineno),
                   parse_double(cells[6], path, lineno)});

    const std::string_view vcell = cells[11];
    std::uint8_t v;
    if (vcell == "0")
      v = 0;
    else if (vcell == "1")
      v = 1;
    else
      fail(path, lineno, "valid must be 0 or 1");
    valid.push_back(v);

    const bool empty_truth = cells[7].empty() && cells[8].empty() && cells[9].empty() &&
                             cells[10].empty();
    if (empty_truth) {
      if (v) fail(path, lineno, "valid sample with empty truth");
      truth.push_back(Quaternion::identity());
    } else {
      if (cells[7].empty() || cells[8].empty() || cells[9].empty() || cells[10].empty())
        fail(path, lineno, "partially empty truth");
      Quaternion q{parse_double(cells[7], path, lineno), parse_double(cells[8], path, lineno),
                   parse_double(cells[9], path, lineno), parse_double(cells[10], path, lineno)};
      if (v && std::abs(q.norm() - 1.0) > 1e-3) fail(path, lineno, "truth is not a unit quaternion");
      truth.push_back(q);
      any_truth = true;
    }
  }

  const auto n = static_cast<Eigen::Index>(t.size());
  if (n < 2) throw std::runtime_error(path.string() + ": need at least 2 samples");

  ImuSequence seq;
  seq.t.resize(n);
  seq.gyr.resize(n, 3);
  seq.acc.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    seq.t[i] = t[i];
    for (int c = 0; c < 3; ++c) {
      seq.gyr(i, c) = gyr[i][c];
      seq.acc(i, c) = acc[i][c];
    }
  }
  if (any_truth) seq.truth = std::move(truth);
  seq.valid = std::move(valid);

  std::vector<double> dts;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(seq.t[i] > seq.t[i - 1]))
      fail(path, static_cast<size_t>(i) + 2, "time not strictly increasing");
    dts.push_back(seq.t[i] - seq.t[i - 1]);
  }
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double med = dts[dts.size() / 2];
  if (!(med > 0.0)) throw std::runtime_error(path.string() + ": degenerate time base");
  seq.rate_hz = 1.0 / med;

  // Relative paths like "a.csv" have no parent component; resolve first.
  std::error_code ec;
  auto abs = std::filesystem::absolute(path, ec);
  if (ec) abs = path;
  seq.name = abs.stem().string();
  seq.dataset = abs.parent_path().filename().string();
  seq.validate();
  return seq;
}

void save_sequence(const ImuSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  std::string out;
  out.reserve(static_cast<size_t>(seq.size()) * 96);
  out += kHeader;
  out += '\n';
  for (Eigen::Index i = 0; i < seq.size(); ++i) {
    append_double(out, seq.t[i]);
    for (int c = 0; c < 3; ++c) {
      out += ',';
      append_double(out, seq.gyr(i, c));
    }
    for (int c = 0; c < 3; ++c) {
      out += ',';
      append_double(out, seq.acc(i, c));
    }
    const bool v = seq.valid.empty() ? seq.has_truth() : seq.valid[i] != 0;
    if (seq.has_truth() && v) {
      const Quaternion& q = seq.truth[i];
      out += ',';
      append_double(out, q.w);
      out += ',';
      append_double(out, q.x);
      out += ',';
      append_double(out, q.y);
      out += ',';
      append_double(out, q.z);
    } else {
      out += ",,,,";
    }
    out += v ? ",1\n" : ",0\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << out;
  if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<ImuSequence> load_sequences(const std::vector<std::filesystem::path>& paths) {
  std::vector<ImuSequence> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_sequence(p));
  return out;
}

void save_estimates(const Eigen::VectorXd& t, const std::vector<Quaternion>& quats,
                    const std::filesystem::path& path) {
  if (t.size() != static_cast<Eigen::Index>(quats.size()))
    throw std::invalid_argument("save_estimates: length mismatch");
  std::string out = "t,qw,qx,qy,qz\n";
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    append_double(out, t[i]);
    const Quaternion& q = quats[i];
    for (double v : {q.w, q.x, q.y, q.z}) {
      out += ',';
      append_double(out, v);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << out;
  if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

EstimateSeries load_estimates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,qw,qx,qy,qz")
    throw std::runtime_error(path.string() + ":1: bad header, expected 't,qw,qx,qy,qz'");
  std::vector<double> t;
  std::vector<Quaternion> quats;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 5) fail(path, lineno, "expected 5 columns");
    t.push_back(parse_double(cells[0], path, lineno));
    quats.push_back({parse_double(cells[1], path, lineno), parse_double(cells[2], path, lineno),
                     parse_double(cells[3], path, lineno), parse_double(cells[4], path, lineno)});
  }
  EstimateSeries s;
  s.t = Eigen::Map<Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  s.quats = std::move(quats);
  return s;
}

}  // namespace attkit
