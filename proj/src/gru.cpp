#include "attkit/gru.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>
#include <string>

namespace attkit {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

}  // namespace

Eigen::Index GruLayerWeights::parameter_count() const {
  return input_kernel.size() + recurrent_kernel.size() + input_bias.size() +
         recurrent_bias.size();
}

void GruLayerWeights::validate(const std::string& name) const {
  const Eigen::Index H = hidden_size();
  const Eigen::Index I = input_size();
  if (H < 1 || I < 1) throw std::invalid_argument("weights: " + name + ": empty layer");
  if (input_kernel.rows() != 3 * H || recurrent_kernel.rows() != 3 * H ||
      input_bias.size() != 3 * H || recurrent_bias.size() != 3 * H)
    throw std::invalid_argument("weights: " + name + ": inconsistent gate block sizes");
  if (!input_kernel.allFinite() || !recurrent_kernel.allFinite() || !input_bias.allFinite() ||
      !recurrent_bias.allFinite())
    throw std::invalid_argument("weights: " + name + ": non-finite values");
  if (parameter_count() != 3 * H * (I + H) + 6 * H)
    throw std::logic_error("weights: " + name + ": parameter count mismatch");
}

Eigen::VectorXd gru_cell_forward(const GruLayerWeights& w, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& h, GruCellCache* cache) {
  const Eigen::Index H = w.hidden_size();
  const Eigen::VectorXd a = w.input_kernel * x + w.input_bias;
  const Eigen::VectorXd b = w.recurrent_kernel * h + w.recurrent_bias;
  const Eigen::ArrayXd r = sigmoid(a.segment(0, H).array() + b.segment(0, H).array());
  const Eigen::ArrayXd z = sigmoid(a.segment(H, H).array() + b.segment(H, H).array());
  const Eigen::ArrayXd rec_n = b.segment(2 * H, H).array();
  const Eigen::ArrayXd n = (a.segment(2 * H, H).array() + r * rec_n).tanh();
  Eigen::VectorXd out = ((1.0 - z) * n + z * h.array()).matrix();
  if (cache) {
    cache->r = r.matrix();
    cache->z = z.matrix();
    cache->n = n.matrix();
    cache->rec_n = rec_n.matrix();
  }
  return out;
}

Eigen::Index GruNetwork::parameter_count() const {
  Eigen::Index total = layer1.parameter_count() + head.size();
  if (grouped_input)
    total += layer0_gyr.parameter_count() + layer0_acc.parameter_count();
  else
    total += layer0.parameter_count();
  return total;
}

void GruNetwork::validate() const {
  const Eigen::Index H = hidden_size();
  if (H < 1) throw std::invalid_argument("weights: empty network");
  const Eigen::Index in0 = (grouped_input ? 3 : 6) + (time_aware ? 1 : 0);
  if (grouped_input) {
    if (H % 2 != 0) throw std::invalid_argument("weights: grouped input needs even hidden size");
    layer0_gyr.validate("layer0_gyr");
    layer0_acc.validate("layer0_acc");
    if (layer0_gyr.hidden_size() != H / 2 || layer0_acc.hidden_size() != H / 2)
      throw std::invalid_argument("weights: sub-layer hidden sizes must be half the layer-1 size");
    if (layer0_gyr.input_size() != in0 || layer0_acc.input_size() != in0)
      throw std::invalid_argument("weights: sub-layer input size mismatch");
  } else {
    layer0.validate("layer0");
    if (layer0.hidden_size() != H)
      throw std::invalid_argument("weights: layer-0 hidden size mismatch");
    if (layer0.input_size() != in0)
      throw std::invalid_argument("weights: layer-0 input size mismatch");
  }
  layer1.validate("layer1");
  if (layer1.input_size() != H)
    throw std::invalid_argument("weights: layer-1 input size must equal the layer-0 state size");
  if (head.rows() != 4 || head.cols() != H)
    throw std::invalid_argument("weights: head must be 4 x hidden");
  if (!head.allFinite()) throw std::invalid_argument("weights: head: non-finite values");
  if (!time_aware && !native_rate_hz)
    throw std::invalid_argument("weights: rate-specific network needs native_rate_hz");
  if (native_rate_hz && !(*native_rate_hz > 0.0))
    throw std::invalid_argument("weights: native_rate_hz must be positive");
  for (int c = 0; c < 6; ++c)
    if (!(standardization.std[c] > 0.0))
      throw std::invalid_argument("weights: standardization std must be positive");
}

Eigen::VectorXd GruNetwork::assemble_input(const Vec3& gyr, const Vec3& acc, double dt) const {
  Eigen::VectorXd x(time_aware ? 7 : 6);
  for (int c = 0; c < 3; ++c) {
    x[c] = (gyr[c] - standardization.mean[c]) / standardization.std[c];
    x[3 + c] = (acc[c] - standardization.mean[3 + c]) / standardization.std[3 + c];
  }
  if (time_aware) x[6] = dt;  // raw seconds, deliberately not standardized
  return x;
}

Eigen::VectorXd GruNetwork::assemble_input_group(bool acc_group, const Vec3& v, double dt) const {
  Eigen::VectorXd x(time_aware ? 4 : 3);
  const int off = acc_group ? 3 : 0;
  for (int c = 0; c < 3; ++c) x[c] = (v[c] - standardization.mean[off + c]) / standardization.std[off + c];
  if (time_aware) x[3] = dt;
  return x;
}

GruState GruState::zero(const GruNetwork& net) {
  GruState s;
  const Eigen::Index H = net.hidden_size();
  if (net.grouped_input) {
    s.h.push_back(Eigen::VectorXd::Zero(H / 2));
    s.h.push_back(Eigen::VectorXd::Zero(H / 2));
  } else {
    s.h.push_back(Eigen::VectorXd::Zero(H));
  }
  s.h.push_back(Eigen::VectorXd::Zero(H));
  return s;
}

NetworkOutput network_forward(const GruNetwork& net, const Mat3X& gyr, const Mat3X& acc,
                              const Eigen::VectorXd& dts, const GruState* initial) {
  net.validate();
  const Eigen::Index n = gyr.rows();
  if (acc.rows() != n) throw std::invalid_argument("network_forward: channel length mismatch");
  if (net.time_aware && dts.size() != n)
    throw std::invalid_argument("network_forward: time-aware network needs one dt per sample");
  if (dts.size() != 0 && dts.size() != n)
    throw std::invalid_argument("network_forward: dt length mismatch");

  GruState state = initial ? *initial : GruState::zero(net);
  NetworkOutput out;
  out.quats.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double dt = dts.size() ? dts[k] : 0.0;
    const Vec3 g = gyr.row(k).transpose();
    const Vec3 a = acc.row(k).transpose();
    Eigen::VectorXd h1_in;
    if (net.grouped_input) {
      state.h[0] = gru_cell_forward(net.layer0_gyr, net.assemble_input_group(false, g, dt), state.h[0]);
      state.h[1] = gru_cell_forward(net.layer0_acc, net.assemble_input_group(true, a, dt), state.h[1]);
      h1_in.resize(net.hidden_size());
      h1_in << state.h[0], state.h[1];
    } else {
      state.h[0] = gru_cell_forward(net.layer0, net.assemble_input(g, a, dt), state.h[0]);
      h1_in = state.h[0];
    }
    auto& h1 = state.h.back();
    h1 = gru_cell_forward(net.layer1, h1_in, h1);
    const Eigen::Vector4d y = net.head * h1;
    const double yn = y.norm();
    if (!(yn >= 1e-12))
      throw DegenerateOutputError("network_forward: degenerate head output at step " +
                                  std::to_string(k));
    out.quats[k] = {y[0] / yn, y[1] / yn, y[2] / yn, y[3] / yn};
  }
  out.final_state = std::move(state);
  return out;
}

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
}

void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
}

GruLayerWeights random_layer(Eigen::Index hidden, Eigen::Index input, Rng& rng) {
  GruLayerWeights w;
  w.input_kernel.resize(3 * hidden, input);
  w.recurrent_kernel.resize(3 * hidden, hidden);
  w.input_bias.resize(3 * hidden);
  w.recurrent_bias.resize(3 * hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(w.input_kernel, bound, rng);
  fill_uniform(w.recurrent_kernel, bound, rng);
  fill_uniform(w.input_bias, bound, rng);
  fill_uniform(w.recurrent_bias, bound, rng);
  return w;
}

}  // namespace

GruNetwork random_network(Eigen::Index hidden, bool time_aware, bool grouped_input,
                          std::optional<double> native_rate_hz, Rng& rng) {
  if (hidden < 1) throw std::invalid_argument("random_network: hidden size must be positive");
  if (grouped_input && hidden % 2 != 0)
    throw std::invalid_argument("random_network: grouped input needs even hidden size");
  GruNetwork net;
  net.time_aware = time_aware;
  net.grouped_input = grouped_input;
  net.native_rate_hz = native_rate_hz;
  const Eigen::Index in0 = (grouped_input ? 3 : 6) + (time_aware ? 1 : 0);
  if (grouped_input) {
    net.layer0_gyr = random_layer(hidden / 2, in0, rng);
    net.layer0_acc = random_layer(hidden / 2, in0, rng);
  } else {
    net.layer0 = random_layer(hidden, in0, rng);
  }
  net.layer1 = random_layer(hidden, hidden, rng);
  net.head.resize(4, hidden);
  fill_uniform(net.head, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  net.validate();
  return net;
}

namespace {

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return ordered_json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(rows)}};
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json data = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
  return ordered_json{{"shape", {v.size()}}, {"data", std::move(data)}};
}

void layer_json(ordered_json& tensors, const std::string& name, const GruLayerWeights& w) {
  tensors[name + ".input_kernel"] = matrix_json(w.input_kernel);
  tensors[name + ".recurrent_kernel"] = matrix_json(w.recurrent_kernel);
  tensors[name + ".input_bias"] = vector_json(w.input_bias);
  tensors[name + ".recurrent_bias"] = vector_json(w.recurrent_bias);
}

[[noreturn]] void tensor_error(const std::string& name, const std::string& what) {
  throw std::runtime_error("weights: tensor '" + name + "': " + what);
}

Eigen::MatrixXd read_matrix(const json& tensors, const std::string& name, Eigen::Index rows,
                            Eigen::Index cols) {
  if (!tensors.contains(name)) throw std::runtime_error("weights: missing tensor '" + name + "'");
  const json& t = tensors.at(name);
  if (!t.contains("shape") || !t.contains("data")) tensor_error(name, "needs shape and data");
  const json& shape = t.at("shape");
  if (!shape.is_array() || shape.size() != 2 || !shape[0].is_number() || !shape[1].is_number())
    tensor_error(name, "shape must be [rows, cols]");
  if (shape[0].get<Eigen::Index>() != rows || shape[1].get<Eigen::Index>() != cols)
    tensor_error(name, "shape is [" + shape[0].dump() + ", " + shape[1].dump() + "], expected [" +
                           std::to_string(rows) + ", " + std::to_string(cols) + "]");
  const json& data = t.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows)
    tensor_error(name, "data row count does not match shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = data[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      tensor_error(name, "data column count does not match shape at row " + std::to_string(r));
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) tensor_error(name, "non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd read_vector(const json& tensors, const std::string& name, Eigen::Index len) {
  if (!tensors.contains(name)) throw std::runtime_error("weights: missing tensor '" + name + "'");
  const json& t = tensors.at(name);
  if (!t.contains("shape") || !t.contains("data")) tensor_error(name, "needs shape and data");
  const json& shape = t.at("shape");
  if (!shape.is_array() || shape.size() != 1 || !shape[0].is_number())
    tensor_error(name, "shape must be [length]");
  if (shape[0].get<Eigen::Index>() != len)
    tensor_error(name, "shape is [" + shape[0].dump() + "], expected [" + std::to_string(len) + "]");
  const json& data = t.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != len)
    tensor_error(name, "data length does not match shape");
  Eigen::VectorXd v(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    if (!data[i].is_number()) tensor_error(name, "non-numeric entry");
    v[i] = data[i].get<double>();
  }
  return v;
}

GruLayerWeights read_layer(const json& tensors, const std::string& name, Eigen::Index hidden,
                           Eigen::Index input) {
  GruLayerWeights w;
  w.input_kernel = read_matrix(tensors, name + ".input_kernel", 3 * hidden, input);
  w.recurrent_kernel = read_matrix(tensors, name + ".recurrent_kernel", 3 * hidden, hidden);
  w.input_bias = read_vector(tensors, name + ".input_bias", 3 * hidden);
  w.recurrent_bias = read_vector(tensors, name + ".recurrent_bias", 3 * hidden);
  return w;
}

}  // namespace

std::string weights_to_string(const GruNetwork& net) {
  net.validate();
  ordered_json j;
  j["format"] = "gru-attitude-weights";
  j["version"] = 1;
  j["cell_variant"] = "rzn-reset-after-bias";
  j["time_aware"] = net.time_aware;
  j["grouped_input"] = net.grouped_input;
  if (net.native_rate_hz)
    j["native_rate_hz"] = *net.native_rate_hz;
  else
    j["native_rate_hz"] = nullptr;
  ordered_json stats;
  stats["mean"] = std::vector<double>(net.standardization.mean.data(),
                                      net.standardization.mean.data() + 6);
  stats["std"] = std::vector<double>(net.standardization.std.data(),
                                     net.standardization.std.data() + 6);
  j["standardization"] = std::move(stats);

  ordered_json tensors;
  if (net.grouped_input) {
    layer_json(tensors, "layer0_gyr", net.layer0_gyr);
    layer_json(tensors, "layer0_acc", net.layer0_acc);
  } else {
    layer_json(tensors, "layer0", net.layer0);
  }
  layer_json(tensors, "layer1", net.layer1);
  tensors["head.weight"] = matrix_json(net.head);
  j["tensors"] = std::move(tensors);
  return j.dump(1) + "\n";
}

void save_weights(const GruNetwork& net, const std::filesystem::path& path) {
  const std::string text = weights_to_string(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("weights: cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("weights: write to " + path.string() + " failed");
}

GruNetwork weights_from_string(const std::string& text, const std::string& context) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error("weights: " + context + ": " + e.what());
  }

  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key))
      throw std::runtime_error("weights: " + context + ": missing field '" + key + "'");
    return j.at(key);
  };
  if (require("format").get<std::string>() != "gru-attitude-weights")
    throw std::runtime_error("weights: " + context + ": unrecognized format");
  if (require("version").get<int>() != 1)
    throw std::runtime_error("weights: " + context + ": unsupported version");

  GruNetwork net;
  net.time_aware = require("time_aware").get<bool>();
  net.grouped_input = require("grouped_input").get<bool>();
  const json& rate = require("native_rate_hz");
  if (!rate.is_null()) net.native_rate_hz = rate.get<double>();
  const json& stats = require("standardization");
  if (!stats.contains("mean") || !stats.contains("std") || stats.at("mean").size() != 6 ||
      stats.at("std").size() != 6)
    throw std::runtime_error("weights: " + context + ": standardization needs 6 channels");
  for (int c = 0; c < 6; ++c) {
    net.standardization.mean[c] = stats.at("mean")[c].get<double>();
    net.standardization.std[c] = stats.at("std")[c].get<double>();
  }

  const json& tensors = require("tensors");
  if (!tensors.contains("head.weight"))
    throw std::runtime_error("weights: missing tensor 'head.weight'");
  const json& head_shape = tensors.at("head.weight").at("shape");
  if (!head_shape.is_array() || head_shape.size() != 2)
    tensor_error("head.weight", "shape must be [rows, cols]");
  const auto H = head_shape[1].get<Eigen::Index>();
  const Eigen::Index in0 = (net.grouped_input ? 3 : 6) + (net.time_aware ? 1 : 0);

  std::set<std::string> expected{"layer1.input_kernel", "layer1.recurrent_kernel",
                                 "layer1.input_bias", "layer1.recurrent_bias", "head.weight"};
  if (net.grouped_input) {
    if (H % 2 != 0)
      throw std::runtime_error("weights: grouped input needs even hidden size");
    net.layer0_gyr = read_layer(tensors, "layer0_gyr", H / 2, in0);
    net.layer0_acc = read_layer(tensors, "layer0_acc", H / 2, in0);
    for (const char* g : {"layer0_gyr", "layer0_acc"})
      for (const char* s : {".input_kernel", ".recurrent_kernel", ".input_bias", ".recurrent_bias"})
        expected.insert(std::string(g) + s);
  } else {
    net.layer0 = read_layer(tensors, "layer0", H, in0);
    for (const char* s : {".input_kernel", ".recurrent_kernel", ".input_bias", ".recurrent_bias"})
      expected.insert(std::string("layer0") + s);
  }
  net.layer1 = read_layer(tensors, "layer1", H, H);
  net.head = read_matrix(tensors, "head.weight", 4, H);
  for (const auto& [key, value] : tensors.items()) {
    (void)value;
    if (!expected.count(key)) throw std::runtime_error("weights: unexpected tensor '" + key + "'");
  }

  net.validate();
  return net;
}

GruNetwork load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("weights: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return weights_from_string(text, path.string());
}

}  // namespace attkit
