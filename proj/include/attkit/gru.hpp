#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "attkit/augment.hpp"
#include "attkit/rng.hpp"
#include "attkit/sequence.hpp"

namespace attkit {

// One GRU layer. Gate blocks are packed along the first dimension in the
// order reset, update, candidate; the reset gate multiplies the recurrent
// candidate contribution after the bias is added:
//   r = sigmoid(Wr x + bwr + Ur h + bur)
//   z = sigmoid(Wz x + bwz + Uz h + buz)
//   n = tanh(Wn x + bwn + r .* (Un h + bun))
//   h' = (1 - z) .* n + z .* h
struct GruLayerWeights {
  Eigen::MatrixXd input_kernel;      // [3H x I]
  Eigen::MatrixXd recurrent_kernel;  // [3H x H]
  Eigen::VectorXd input_bias;        // [3H]
  Eigen::VectorXd recurrent_bias;    // [3H]

  Eigen::Index hidden_size() const { return recurrent_kernel.cols(); }
  Eigen::Index input_size() const { return input_kernel.cols(); }
  Eigen::Index parameter_count() const;
  void validate(const std::string& name) const;
};

// Per-step intermediates needed to run the cell backward.
struct GruCellCache {
  Eigen::VectorXd r, z, n;
  Eigen::VectorXd rec_n;  // Un h + bun, before the reset gate
};

Eigen::VectorXd gru_cell_forward(const GruLayerWeights& w, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& h, GruCellCache* cache = nullptr);

struct DegenerateOutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two recurrent layers plus a bias-free linear head whose 4-vector output is
// normalized into a unit quaternion [w, x, y, z]. Inputs are the standardized
// inertial channels; when time_aware, the raw sampling interval is appended.
// When grouped_input, layer 0 splits into two half-width sub-layers, one per
// sensor, whose states concatenate into the layer-1 input.
struct GruNetwork {
  bool time_aware = false;
  bool grouped_input = false;
  std::optional<double> native_rate_hz;  // required when not time_aware
  StandardizationStats standardization;

  GruLayerWeights layer0;                 // used when not grouped
  GruLayerWeights layer0_gyr, layer0_acc; // used when grouped
  GruLayerWeights layer1;
  Eigen::MatrixXd head;                   // [4 x H]

  Eigen::Index hidden_size() const { return layer1.hidden_size(); }
  Eigen::Index parameter_count() const;
  void validate() const;

  // Per-step layer-0 input vector(s). Grouped networks get one per sub-layer.
  Eigen::VectorXd assemble_input(const Vec3& gyr, const Vec3& acc, double dt) const;
  Eigen::VectorXd assemble_input_group(bool acc_group, const Vec3& v, double dt) const;
};

// Hidden states in layer order (layer 0 or its two halves, then layer 1).
struct GruState {
  std::vector<Eigen::VectorXd> h;
  static GruState zero(const GruNetwork& net);
};

struct NetworkOutput {
  std::vector<Quaternion> quats;
  GruState final_state;
};

// Runs the network over a sequence of samples. dts may be empty when the
// network is not time-aware. Throws DegenerateOutputError when the head
// output norm falls below 1e-12 at any step.
NetworkOutput network_forward(const GruNetwork& net, const Mat3X& gyr, const Mat3X& acc,
                              const Eigen::VectorXd& dts, const GruState* initial = nullptr);

// All tensors filled from U(-1/sqrt(H), 1/sqrt(H)) in a fixed order; the
// standardization is the identity until training fits it.
GruNetwork random_network(Eigen::Index hidden, bool time_aware, bool grouped_input,
                          std::optional<double> native_rate_hz, Rng& rng);

// JSON weight files; save -> load -> save is byte-identical. Load failures
// name the offending field or tensor.
void save_weights(const GruNetwork& net, const std::filesystem::path& path);
GruNetwork load_weights(const std::filesystem::path& path);

// The same serialization as an in-memory string (used by checkpoints).
std::string weights_to_string(const GruNetwork& net);
GruNetwork weights_from_string(const std::string& text, const std::string& context);

}  // namespace attkit
