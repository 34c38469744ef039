#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attkit/augment.hpp"
#include "attkit/gru.hpp"
#include "attkit/metrics.hpp"
#include "attkit/sequence.hpp"

namespace attkit {

using Mat4X = Eigen::Matrix<double, Eigen::Dynamic, 4>;

// Mean squared attitude-error angle (rad^2) over unmasked samples. pred rows
// are raw head outputs [w, x, y, z], normalized here, so the gradient matches
// what the head produces. The acos argument is clamped at 1 - clamp_eps,
// which caps the otherwise unbounded gradient near zero error (the metric
// itself stays unclamped elsewhere). count == 0 signals an all-masked window
// that must be skipped.
struct LossResult {
  double value = 0.0;
  Eigen::Index count = 0;
};

LossResult loss_mse_att(const Mat4X& pred, const std::vector<Quaternion>& truth,
                        const std::vector<std::uint8_t>& mask, double clamp_eps);

// Analytic gradient of loss_mse_att with respect to the raw predictions;
// masked rows are zero. No gradient flows through the truth.
Mat4X loss_gradient(const Mat4X& pred, const std::vector<Quaternion>& truth,
                    const std::vector<std::uint8_t>& mask, double clamp_eps);

// Window start offsets: 0, stride, ... while offset + len <= n; when not even
// one full window fits, a single truncated window at 0.
std::vector<Eigen::Index> window_offsets(Eigen::Index n, Eigen::Index len, Eigen::Index stride);

// Loss and parameter gradient of one window processed in a single pass from
// a zero initial state: backpropagation through every step, mean taken over
// the unmasked samples. grads has the network's shapes; count == 0 leaves it
// zero. diverged flags a non-finite or vanishing head output.
struct WindowGradient {
  double loss = 0.0;
  Eigen::Index count = 0;
  GruNetwork grads;
  bool diverged = false;
};

WindowGradient window_gradient(const GruNetwork& net, const Mat3X& gyr, const Mat3X& acc,
                               const Eigen::VectorXd& dts, const std::vector<Quaternion>& truth,
                               const std::vector<std::uint8_t>& mask, double clamp_eps);

// Cosine annealing from max_lr at progress 0 toward 0 at progress 1.
double cosine_lr(double max_lr, double progress);

struct TrainConfig {
  int epochs = 40;
  Eigen::Index window_len = 400;
  Eigen::Index window_stride = 200;
  int batch_size = 16;
  Eigen::Index tbptt_chunk = 100;
  double max_lr = 2e-3;
  double grad_clip = 1.0;   // global L2 norm across all tensors
  double clamp_eps = 1e-7;
  std::uint64_t seed = 0;

  bool rotation_augment = true;
  ErrorAugmentConfig error_augment;  // all zeros disables it

  // Time-aware training resamples every sequence to each of these rates
  // before windowing (empty: native rates only). Ignored otherwise.
  std::vector<double> rate_grid;

  // Validation runs each sequence clean and once more with a constant gyro
  // bias drawn from N(0, val_bias_std^2) per axis.
  double val_bias_std = 0.5 * kDegToRad;

  int threads = 1;  // batch parallelism; results do not depend on it

  std::string checkpoint_path;  // write a checkpoint after every epoch
  std::string resume_from;      // continue from a checkpoint file
  bool verbose = false;         // one progress line per epoch on stderr

  // Staged runs: stop (with a checkpoint) after this many epochs in one
  // invocation while the schedule still spans cfg.epochs. 0 = no limit.
  int epochs_per_run = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;    // mean rad^2 per epoch
  std::vector<double> val_rmse_deg;  // per epoch
  std::vector<double> lr;            // at the first step of each epoch
};

struct TrainResult {
  GruNetwork net;
  TrainHistory history;
};

// Trains net on train_seqs with truncated backpropagation through time:
// hidden states carry across chunk boundaries, gradients do not. One Adam
// step per chunk, gradients averaged over every unmasked sample in the
// batch chunk, clipped, learning rate cosine-annealed per step. Standardization
// is fit on the (expanded) training set before the first step. Aborts with a
// descriptive error when the loss turns non-finite.
TrainResult train(GruNetwork net, const std::vector<ImuSequence>& train_seqs,
                  const std::vector<ImuSequence>& val_seqs, const TrainConfig& cfg);

}  // namespace attkit
