#include "attkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "attkit/parallel.hpp"
#include "attkit/resample.hpp"

namespace attkit {

namespace {

// ---- loss ------------------------------------------------------------

// Squared attitude-error angle of one raw prediction y against unit truth t,
// plus the gradient with respect to y. With p = y/|y| and q_err = t*conj(p),
// the error is 2*acos(sqrt(we^2 + ze^2)) where we and ze are linear in p.
double sample_loss(const Eigen::Vector4d& y, const Quaternion& t, double clamp_eps,
                   Eigen::Vector4d* dy) {
  const double yn = y.norm();
  if (!(yn > 0.0)) throw std::invalid_argument("loss: zero or non-finite prediction");
  const Eigen::Vector4d p = y / yn;
  const Eigen::Vector4d cw(t.w, t.x, t.y, t.z);
  const Eigen::Vector4d cz(t.z, t.y, -t.x, -t.w);
  const double we = cw.dot(p);
  const double ze = cz.dot(p);
  const double a = std::sqrt(we * we + ze * ze);
  const double ac = std::min(a, 1.0 - clamp_eps);
  const double e = 2.0 * std::acos(ac);
  if (dy) {
    dy->setZero();
    // no gradient when the clamp is active (error below the guard band) or
    // at the exact a == 0 cusp
    if (a < 1.0 - clamp_eps && a > 0.0) {
      const double de_da = -4.0 * e / std::sqrt(1.0 - ac * ac);  // d(e^2)/da
      const Eigen::Vector4d dp = de_da * ((we / a) * cw + (ze / a) * cz);
      *dy = (dp - p * p.dot(dp)) / yn;
    }
  }
  return e * e;
}

void check_loss_args(Eigen::Index n, const std::vector<Quaternion>& truth,
                     const std::vector<std::uint8_t>& mask, double clamp_eps) {
  if (static_cast<Eigen::Index>(truth.size()) != n)
    throw std::invalid_argument("loss: truth length mismatch");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("loss: mask length mismatch");
  if (!(clamp_eps > 0.0 && clamp_eps < 1e-3))
    throw std::invalid_argument("loss: clamp_eps out of range");
}

}  // namespace

LossResult loss_mse_att(const Mat4X& pred, const std::vector<Quaternion>& truth,
                        const std::vector<std::uint8_t>& mask, double clamp_eps) {
  check_loss_args(pred.rows(), truth, mask, clamp_eps);
  LossResult r;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    sum += sample_loss(pred.row(i).transpose(), truth[i], clamp_eps, nullptr);
    ++r.count;
  }
  r.value = r.count ? sum / static_cast<double>(r.count) : 0.0;
  return r;
}

Mat4X loss_gradient(const Mat4X& pred, const std::vector<Quaternion>& truth,
                    const std::vector<std::uint8_t>& mask, double clamp_eps) {
  check_loss_args(pred.rows(), truth, mask, clamp_eps);
  Mat4X g = Mat4X::Zero(pred.rows(), 4);
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    if (mask.empty() || mask[i]) ++count;
  if (count == 0) return g;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    Eigen::Vector4d dy;
    sample_loss(pred.row(i).transpose(), truth[i], clamp_eps, &dy);
    g.row(i) = dy.transpose() / static_cast<double>(count);
  }
  return g;
}

std::vector<Eigen::Index> window_offsets(Eigen::Index n, Eigen::Index len, Eigen::Index stride) {
  if (n < 1 || len < 1 || stride < 1) throw std::invalid_argument("window_offsets: bad arguments");
  std::vector<Eigen::Index> out;
  for (Eigen::Index off = 0; off + len <= n; off += stride) out.push_back(off);
  if (out.empty()) out.push_back(0);  // sequence shorter than one window
  return out;
}

double cosine_lr(double max_lr, double progress) {
  if (!(max_lr > 0.0)) throw std::invalid_argument("cosine_lr: max_lr must be positive");
  progress = std::clamp(progress, 0.0, 1.0);
  return max_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

// ---- parameter plumbing ------------------------------------------------

// Every trainable tensor as a flat view, in a fixed order shared by the
// gradient/moment clones and the checkpoint format.
std::vector<Eigen::Map<Eigen::VectorXd>> flat_views(GruNetwork& net) {
  std::vector<Eigen::Map<Eigen::VectorXd>> v;
  auto add = [&](auto& m) { v.emplace_back(m.data(), m.size()); };
  auto add_layer = [&](GruLayerWeights& w) {
    add(w.input_kernel);
    add(w.recurrent_kernel);
    add(w.input_bias);
    add(w.recurrent_bias);
  };
  if (net.grouped_input) {
    add_layer(net.layer0_gyr);
    add_layer(net.layer0_acc);
  } else {
    add_layer(net.layer0);
  }
  add_layer(net.layer1);
  add(net.head);
  return v;
}

GruNetwork zero_like(const GruNetwork& net) {
  GruNetwork z = net;
  for (auto& t : flat_views(z)) t.setZero();
  return z;
}

struct Adam {
  GruNetwork m, v;
  long step = 0;
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;
};

void adam_step(GruNetwork& net, GruNetwork& grads, Adam& adam, double lr) {
  ++adam.step;
  const double bc1 = 1.0 - std::pow(Adam::beta1, adam.step);
  const double bc2 = 1.0 - std::pow(Adam::beta2, adam.step);
  auto p = flat_views(net);
  auto g = flat_views(grads);
  auto m = flat_views(adam.m);
  auto v = flat_views(adam.v);
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = Adam::beta1 * m[i] + (1.0 - Adam::beta1) * g[i];
    v[i] = Adam::beta2 * v[i].array().matrix() + (1.0 - Adam::beta2) * g[i].cwiseAbs2();
    p[i].array() -= lr * (m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + Adam::eps);
  }
}

double global_grad_norm(GruNetwork& grads) {
  double sq = 0.0;
  for (auto& t : flat_views(grads)) sq += t.squaredNorm();
  return std::sqrt(sq);
}

// ---- windows and batches -------------------------------------------------

struct WindowRef {
  const ImuSequence* seq;
  Eigen::Index offset;
  Eigen::Index len;
};

struct BatchItem {
  Mat3X gyr, acc;
  Eigen::VectorXd dts;
  std::vector<Quaternion> truth;
  std::vector<std::uint8_t> mask;
  GruState state;
  std::string id;
  Eigen::Index len = 0;
};

ImuSequence slice_window(const ImuSequence& seq, Eigen::Index off, Eigen::Index len) {
  ImuSequence w;
  w.t = seq.t.segment(off, len);
  w.gyr = seq.gyr.middleRows(off, len);
  w.acc = seq.acc.middleRows(off, len);
  w.truth.assign(seq.truth.begin() + off, seq.truth.begin() + off + len);
  if (seq.valid.empty())
    w.valid.assign(len, 1);
  else
    w.valid.assign(seq.valid.begin() + off, seq.valid.begin() + off + len);
  w.rate_hz = seq.rate_hz;
  w.name = seq.name;
  w.dataset = seq.dataset;
  return w;
}

// Augmentation draws happen here, in item order: rotation quaternion first,
// then the error-augmentation draws. The batch rng is never touched from
// worker threads, so thread count cannot change the stream.
BatchItem materialize(const GruNetwork& net, const WindowRef& ref, const TrainConfig& cfg,
                      Rng& rng) {
  BatchItem item;
  item.id = ref.seq->name + "@" + std::to_string(ref.offset);
  item.len = ref.len;

  ImuSequence w = slice_window(*ref.seq, ref.offset, ref.len);
  item.dts.resize(ref.len);
  for (Eigen::Index i = 0; i < ref.len; ++i) item.dts[i] = ref.seq->dt_at(ref.offset + i);

  if (cfg.rotation_augment) w = virtual_rotation(w, rng.unit_quaternion());
  const auto& ea = cfg.error_augment;
  if (ea.gyr_noise_std_max > 0.0 || ea.acc_noise_std_max > 0.0 || ea.gyr_bias_std > 0.0)
    w = error_augment(w, ea, rng);

  item.gyr = std::move(w.gyr);
  item.acc = std::move(w.acc);
  item.truth = std::move(w.truth);
  item.mask = std::move(w.valid);
  item.state = GruState::zero(net);
  return item;
}

// ---- one TBPTT chunk: forward with tape, loss, backward -------------------

struct StepTape {
  Eigen::VectorXd x0, x0b;
  Eigen::VectorXd h0_prev, h0b_prev, h1_prev;
  Eigen::VectorXd h0_out, h0b_out, h1_out;
  Eigen::VectorXd h1_in;
  GruCellCache c0, c0b, c1;
  Eigen::Vector4d dy = Eigen::Vector4d::Zero();
};

struct ChunkWork {
  GruNetwork grads;
  double loss_sum = 0.0;
  Eigen::Index count = 0;
  bool diverged = false;
};

void gru_cell_backward(const GruLayerWeights& w, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& h_prev, const GruCellCache& c,
                       const Eigen::VectorXd& dh_out, GruLayerWeights& grad, Eigen::VectorXd& dx,
                       Eigen::VectorXd& dh_prev) {
  const auto r = c.r.array();
  const auto z = c.z.array();
  const auto n = c.n.array();
  const auto dh = dh_out.array();

  const Eigen::ArrayXd dn = dh * (1.0 - z);
  const Eigen::ArrayXd dz = dh * (h_prev.array() - n);
  const Eigen::ArrayXd dan = dn * (1.0 - n * n);
  const Eigen::ArrayXd drec = dan * r;  // toward Un h + bun
  const Eigen::ArrayXd dar = (dan * c.rec_n.array()) * r * (1.0 - r);
  const Eigen::ArrayXd daz = dz * z * (1.0 - z);

  const Eigen::Index H = w.hidden_size();
  Eigen::VectorXd da(3 * H), db(3 * H);
  da << dar.matrix(), daz.matrix(), dan.matrix();
  db << dar.matrix(), daz.matrix(), drec.matrix();

  grad.input_kernel.noalias() += da * x.transpose();
  grad.input_bias += da;
  grad.recurrent_kernel.noalias() += db * h_prev.transpose();
  grad.recurrent_bias += db;
  dx.noalias() = w.input_kernel.transpose() * da;
  dh_prev = w.recurrent_kernel.transpose() * db;
  dh_prev.array() += dh * z;
}

// Gradients of the summed (not averaged) chunk loss; the caller rescales.
// Hidden state carries out of the chunk, gradients do not flow in.
void process_chunk(const GruNetwork& net, BatchItem& item, Eigen::Index c0, Eigen::Index c1,
                   double clamp_eps, ChunkWork& work) {
  if (c0 >= item.len) return;
  c1 = std::min(c1, item.len);
  const Eigen::Index steps = c1 - c0;
  const bool grouped = net.grouped_input;
  std::vector<StepTape> tape(steps);

  GruState& s = item.state;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Eigen::Index i = c0 + k;
    StepTape& tp = tape[k];
    const Vec3 g = item.gyr.row(i).transpose();
    const Vec3 a = item.acc.row(i).transpose();
    const double dt = item.dts[i];
    tp.h1_prev = s.h.back();
    if (grouped) {
      tp.x0 = net.assemble_input_group(false, g, dt);
      tp.x0b = net.assemble_input_group(true, a, dt);
      tp.h0_prev = s.h[0];
      tp.h0b_prev = s.h[1];
      tp.h0_out = gru_cell_forward(net.layer0_gyr, tp.x0, tp.h0_prev, &tp.c0);
      tp.h0b_out = gru_cell_forward(net.layer0_acc, tp.x0b, tp.h0b_prev, &tp.c0b);
      tp.h1_in.resize(net.hidden_size());
      tp.h1_in << tp.h0_out, tp.h0b_out;
      s.h[0] = tp.h0_out;
      s.h[1] = tp.h0b_out;
    } else {
      tp.x0 = net.assemble_input(g, a, dt);
      tp.h0_prev = s.h[0];
      tp.h0_out = gru_cell_forward(net.layer0, tp.x0, tp.h0_prev, &tp.c0);
      tp.h1_in = tp.h0_out;
      s.h[0] = tp.h0_out;
    }
    tp.h1_out = gru_cell_forward(net.layer1, tp.h1_in, tp.h1_prev, &tp.c1);
    s.h.back() = tp.h1_out;

    if (item.mask.empty() || item.mask[i]) {
      const Eigen::Vector4d y = net.head * tp.h1_out;
      if (!y.allFinite() || !(y.norm() > 1e-12)) {
        work.diverged = true;
        return;
      }
      work.loss_sum += sample_loss(y, item.truth[i], clamp_eps, &tp.dy);
      ++work.count;
    }
  }

  const Eigen::Index H = net.hidden_size();
  Eigen::VectorXd dh1 = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dh0 = Eigen::VectorXd::Zero(grouped ? H / 2 : H);
  Eigen::VectorXd dh0b = Eigen::VectorXd::Zero(grouped ? H / 2 : 0);
  Eigen::VectorXd dx1, dh1p, dx0, dh0p;
  for (Eigen::Index k = steps - 1; k >= 0; --k) {
    StepTape& tp = tape[k];
    work.grads.head.noalias() += tp.dy * tp.h1_out.transpose();
    dh1.noalias() += net.head.transpose() * tp.dy;
    gru_cell_backward(net.layer1, tp.h1_in, tp.h1_prev, tp.c1, dh1, work.grads.layer1, dx1, dh1p);
    dh1 = dh1p;
    if (grouped) {
      dh0 += dx1.head(H / 2);
      dh0b += dx1.tail(H / 2);
      gru_cell_backward(net.layer0_gyr, tp.x0, tp.h0_prev, tp.c0, dh0, work.grads.layer0_gyr, dx0,
                        dh0p);
      dh0 = dh0p;
      gru_cell_backward(net.layer0_acc, tp.x0b, tp.h0b_prev, tp.c0b, dh0b, work.grads.layer0_acc,
                        dx0, dh0p);
      dh0b = dh0p;
    } else {
      dh0 += dx1;
      gru_cell_backward(net.layer0, tp.x0, tp.h0_prev, tp.c0, dh0, work.grads.layer0, dx0, dh0p);
      dh0 = dh0p;
    }
  }
}

}  // namespace

WindowGradient window_gradient(const GruNetwork& net, const Mat3X& gyr, const Mat3X& acc,
                               const Eigen::VectorXd& dts, const std::vector<Quaternion>& truth,
                               const std::vector<std::uint8_t>& mask, double clamp_eps) {
  net.validate();
  const Eigen::Index n = gyr.rows();
  if (acc.rows() != n || dts.size() != n || static_cast<Eigen::Index>(truth.size()) != n)
    throw std::invalid_argument("window_gradient: length mismatch");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("window_gradient: mask length mismatch");

  BatchItem item;
  item.id = "window@0";
  item.len = n;
  item.gyr = gyr;
  item.acc = acc;
  item.truth = truth;
  item.mask = mask;
  item.dts = dts;
  item.state = GruState::zero(net);

  ChunkWork work;
  work.grads = zero_like(net);
  process_chunk(net, item, 0, n, clamp_eps, work);

  WindowGradient out;
  out.grads = std::move(work.grads);
  out.diverged = work.diverged;
  out.count = work.count;
  if (work.count > 0 && !work.diverged) {
    out.loss = work.loss_sum / static_cast<double>(work.count);
    for (auto& t : flat_views(out.grads)) t /= static_cast<double>(work.count);
  } else {
    for (auto& t : flat_views(out.grads)) t.setZero();
  }
  return out;
}

namespace {

// ---- data preparation ------------------------------------------------

std::vector<ImuSequence> prepare_pool(const GruNetwork& net,
                                      const std::vector<ImuSequence>& seqs,
                                      const std::vector<double>& grid, const char* role) {
  std::vector<ImuSequence> pool;
  for (const auto& s : seqs) {
    s.validate();
    if (!s.has_truth())
      throw std::invalid_argument(std::string("train: ") + role + " sequence '" + s.name +
                                  "' has no truth");
    if (net.time_aware) {
      if (grid.empty()) {
        pool.push_back(s);
      } else {
        for (double r : grid) pool.push_back(resample_sequence(s, r));
      }
    } else {
      const double native = *net.native_rate_hz;
      if (std::abs(s.rate_hz - native) > 1e-3 * native)
        pool.push_back(resample_sequence(s, native));
      else
        pool.push_back(s);
    }
  }
  return pool;
}

// ---- checkpoints -------------------------------------------------------

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

void save_checkpoint(const std::string& path, const GruNetwork& net, Adam& adam,
                     const TrainHistory& hist, int epoch_next, const std::string& rng_state) {
  ordered_json j;
  j["format"] = "gru-attitude-checkpoint";
  j["version"] = 1;
  j["epoch_next"] = epoch_next;
  j["adam_step"] = adam.step;
  j["rng"] = rng_state;
  j["history"] = {{"train_loss", hist.train_loss},
                  {"val_rmse_deg", hist.val_rmse_deg},
                  {"lr", hist.lr}};
  j["net"] = weights_to_string(net);
  auto dump_moments = [](GruNetwork& g) {
    ordered_json arr = ordered_json::array();
    for (auto& t : flat_views(g)) {
      ordered_json flat = ordered_json::array();
      for (Eigen::Index i = 0; i < t.size(); ++i) flat.push_back(t[i]);
      arr.push_back(std::move(flat));
    }
    return arr;
  };
  j["adam_m"] = dump_moments(adam.m);
  j["adam_v"] = dump_moments(adam.v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("checkpoint: write to " + path + " failed");
}

void load_checkpoint(const std::string& path, GruNetwork& net, Adam& adam, TrainHistory& hist,
                     int& epoch_next, std::string& rng_state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != "gru-attitude-checkpoint")
    throw std::runtime_error("checkpoint: " + path + ": unrecognized format");
  net = weights_from_string(j.at("net").get<std::string>(), path);
  epoch_next = j.at("epoch_next").get<int>();
  adam.step = j.at("adam_step").get<long>();
  rng_state = j.at("rng").get<std::string>();
  hist.train_loss = j.at("history").at("train_loss").get<std::vector<double>>();
  hist.val_rmse_deg = j.at("history").at("val_rmse_deg").get<std::vector<double>>();
  hist.lr = j.at("history").at("lr").get<std::vector<double>>();
  adam.m = zero_like(net);
  adam.v = zero_like(net);
  auto load_moments = [&](const json& arr, GruNetwork& g, const char* name) {
    auto views = flat_views(g);
    if (arr.size() != views.size())
      throw std::runtime_error(std::string("checkpoint: ") + name + " tensor count mismatch");
    for (size_t i = 0; i < views.size(); ++i) {
      if (static_cast<Eigen::Index>(arr[i].size()) != views[i].size())
        throw std::runtime_error(std::string("checkpoint: ") + name + " tensor size mismatch");
      for (Eigen::Index k = 0; k < views[i].size(); ++k) views[i][k] = arr[i][k].get<double>();
    }
  };
  load_moments(j.at("adam_m"), adam.m, "adam_m");
  load_moments(j.at("adam_v"), adam.v, "adam_v");
}

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be positive");
  if (cfg.window_len < 2) throw std::invalid_argument("train: window_len must be at least 2");
  if (cfg.window_stride < 1) throw std::invalid_argument("train: window_stride must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
  if (cfg.tbptt_chunk < 1) throw std::invalid_argument("train: tbptt_chunk must be positive");
  if (!(cfg.max_lr > 0.0)) throw std::invalid_argument("train: max_lr must be positive");
  if (!(cfg.grad_clip > 0.0)) throw std::invalid_argument("train: grad_clip must be positive");
  if (!(cfg.clamp_eps > 0.0 && cfg.clamp_eps < 1e-3))
    throw std::invalid_argument("train: clamp_eps out of range");
  if (cfg.threads < 1) throw std::invalid_argument("train: threads must be positive");
  if (cfg.epochs_per_run < 0) throw std::invalid_argument("train: epochs_per_run negative");
  if (cfg.val_bias_std < 0.0) throw std::invalid_argument("train: val_bias_std negative");
  for (double r : cfg.rate_grid)
    if (!(r > 0.0)) throw std::invalid_argument("train: rate grid entries must be positive");
}

}  // namespace

TrainResult train(GruNetwork net, const std::vector<ImuSequence>& train_seqs,
                  const std::vector<ImuSequence>& val_seqs, const TrainConfig& cfg) {
  check_config(cfg);
  net.validate();
  if (train_seqs.empty()) throw std::invalid_argument("train: no training sequences");

  Adam adam;
  TrainHistory hist;
  int epoch_start = 0;
  Rng rng(cfg.seed);
  if (!cfg.resume_from.empty()) {
    std::string rng_state;
    load_checkpoint(cfg.resume_from, net, adam, hist, epoch_start, rng_state);
    std::istringstream is(rng_state);
    is >> rng.engine();
    if (!is) throw std::runtime_error("checkpoint: bad rng state");
  } else {
    adam.m = zero_like(net);
    adam.v = zero_like(net);
  }

  const std::vector<ImuSequence> pool = prepare_pool(net, train_seqs, cfg.rate_grid, "training");
  std::vector<ImuSequence> val = prepare_pool(net, val_seqs, {}, "validation");

  // fixed per-sequence validation bias, so epochs stay comparable
  {
    Rng val_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    const size_t n_val = val.size();
    for (size_t i = 0; i < n_val; ++i) {
      ImuSequence biased = val[i];
      const Vec3 bias = val_rng.normal_vec3(cfg.val_bias_std);
      for (Eigen::Index k = 0; k < biased.size(); ++k)
        biased.gyr.row(k) += bias.transpose();
      biased.name += "+bias";
      val.push_back(std::move(biased));
    }
  }

  if (cfg.resume_from.empty()) net.standardization = standardize_fit(pool);

  std::vector<WindowRef> windows;
  for (const auto& s : pool)
    for (Eigen::Index off : window_offsets(s.size(), cfg.window_len, cfg.window_stride))
      windows.push_back({&s, off, std::min(cfg.window_len, s.size() - off)});
  const auto n_win = static_cast<Eigen::Index>(windows.size());

  for (int epoch = epoch_start; epoch < cfg.epochs; ++epoch) {
    // deterministic shuffle (Fisher-Yates on the training rng)
    std::vector<Eigen::Index> order(n_win);
    for (Eigen::Index i = 0; i < n_win; ++i) order[i] = i;
    for (Eigen::Index i = n_win - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.raw() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }

    std::vector<std::pair<Eigen::Index, Eigen::Index>> batches;  // [begin, end) into order
    for (Eigen::Index b = 0; b < n_win; b += cfg.batch_size)
      batches.emplace_back(b, std::min<Eigen::Index>(b + cfg.batch_size, n_win));

    Eigen::Index steps_in_epoch = 0;
    for (auto [b0, b1] : batches) {
      Eigen::Index longest = 0;
      for (Eigen::Index i = b0; i < b1; ++i)
        longest = std::max(longest, windows[order[i]].len);
      steps_in_epoch += (longest + cfg.tbptt_chunk - 1) / cfg.tbptt_chunk;
    }

    hist.lr.push_back(cosine_lr(cfg.max_lr, static_cast<double>(epoch) / cfg.epochs));

    double epoch_loss_sum = 0.0;
    Eigen::Index epoch_count = 0;
    Eigen::Index step_in_epoch = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto [b0, b1] = batches[bi];
      std::vector<BatchItem> items;
      items.reserve(b1 - b0);
      for (Eigen::Index i = b0; i < b1; ++i)
        items.push_back(materialize(net, windows[order[i]], cfg, rng));

      Eigen::Index longest = 0;
      for (const auto& it : items) longest = std::max(longest, it.len);

      for (Eigen::Index c0 = 0; c0 < longest; c0 += cfg.tbptt_chunk) {
        const Eigen::Index c1 = c0 + cfg.tbptt_chunk;
        std::vector<ChunkWork> work(items.size());
        for (auto& w : work) w.grads = zero_like(net);
        parallel_for(static_cast<Eigen::Index>(items.size()), cfg.threads, [&](Eigen::Index i) {
          process_chunk(net, items[i], c0, c1, cfg.clamp_eps, work[i]);
        });

        GruNetwork total = zero_like(net);
        auto tviews = flat_views(total);
        double loss_sum = 0.0;
        Eigen::Index count = 0;
        bool diverged = false;
        for (auto& w : work) {  // fixed merge order keeps results thread-count independent
          auto gviews = flat_views(w.grads);
          for (size_t ti = 0; ti < tviews.size(); ++ti) tviews[ti] += gviews[ti];
          loss_sum += w.loss_sum;
          count += w.count;
          diverged = diverged || w.diverged;
        }
        const double chunk_loss = count ? loss_sum / static_cast<double>(count) : 0.0;
        if (diverged || !std::isfinite(chunk_loss))
          throw std::runtime_error(
              "train: loss diverged at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(bi) + ", chunk " + std::to_string(c0 / cfg.tbptt_chunk) +
              " (first window " + items.front().id + ")");

        const double lr = cosine_lr(
            cfg.max_lr, (epoch + static_cast<double>(step_in_epoch) / steps_in_epoch) / cfg.epochs);
        ++step_in_epoch;
        if (count > 0) {
          for (auto& t : tviews) t /= static_cast<double>(count);
          const double norm = global_grad_norm(total);
          if (norm > cfg.grad_clip) {
            const double scale = cfg.grad_clip / norm;
            for (auto& t : tviews) t *= scale;
          }
          adam_step(net, total, adam, lr);
        }
        epoch_loss_sum += loss_sum;
        epoch_count += count;
      }
    }
    hist.train_loss.push_back(epoch_count ? epoch_loss_sum / static_cast<double>(epoch_count)
                                          : 0.0);

    std::vector<double> val_scores;
    for (const auto& v : val) {
      try {
        const NetworkOutput out = network_forward(net, v.gyr, v.acc, sample_dts(v));
        val_scores.push_back(rmse_deg(out.quats, v.truth, v.valid));
      } catch (const std::exception& e) {
        throw std::runtime_error("train: validation on '" + v.name + "' failed at epoch " +
                                 std::to_string(epoch) + ": " + e.what());
      }
    }
    hist.val_rmse_deg.push_back(val_scores.empty() ? 0.0 : mean_of(std::move(val_scores)));

    if (cfg.verbose) {
      std::fprintf(stderr, "epoch %d/%d  loss=%.6g  val_rmse_deg=%.4g  lr=%.4g\n", epoch + 1,
                   cfg.epochs, hist.train_loss.back(), hist.val_rmse_deg.back(), hist.lr.back());
    }

    if (!cfg.checkpoint_path.empty()) {
      std::ostringstream os;
      os << rng.engine();
      save_checkpoint(cfg.checkpoint_path, net, adam, hist, epoch + 1, os.str());
    }

    if (cfg.epochs_per_run > 0 && epoch + 1 - epoch_start >= cfg.epochs_per_run) break;
  }

  return {std::move(net), std::move(hist)};
}

}  // namespace attkit
