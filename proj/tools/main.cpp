// attkit command line front end.
//
// Subcommands cover the full pipeline: simulate -> augment/resample ->
// run-filter/tune/train/infer -> evaluate/sweep.  Exit codes: 0 on success,
// 1 for usage errors, 2 for runtime failures.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attkit/augment.hpp"
#include "attkit/dataset.hpp"
#include "attkit/eval.hpp"
#include "attkit/filters.hpp"
#include "attkit/gru.hpp"
#include "attkit/metrics.hpp"
#include "attkit/resample.hpp"
#include "attkit/rng.hpp"
#include "attkit/sim.hpp"
#include "attkit/train.hpp"

using nlohmann::json;
using namespace attkit;

namespace {

ProfileKind profile_from_string(const std::string& s) {
  if (s == "rest") return ProfileKind::rest;
  if (s == "constant_rate") return ProfileKind::constant_rate;
  if (s == "sinusoidal") return ProfileKind::sinusoidal_multi_axis;
  if (s == "random_smooth") return ProfileKind::random_smooth;
  throw CLI::ValidationError("--profile", "unknown profile '" + s + "'");
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 1 || lo <= 0.0 || hi < lo)
    throw std::runtime_error("tune: grid needs count >= 1 and 0 < min <= max");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (count - 1));
  return out;
}

Quaternion parse_quat(const std::string& s) {
  std::array<double, 4> v{};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t used = 0;
    v[static_cast<std::size_t>(i)] = std::stod(s.substr(pos), &used);
    pos += used;
    if (i < 3) {
      if (pos >= s.size() || s[pos] != ',')
        throw std::runtime_error("expected 'w,x,y,z', got '" + s + "'");
      ++pos;
    }
  }
  if (pos != s.size()) throw std::runtime_error("trailing characters in quaternion '" + s + "'");
  return normalized(Quaternion{v[0], v[1], v[2], v[3]});
}

std::vector<ImuSequence> load_inputs(const std::vector<std::string>& paths) {
  std::vector<std::filesystem::path> p(paths.begin(), paths.end());
  return load_sequences(p);
}

std::vector<Scenario> parse_scenarios(const std::string& list, double bias_std,
                                      double rest_duration, std::uint64_t seed) {
  std::vector<Scenario> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string::npos) comma = list.size();
    std::string tok = list.substr(start, comma - start);
    if (!tok.empty()) {
      Scenario sc;
      sc.kind = scenario_kind_from_string(tok);
      sc.bias_std = bias_std;
      sc.rest_duration = rest_duration;
      sc.seed = seed;
      out.push_back(sc);
    }
    start = comma + 1;
  }
  if (out.empty()) throw std::runtime_error("no scenarios given");
  return out;
}

TrainConfig train_config_from_json(const json& j, GruNetwork& net, std::uint64_t default_seed) {
  TrainConfig cfg;
  cfg.seed = default_seed;

  int hidden = 16;
  bool time_aware = true;
  bool grouped = false;
  std::optional<double> native;
  if (j.contains("network")) {
    const json& n = j.at("network");
    hidden = n.value("hidden_size", hidden);
    time_aware = n.value("time_aware", time_aware);
    grouped = n.value("grouped_input", grouped);
    if (n.contains("native_rate_hz") && !n.at("native_rate_hz").is_null())
      native = n.at("native_rate_hz").get<double>();
  }

  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.window_len = j.value("window_len", cfg.window_len);
  cfg.window_stride = j.value("window_stride", cfg.window_stride);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.tbptt_chunk = j.value("tbptt_chunk", cfg.tbptt_chunk);
  cfg.max_lr = j.value("max_lr", cfg.max_lr);
  cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
  cfg.clamp_eps = j.value("clamp_eps", cfg.clamp_eps);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.rotation_augment = j.value("rotation_augment", cfg.rotation_augment);
  cfg.val_bias_std = j.value("val_bias_std", cfg.val_bias_std);
  if (j.contains("error_augment")) {
    const json& e = j.at("error_augment");
    cfg.error_augment.gyr_noise_std_max =
        e.value("gyr_noise_std_max", cfg.error_augment.gyr_noise_std_max);
    cfg.error_augment.acc_noise_std_max =
        e.value("acc_noise_std_max", cfg.error_augment.acc_noise_std_max);
    cfg.error_augment.gyr_bias_std = e.value("gyr_bias_std", cfg.error_augment.gyr_bias_std);
  }
  if (j.contains("rate_grid")) {
    const json& g = j.at("rate_grid");
    if (g.is_array()) {
      cfg.rate_grid = g.get<std::vector<double>>();
    } else {
      cfg.rate_grid = rate_grid(rate_grid_kind_from_string(g.at("kind").get<std::string>()),
                                g.at("count").get<int>(), g.at("f_min").get<double>(),
                                g.at("f_max").get<double>());
    }
  }

  if (!time_aware && !native)
    throw std::runtime_error("config: non-time-aware network needs native_rate_hz");
  Rng init_rng(cfg.seed);
  net = random_network(hidden, time_aware, grouped, native, init_rng);
  return cfg;
}

int run(CLI::App& app, int argc, char** argv) {
  // ---- simulate --------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic IMU recording");
  struct {
    std::string profile = "random_smooth";
    double rate = 100.0;
    double duration = 10.0;
    double amplitude = 1.0;
    double band = 1.0;
    double trans_accel = 0.0;
    std::uint64_t seed = 0;
    double gyr_noise = 0.0;
    double acc_noise = 0.0;
    double gyr_bias = 0.0;
    double rest_prefix = 0.0;
    std::string out;
  } so;
  sim->add_option("--profile", so.profile,
                  "rest | constant_rate | sinusoidal | random_smooth")
      ->default_val(so.profile);
  sim->add_option("--rate", so.rate, "sampling rate [Hz]")->default_val(so.rate);
  sim->add_option("--duration", so.duration, "length [s]")->default_val(so.duration);
  sim->add_option("--amplitude", so.amplitude, "angular rate amplitude [rad/s]")
      ->default_val(so.amplitude);
  sim->add_option("--band", so.band, "frequency band [Hz]")->default_val(so.band);
  sim->add_option("--trans-accel", so.trans_accel, "translational accel amplitude [m/s^2]")
      ->default_val(so.trans_accel);
  sim->add_option("--seed", so.seed, "profile seed")->default_val(so.seed);
  sim->add_option("--gyr-noise-std", so.gyr_noise, "gyro noise std [rad/s]");
  sim->add_option("--acc-noise-std", so.acc_noise, "accel noise std [m/s^2]");
  sim->add_option("--gyr-bias-std", so.gyr_bias, "gyro bias std [rad/s]");
  sim->add_option("--rest-prefix", so.rest_prefix, "prepend this many seconds of rest");
  sim->add_option("--out", so.out, "output CSV")->required();
  sim->callback([&] {
    MotionProfile p;
    p.kind = profile_from_string(so.profile);
    p.amplitude = so.amplitude;
    p.frequency_band = so.band;
    p.translation_accel_amplitude = so.trans_accel;
    p.duration = so.duration;
    p.seed = so.seed;
    ImuSequence seq = generate(p, so.rate);
    if (so.rest_prefix > 0.0) seq = prepend_rest(seq, so.rest_prefix);
    if (so.gyr_noise > 0.0 || so.acc_noise > 0.0 || so.gyr_bias > 0.0) {
      ErrorSpec es;
      es.gyr_noise_std = so.gyr_noise;
      es.acc_noise_std = so.acc_noise;
      es.gyr_bias_std = so.gyr_bias;
      es.seed = so.seed + 1;
      seq = inject_errors(seq, es);
    }
    save_sequence(seq, so.out);
    std::printf("wrote %s (%lld samples at %g Hz)\n", so.out.c_str(),
                static_cast<long long>(seq.size()), seq.rate_hz);
  });

  // ---- augment ---------------------------------------------------------
  auto* aug = app.add_subcommand("augment", "Apply rotation and error augmentation to a recording");
  struct {
    std::string input, out;
    std::uint64_t seed = 0;
    bool no_rotation = false;
    double gyr_noise_max = 0.0;
    double acc_noise_max = 0.0;
    double gyr_bias = 0.0;
  } ao;
  aug->add_option("--input", ao.input, "input CSV")->required();
  aug->add_option("--out", ao.out, "output CSV")->required();
  aug->add_option("--seed", ao.seed, "augmentation seed")->default_val(ao.seed);
  aug->add_flag("--no-rotation", ao.no_rotation, "skip the random virtual rotation");
  aug->add_option("--gyr-noise-max", ao.gyr_noise_max, "gyro noise std upper bound [rad/s]");
  aug->add_option("--acc-noise-max", ao.acc_noise_max, "accel noise std upper bound [m/s^2]");
  aug->add_option("--gyr-bias-std", ao.gyr_bias, "gyro bias std [rad/s]");
  aug->callback([&] {
    ImuSequence seq = load_sequence(ao.input);
    Rng rng(ao.seed);
    if (!ao.no_rotation) seq = virtual_rotation(seq, rng.unit_quaternion());
    ErrorAugmentConfig ec;
    ec.gyr_noise_std_max = ao.gyr_noise_max;
    ec.acc_noise_std_max = ao.acc_noise_max;
    ec.gyr_bias_std = ao.gyr_bias;
    seq = error_augment(seq, ec, rng);
    save_sequence(seq, ao.out);
    std::printf("wrote %s\n", ao.out.c_str());
  });

  // ---- resample --------------------------------------------------------
  auto* res = app.add_subcommand("resample", "Resample a recording to a new rate");
  struct {
    std::string input, out;
    double rate = 0.0;
  } ro;
  res->add_option("--input", ro.input, "input CSV")->required();
  res->add_option("--out", ro.out, "output CSV")->required();
  res->add_option("--rate", ro.rate, "target rate [Hz]")->required();
  res->callback([&] {
    ImuSequence seq = load_sequence(ro.input);
    ImuSequence out = resample_sequence(seq, ro.rate);
    save_sequence(out, ro.out);
    std::printf("wrote %s (%lld samples at %g Hz)\n", ro.out.c_str(),
                static_cast<long long>(out.size()), out.rate_hz);
  });

  // ---- run-filter ------------------------------------------------------
  auto* rf = app.add_subcommand("run-filter", "Run a complementary filter over a recording");
  struct {
    std::string input, out, kind = "A", params, q0;
    double gain = -1.0;
    double ki = -1.0;
    bool no_init_accel = false;
  } fo;
  rf->add_option("--input", fo.input, "input CSV")->required();
  rf->add_option("--out", fo.out, "estimate CSV")->required();
  rf->add_option("--kind", fo.kind, "A | B")->default_val(fo.kind);
  rf->add_option("--gain", fo.gain, "proportional gain");
  rf->add_option("--ki", fo.ki, "integral gain (kind B)");
  rf->add_option("--params", fo.params, "JSON params file (flags override)");
  rf->add_flag("--no-init-accel", fo.no_init_accel, "start from identity instead of accel init");
  rf->add_option("--q0", fo.q0, "initial quaternion 'w,x,y,z'");
  rf->callback([&] {
    FilterParams p;
    if (!fo.params.empty()) p = load_filter_params(fo.params);
    if (rf->count("--kind") || fo.params.empty()) {
      if (fo.kind == "A")
        p.kind = FilterKind::A;
      else if (fo.kind == "B")
        p.kind = FilterKind::B;
      else
        throw std::runtime_error("run-filter: --kind must be A or B");
    }
    if (fo.gain >= 0.0) p.gain = fo.gain;
    if (fo.ki >= 0.0) p.ki = fo.ki;
    if (fo.no_init_accel) p.init_from_accel = false;
    ImuSequence seq = load_sequence(fo.input);
    std::optional<Quaternion> q0;
    if (!fo.q0.empty()) q0 = parse_quat(fo.q0);
    std::vector<Quaternion> est = run_filter(p, seq, q0);
    save_estimates(seq.t, est, fo.out);
    std::printf("wrote %s\n", fo.out.c_str());
    if (seq.has_truth())
      std::printf("rmse_deg %.17g\n", rmse_deg(est, seq.truth, seq.valid));
  });

  // ---- tune ------------------------------------------------------------
  auto* tn = app.add_subcommand("tune", "Grid-search filter gains against ground truth");
  struct {
    std::vector<std::string> inputs;
    std::string kind = "A";
    std::string out;
    double gain_min = 1e-3, gain_max = 10.0;
    int gain_count = 25;
    double ki_min = 1e-4, ki_max = 1.0;
    int ki_count = 24;
    bool no_ki_zero = false;
    bool no_init_accel = false;
  } to;
  tn->add_option("--input", to.inputs, "truth-bearing CSVs")->required()->expected(-1);
  tn->add_option("--kind", to.kind, "A | B")->default_val(to.kind);
  tn->add_option("--out", to.out, "params JSON to write")->required();
  tn->add_option("--gain-min", to.gain_min)->default_val(to.gain_min);
  tn->add_option("--gain-max", to.gain_max)->default_val(to.gain_max);
  tn->add_option("--gain-count", to.gain_count)->default_val(to.gain_count);
  tn->add_option("--ki-min", to.ki_min)->default_val(to.ki_min);
  tn->add_option("--ki-max", to.ki_max)->default_val(to.ki_max);
  tn->add_option("--ki-count", to.ki_count)->default_val(to.ki_count);
  tn->add_flag("--no-ki-zero", to.no_ki_zero, "drop ki=0 from the grid");
  tn->add_flag("--no-init-accel", to.no_init_accel, "tune with identity init");
  tn->callback([&] {
    auto seqs = load_inputs(to.inputs);
    FilterKind kind;
    if (to.kind == "A")
      kind = FilterKind::A;
    else if (to.kind == "B")
      kind = FilterKind::B;
    else
      throw std::runtime_error("tune: --kind must be A or B");
    TuningGrid grid;
    grid.gains = log_grid(to.gain_min, to.gain_max, to.gain_count);
    grid.kis.clear();
    if (kind == FilterKind::B) {
      if (!to.no_ki_zero) grid.kis.push_back(0.0);
      auto extra = log_grid(to.ki_min, to.ki_max, to.ki_count);
      grid.kis.insert(grid.kis.end(), extra.begin(), extra.end());
    } else {
      grid.kis.push_back(0.0);
    }
    grid.init_from_accel = !to.no_init_accel;
    FilterParams best = tune_filter(kind, seqs, grid);
    save_filter_params(best, to.out);
    std::vector<double> scores;
    for (const auto& s : seqs) scores.push_back(rmse_deg(run_filter(best, s), s.truth, s.valid));
    std::printf("kind=%s gain=%.17g ki=%.17g mean_rmse_deg=%.17g\n",
                best.kind == FilterKind::A ? "A" : "B", best.gain, best.ki,
                mean_of(std::move(scores)));
  });

  // ---- train -----------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train the recurrent attitude estimator");
  struct {
    std::string config;
    std::vector<std::string> train_in;
    std::vector<std::string> val_in;
    std::string out, checkpoint, resume, history;
    int threads = 0;
    std::uint64_t seed = 0;
    bool quiet = false;
  } tro;
  tr->add_option("--config", tro.config, "training config JSON")->required();
  tr->add_option("--train", tro.train_in, "training CSVs")->required()->expected(-1);
  tr->add_option("--val", tro.val_in, "validation CSVs")->expected(-1);
  tr->add_option("--out", tro.out, "weights JSON to write")->required();
  tr->add_option("--checkpoint", tro.checkpoint, "checkpoint file updated every epoch");
  tr->add_option("--resume", tro.resume, "resume from a checkpoint file");
  tr->add_option("--history", tro.history, "write loss/validation history JSON");
  tr->add_option("--threads", tro.threads, "worker threads (default: config)");
  tr->add_option("--seed", tro.seed, "override the config seed");
  tr->add_flag("--quiet", tro.quiet, "suppress per-epoch progress");
  tr->callback([&] {
    std::ifstream in(tro.config);
    if (!in) throw std::runtime_error("train: cannot open config '" + tro.config + "'");
    json j = json::parse(in);
    GruNetwork net;
    TrainConfig cfg = train_config_from_json(j, net, 0);
    if (tr->count("--seed")) {
      cfg.seed = tro.seed;
      Rng init_rng(cfg.seed);
      net = random_network(net.hidden_size(), net.time_aware, net.grouped_input,
                           net.native_rate_hz, init_rng);
    }
    if (tro.threads > 0) cfg.threads = tro.threads;
    cfg.checkpoint_path = tro.checkpoint;
    cfg.resume_from = tro.resume;
    cfg.verbose = !tro.quiet;
    auto train_seqs = load_inputs(tro.train_in);
    auto val_seqs = load_inputs(tro.val_in);
    TrainResult result = train(net, train_seqs, val_seqs, cfg);
    save_weights(result.net, tro.out);
    if (!tro.history.empty()) {
      json h = {{"train_loss", result.history.train_loss},
                {"val_rmse_deg", result.history.val_rmse_deg},
                {"lr", result.history.lr}};
      std::ofstream hs(tro.history, std::ios::binary);
      if (!hs) throw std::runtime_error("train: cannot write '" + tro.history + "'");
      hs << h.dump(1) << "\n";
    }
    std::printf("wrote %s after %zu epochs, final loss=%.6g val_rmse_deg=%.6g\n", tro.out.c_str(),
                result.history.train_loss.size(),
                result.history.train_loss.empty() ? 0.0 : result.history.train_loss.back(),
                result.history.val_rmse_deg.empty() ? 0.0 : result.history.val_rmse_deg.back());
  });

  // ---- infer -----------------------------------------------------------
  auto* inf = app.add_subcommand("infer", "Run a trained network over a recording");
  struct {
    std::string weights, input, out;
    bool jitr = false;
  } io;
  inf->add_option("--weights", io.weights, "weights JSON")->required();
  inf->add_option("--input", io.input, "input CSV")->required();
  inf->add_option("--out", io.out, "estimate CSV")->required();
  inf->add_flag("--jitr", io.jitr, "resample to the native rate, infer, resample back");
  inf->callback([&] {
    GruNetwork net = load_weights(io.weights);
    ImuSequence seq = load_sequence(io.input);
    NetworkEstimator est(std::move(net), io.jitr);
    std::vector<Quaternion> q = est.run(seq);
    save_estimates(seq.t, q, io.out);
    std::printf("wrote %s\n", io.out.c_str());
    if (seq.has_truth())
      std::printf("rmse_deg %.17g\n", rmse_deg(q, seq.truth, seq.valid));
  });

  // ---- evaluate --------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate", "Score estimators across recordings and scenarios");
  struct {
    std::vector<std::string> inputs;
    std::vector<std::string> estimators;
    std::string scenarios = "restrictive,partially_restrictive,realistic";
    double bias_std = 0.5 * kDegToRad;
    double rest_duration = 5.0;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out, summary, estimates;
    bool deterministic = false;
  } eo;
  ev->add_option("--input", eo.inputs, "recording CSVs")->required()->expected(-1);
  ev->add_option("--estimator", eo.estimators,
                 "estimator spec, repeatable (filterA:gain=0.1 | filterB:params=f.json | "
                 "strapdown:init=accel | net:weights=w.json,jitr=1)");
  ev->add_option("--scenarios", eo.scenarios, "comma list of scenarios")
      ->default_val(eo.scenarios);
  ev->add_option("--bias-std", eo.bias_std, "scenario gyro bias std [rad/s]")
      ->default_val(eo.bias_std);
  ev->add_option("--rest-duration", eo.rest_duration, "required initial rest [s]")
      ->default_val(eo.rest_duration);
  ev->add_option("--seed", eo.seed, "scenario seed")->default_val(eo.seed);
  ev->add_option("--threads", eo.threads, "worker threads")->default_val(eo.threads);
  ev->add_option("--out", eo.out, "per-row report CSV");
  ev->add_option("--summary", eo.summary, "summary text file (default: stdout)");
  ev->add_option("--estimates", eo.estimates, "score a saved estimate CSV instead");
  ev->add_flag("--deterministic", eo.deterministic, "omit the timestamp line in the summary");
  ev->callback([&] {
    if (!eo.estimates.empty()) {
      if (eo.inputs.size() != 1)
        throw std::runtime_error("evaluate: --estimates mode takes exactly one --input");
      ImuSequence seq = load_sequence(eo.inputs[0]);
      EstimateSeries es = load_estimates(eo.estimates);
      if (es.t.size() != seq.t.size())
        throw std::runtime_error("evaluate: estimate length does not match the recording");
      std::printf("rmse_deg %.17g\n", rmse_deg(es.quats, seq.truth, seq.valid));
      return;
    }
    if (eo.estimators.empty())
      throw std::runtime_error("evaluate: give at least one --estimator (or --estimates)");
    auto seqs = load_inputs(eo.inputs);
    std::vector<std::unique_ptr<Estimator>> owned;
    for (const auto& spec : eo.estimators) owned.push_back(make_estimator(spec));
    std::vector<const Estimator*> ests;
    for (const auto& e : owned) ests.push_back(e.get());
    auto scenarios = parse_scenarios(eo.scenarios, eo.bias_std, eo.rest_duration, eo.seed);
    EvalOptions opt;
    opt.threads = eo.threads;
    EvalReport report = evaluate(ests, seqs, scenarios, opt);
    if (!eo.out.empty()) write_report_csv(report, eo.out);
    if (eo.summary.empty()) {
      write_report_summary(report, std::cout, !eo.deterministic);
    } else {
      std::ofstream s(eo.summary, std::ios::binary);
      if (!s) throw std::runtime_error("evaluate: cannot write '" + eo.summary + "'");
      write_report_summary(report, s, !eo.deterministic);
    }
    for (const auto& row : report.rows)
      if (!row.ok)
        std::fprintf(stderr, "evaluate: %s on %s/%s [%s] failed: %s\n", row.estimator.c_str(),
                     row.dataset.c_str(), row.sequence.c_str(), row.scenario.c_str(),
                     row.error.c_str());
  });

  // ---- sweep -----------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "Evaluate one estimator across sampling rates");
  struct {
    std::vector<std::string> inputs;
    std::string estimator;
    std::string rates;
    std::string grid;
    std::string scenario = "restrictive";
    double bias_std = 0.5 * kDegToRad;
    double rest_duration = 5.0;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out, summary;
    bool deterministic = false;
  } wo;
  sw->add_option("--input", wo.inputs, "recording CSVs")->required()->expected(-1);
  sw->add_option("--estimator", wo.estimator, "estimator spec")->required();
  sw->add_option("--rates", wo.rates, "comma list of target rates [Hz]");
  sw->add_option("--grid", wo.grid, "rate grid 'kind,count,f_min,f_max'");
  sw->add_option("--scenario", wo.scenario, "scenario for every run")->default_val(wo.scenario);
  sw->add_option("--bias-std", wo.bias_std, "scenario gyro bias std [rad/s]")
      ->default_val(wo.bias_std);
  sw->add_option("--rest-duration", wo.rest_duration, "required initial rest [s]")
      ->default_val(wo.rest_duration);
  sw->add_option("--seed", wo.seed, "scenario seed")->default_val(wo.seed);
  sw->add_option("--threads", wo.threads, "worker threads")->default_val(wo.threads);
  sw->add_option("--out", wo.out, "per-row report CSV");
  sw->add_option("--summary", wo.summary, "summary text file (default: stdout)");
  sw->add_flag("--deterministic", wo.deterministic, "omit the timestamp line in the summary");
  sw->callback([&] {
    std::vector<double> rates;
    if (!wo.rates.empty()) {
      std::size_t start = 0;
      while (start <= wo.rates.size()) {
        std::size_t comma = wo.rates.find(',', start);
        if (comma == std::string::npos) comma = wo.rates.size();
        std::string tok = wo.rates.substr(start, comma - start);
        if (!tok.empty()) rates.push_back(std::stod(tok));
        start = comma + 1;
      }
    } else if (!wo.grid.empty()) {
      std::vector<std::string> parts;
      std::size_t start = 0;
      while (start <= wo.grid.size()) {
        std::size_t comma = wo.grid.find(',', start);
        if (comma == std::string::npos) comma = wo.grid.size();
        parts.push_back(wo.grid.substr(start, comma - start));
        start = comma + 1;
      }
      if (parts.size() != 4)
        throw std::runtime_error("sweep: --grid wants 'kind,count,f_min,f_max'");
      rates = rate_grid(rate_grid_kind_from_string(parts[0]), std::stoi(parts[1]), std::stod(parts[2]),
                        std::stod(parts[3]));
    } else {
      throw std::runtime_error("sweep: give --rates or --grid");
    }
    auto seqs = load_inputs(wo.inputs);
    auto est = make_estimator(wo.estimator);
    Scenario sc;
    sc.kind = scenario_kind_from_string(wo.scenario);
    sc.bias_std = wo.bias_std;
    sc.rest_duration = wo.rest_duration;
    sc.seed = wo.seed;
    EvalOptions opt;
    opt.threads = wo.threads;
    EvalReport report = frequency_sweep(*est, seqs, rates, sc, opt);
    if (!wo.out.empty()) write_report_csv(report, wo.out);
    if (wo.summary.empty()) {
      write_report_summary(report, std::cout, !wo.deterministic);
    } else {
      std::ofstream s(wo.summary, std::ios::binary);
      if (!s) throw std::runtime_error("sweep: cannot write '" + wo.summary + "'");
      write_report_summary(report, s, !wo.deterministic);
    }
  });

  app.require_subcommand(1);
  app.parse(argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attkit: inertial attitude estimation toolkit"};
  try {
    return run(app, argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
