#include "attkit/eval.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "attkit/dataset.hpp"
#include "attkit/parallel.hpp"
#include "attkit/resample.hpp"
#include "attkit/rng.hpp"
#include "attkit/sim.hpp"

namespace attkit {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

ImuSequence drop_prefix(const ImuSequence& seq, Eigen::Index k) {
  const Eigen::Index n = seq.size();
  if (n - k < 2) throw std::invalid_argument("scenario: removing the rest phase leaves no data");
  ImuSequence out;
  out.t = seq.t.segment(k, n - k);
  out.gyr = seq.gyr.middleRows(k, n - k);
  out.acc = seq.acc.middleRows(k, n - k);
  if (seq.has_truth()) out.truth.assign(seq.truth.begin() + k, seq.truth.end());
  if (!seq.valid.empty()) out.valid.assign(seq.valid.begin() + k, seq.valid.end());
  out.rate_hz = seq.rate_hz;
  out.name = seq.name;
  out.dataset = seq.dataset;
  return out;
}

}  // namespace

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "restrictive") return ScenarioKind::restrictive;
  if (s == "partially_restrictive") return ScenarioKind::partially_restrictive;
  if (s == "realistic") return ScenarioKind::realistic;
  throw std::invalid_argument("unknown scenario: " + s);
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::restrictive: return "restrictive";
    case ScenarioKind::partially_restrictive: return "partially_restrictive";
    case ScenarioKind::realistic: return "realistic";
  }
  return "?";
}

Eigen::Index detect_rest_prefix(const ImuSequence& seq, double threshold, double min_duration) {
  seq.validate();
  Eigen::Index count = 0;
  while (count < seq.size() && seq.gyr.row(count).norm() < threshold) ++count;
  if (static_cast<double>(count) / seq.rate_hz < min_duration) return 0;
  return count;
}

ImuSequence build_scenario(const ImuSequence& seq, const Scenario& sc) {
  seq.validate();
  if (!seq.has_truth()) throw std::invalid_argument("scenario: sequence has no truth");
  if (sc.bias_std < 0.0 || sc.rest_duration < 0.0)
    throw std::invalid_argument("scenario: negative parameter");

  ImuSequence out;
  if (sc.kind == ScenarioKind::realistic) {
    const Eigen::Index rest = detect_rest_prefix(seq);
    out = rest > 0 ? drop_prefix(seq, rest) : seq;
  } else {
    const Eigen::Index rest = detect_rest_prefix(seq);
    const bool enough = static_cast<double>(rest) / seq.rate_hz >= sc.rest_duration;
    out = enough || sc.rest_duration == 0.0 ? seq : prepend_rest(seq, sc.rest_duration);
  }

  if (sc.kind != ScenarioKind::restrictive && sc.bias_std > 0.0) {
    Rng rng(sc.seed ^ fnv1a(seq.dataset + "/" + seq.name));
    const Vec3 bias = rng.normal_vec3(sc.bias_std);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.gyr.row(i) += bias.transpose();
  }
  return out;
}

// ---- estimators ---------------------------------------------------------

std::string FilterEstimator::id() const {
  std::string s = params_.kind == FilterKind::A ? "filterA(gain=" : "filterB(gain=";
  s += format_double(params_.gain);
  if (params_.kind == FilterKind::B) s += ";ki=" + format_double(params_.ki);
  if (!params_.init_from_accel) s += ";init_accel=0";
  return s + ")";
}

std::vector<Quaternion> FilterEstimator::run(const ImuSequence& seq) const {
  return run_filter(params_, seq);
}

std::string StrapdownEstimator::id() const {
  switch (init_) {
    case Init::identity: return "strapdown(init=identity)";
    case Init::accel: return "strapdown(init=accel)";
    case Init::truth: return "strapdown(init=truth)";
  }
  return "strapdown";
}

std::vector<Quaternion> StrapdownEstimator::run(const ImuSequence& seq) const {
  Quaternion q0 = Quaternion::identity();
  if (init_ == Init::accel) {
    q0 = accel_init(seq.acc.row(0).transpose());
  } else if (init_ == Init::truth) {
    if (!seq.has_truth() || (!seq.valid.empty() && !seq.valid[0]))
      throw std::runtime_error("strapdown(init=truth): no truth at the first sample");
    q0 = seq.truth[0];
  }
  return strapdown_gyro(seq, q0);
}

std::string NetworkEstimator::id() const { return jitr_ ? "net+jitr" : "net"; }

std::vector<Quaternion> NetworkEstimator::run(const ImuSequence& seq) const {
  seq.validate();
  if (jitr_) {
    if (!net_.native_rate_hz)
      throw std::runtime_error("net+jitr: weights carry no native rate");
    return jitr_run(
        [this](const ImuSequence& s) {
          return network_forward(net_, s.gyr, s.acc, sample_dts(s)).quats;
        },
        *net_.native_rate_hz, seq);
  }
  if (!net_.time_aware) {
    const double native = *net_.native_rate_hz;
    if (std::abs(seq.rate_hz - native) > 1e-3 * native)
      throw std::runtime_error("net: sequence rate " + format_double(seq.rate_hz) +
                               " Hz does not match the native rate " + format_double(native) +
                               " Hz (wrap with jitr=1)");
  }
  return network_forward(net_, seq.gyr, seq.acc, sample_dts(seq)).quats;
}

namespace {

class LabeledEstimator : public Estimator {
 public:
  LabeledEstimator(std::unique_ptr<Estimator> inner, std::string label)
      : inner_(std::move(inner)), label_(std::move(label)) {}
  std::string id() const override { return label_; }
  std::vector<Quaternion> run(const ImuSequence& seq) const override { return inner_->run(seq); }

 private:
  std::unique_ptr<Estimator> inner_;
  std::string label_;
};

std::map<std::string, std::string> parse_kv(const std::string& s, const std::string& spec) {
  std::map<std::string, std::string> kv;
  size_t start = 0;
  while (start < s.size()) {
    size_t end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    const std::string pair = s.substr(start, end - start);
    const size_t eq = pair.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("estimator spec '" + spec + "': expected key=value, got '" +
                                  pair + "'");
    if (!kv.emplace(pair.substr(0, eq), pair.substr(eq + 1)).second)
      throw std::invalid_argument("estimator spec '" + spec + "': duplicate key '" +
                                  pair.substr(0, eq) + "'");
    start = end + 1;
  }
  return kv;
}

double parse_num(const std::string& v, const std::string& spec) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("estimator spec '" + spec + "': bad number '" + v + "'");
  }
}

}  // namespace

std::unique_ptr<Estimator> make_estimator(const std::string& spec) {
  const size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  auto kv = colon == std::string::npos ? std::map<std::string, std::string>{}
                                       : parse_kv(spec.substr(colon + 1), spec);
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  std::unique_ptr<Estimator> est;

  if (name == "filterA" || name == "filterB") {
    const FilterKind kind = name == "filterA" ? FilterKind::A : FilterKind::B;
    FilterParams p;
    p.kind = kind;
    if (auto file = take("params")) {
      p = load_filter_params(*file);
      if (p.kind != kind)
        throw std::invalid_argument("estimator spec '" + spec + "': params file is for the other filter");
    }
    if (auto v = take("gain")) p.gain = parse_num(*v, spec);
    if (auto v = take("ki")) p.ki = parse_num(*v, spec);
    if (auto v = take("init_accel")) p.init_from_accel = parse_num(*v, spec) != 0.0;
    if (kind == FilterKind::A && p.ki != 0.0)
      throw std::invalid_argument("estimator spec '" + spec + "': filterA has no ki");
    est = std::make_unique<FilterEstimator>(p);
  } else if (name == "strapdown") {
    StrapdownEstimator::Init init = StrapdownEstimator::Init::accel;
    if (auto v = take("init")) {
      if (*v == "identity")
        init = StrapdownEstimator::Init::identity;
      else if (*v == "accel")
        init = StrapdownEstimator::Init::accel;
      else if (*v == "truth")
        init = StrapdownEstimator::Init::truth;
      else
        throw std::invalid_argument("estimator spec '" + spec + "': unknown init '" + *v + "'");
    }
    est = std::make_unique<StrapdownEstimator>(init);
  } else if (name == "net") {
    const auto weights = take("weights");
    if (!weights)
      throw std::invalid_argument("estimator spec '" + spec + "': net needs weights=<file>");
    bool jitr = false;
    if (auto v = take("jitr")) jitr = parse_num(*v, spec) != 0.0;
    est = std::make_unique<NetworkEstimator>(load_weights(*weights), jitr);
  } else {
    throw std::invalid_argument("unknown estimator '" + name + "'");
  }

  if (auto v = take("label")) est = std::make_unique<LabeledEstimator>(std::move(est), *v);
  if (!kv.empty())
    throw std::invalid_argument("estimator spec '" + spec + "': unknown key '" +
                                kv.begin()->first + "'");
  return est;
}

// ---- reports --------------------------------------------------------------

namespace {

EvalRow score_row(const Estimator& est, const ImuSequence& raw, const Scenario& sc) {
  EvalRow row;
  row.estimator = est.id();
  row.dataset = raw.dataset;
  row.sequence = raw.name;
  row.scenario = to_string(sc.kind);
  try {
    const ImuSequence built = build_scenario(raw, sc);
    row.rate_hz = built.rate_hz;
    row.samples = built.size();
    row.rmse = rmse_deg(est.run(built), built.truth, built.valid);
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

void aggregate_rows(EvalReport& report, bool by_rate) {
  std::vector<std::tuple<std::string, std::string, std::string, double>> keys;
  std::map<std::tuple<std::string, std::string, std::string, double>, std::vector<double>> groups;
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    auto key = std::make_tuple(row.estimator, row.dataset, row.scenario,
                               by_rate ? row.rate_hz : 0.0);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) keys.push_back(key);
    it->second.push_back(row.rmse);
  }
  for (const auto& key : keys) {
    const auto& scores = groups[key];
    EvalAggregate a;
    a.estimator = std::get<0>(key);
    a.dataset = std::get<1>(key);
    a.scenario = std::get<2>(key);
    a.rate_hz = std::get<3>(key);
    a.sequences = static_cast<Eigen::Index>(scores.size());
    a.mean = mean_of(scores);
    a.median = median_of(scores);
    a.max = max_of(scores);
    report.aggregates.push_back(std::move(a));
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

EvalReport evaluate(const std::vector<const Estimator*>& estimators,
                    const std::vector<ImuSequence>& sequences,
                    const std::vector<Scenario>& scenarios, const EvalOptions& opts) {
  if (estimators.empty()) throw std::invalid_argument("evaluate: no estimators");
  if (sequences.empty()) throw std::invalid_argument("evaluate: no sequences");
  if (scenarios.empty()) throw std::invalid_argument("evaluate: no scenarios");

  struct Task {
    const Estimator* est;
    const ImuSequence* seq;
    const Scenario* sc;
  };
  std::vector<Task> tasks;
  for (const auto* est : estimators)
    for (const auto& seq : sequences)
      for (const auto& sc : scenarios) tasks.push_back({est, &seq, &sc});

  EvalReport report;
  report.rows.resize(tasks.size());
  parallel_for(static_cast<Eigen::Index>(tasks.size()), opts.threads, [&](Eigen::Index i) {
    report.rows[i] = score_row(*tasks[i].est, *tasks[i].seq, *tasks[i].sc);
  });
  aggregate_rows(report, false);
  return report;
}

EvalReport frequency_sweep(const Estimator& estimator, const std::vector<ImuSequence>& sequences,
                           const std::vector<double>& rates, const Scenario& scenario,
                           const EvalOptions& opts) {
  if (sequences.empty()) throw std::invalid_argument("frequency_sweep: no sequences");
  if (rates.empty()) throw std::invalid_argument("frequency_sweep: no rates");
  for (double r : rates)
    if (!(r > 0.0)) throw std::invalid_argument("frequency_sweep: rates must be positive");

  struct Task {
    double rate;
    const ImuSequence* seq;
  };
  std::vector<Task> tasks;
  for (double r : rates)
    for (const auto& seq : sequences) tasks.push_back({r, &seq});

  EvalReport report;
  report.rows.resize(tasks.size());
  parallel_for(static_cast<Eigen::Index>(tasks.size()), opts.threads, [&](Eigen::Index i) {
    EvalRow row;
    row.estimator = estimator.id();
    row.dataset = tasks[i].seq->dataset;
    row.sequence = tasks[i].seq->name;
    row.scenario = to_string(scenario.kind);
    row.rate_hz = tasks[i].rate;
    try {
      const ImuSequence at_rate = resample_sequence(*tasks[i].seq, tasks[i].rate);
      const ImuSequence built = build_scenario(at_rate, scenario);
      row.samples = built.size();
      row.rmse = rmse_deg(estimator.run(built), built.truth, built.valid);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    report.rows[i] = row;
  });
  aggregate_rows(report, true);
  return report;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::string out = "estimator,dataset,sequence,scenario,rate_hz,samples,rmse_deg,ok,error\n";
  for (const auto& row : report.rows) {
    out += csv_escape(row.estimator) + ',' + csv_escape(row.dataset) + ',' +
           csv_escape(row.sequence) + ',' + row.scenario + ',';
    out += format_double(row.rate_hz);
    out += ',' + std::to_string(row.samples) + ',';
    if (row.ok) out += format_double(row.rmse);
    out += row.ok ? ",1," : ",0,";
    out += csv_escape(row.error);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << out;
  if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

void write_report_summary(const EvalReport& report, std::ostream& out, bool with_timestamp) {
  out << "attitude evaluation report\n";
  if (with_timestamp) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    out << "generated: " << buf << "\n";
  }
  size_t failed = 0;
  for (const auto& r : report.rows)
    if (!r.ok) ++failed;
  out << "rows: " << report.rows.size() << ", failed: " << failed << "\n\n";

  out << std::left << std::setw(34) << "estimator" << ' ' << std::setw(14) << "dataset" << ' '
      << std::setw(24) << "scenario" << std::right << std::setw(8) << "rate" << std::setw(5) << "n"
      << std::setw(10) << "mean" << std::setw(10) << "median" << std::setw(10) << "max" << "\n";
  out << std::string(117, '-') << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& a : report.aggregates) {
    out << std::left << std::setw(34) << a.estimator << ' ' << std::setw(14) << a.dataset << ' '
        << std::setw(24) << a.scenario << std::right << std::setw(8);
    if (a.rate_hz > 0.0)
      out << std::setprecision(1) << a.rate_hz << std::setprecision(3);
    else
      out << "-";
    out << std::setw(5) << a.sequences << std::setw(10) << a.mean << std::setw(10) << a.median
        << std::setw(10) << a.max << "\n";
  }
  if (failed) {
    out << "\nfailed rows:\n";
    for (const auto& r : report.rows)
      if (!r.ok)
        out << "  " << r.estimator << " / " << r.dataset << "/" << r.sequence << " ["
            << r.scenario << "]: " << r.error << "\n";
  }
  out.unsetf(std::ios::fixed);
}

}  // namespace attkit
