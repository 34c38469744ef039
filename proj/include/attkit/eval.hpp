#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attkit/filters.hpp"
#include "attkit/gru.hpp"
#include "attkit/metrics.hpp"
#include "attkit/sequence.hpp"

namespace attkit {

// Test conditions of increasing difficulty:
//   restrictive            an initial rest phase is guaranteed (prepended
//                          when the recording lacks one), no gyro bias
//   partially_restrictive  rest phase plus a constant per-axis gyro bias
//                          drawn from N(0, bias_std^2)
//   realistic              gyro bias, and any initial rest phase is removed
enum class ScenarioKind { restrictive, partially_restrictive, realistic };

ScenarioKind scenario_kind_from_string(const std::string& s);
std::string to_string(ScenarioKind kind);

struct Scenario {
  ScenarioKind kind = ScenarioKind::restrictive;
  double bias_std = 0.5 * kDegToRad;  // rad/s
  double rest_duration = 5.0;         // s
  std::uint64_t seed = 0;
};

// Leading samples whose gyro magnitude stays below threshold. Runs shorter
// than min_duration do not count as rest.
Eigen::Index detect_rest_prefix(const ImuSequence& seq, double threshold = 2.0 * kDegToRad,
                                double min_duration = 0.5);

// Applies a scenario. The bias vector is drawn deterministically from the
// scenario seed combined with the sequence name, so each sequence gets its
// own bias but repeated runs agree.
ImuSequence build_scenario(const ImuSequence& seq, const Scenario& sc);

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string id() const = 0;
  virtual std::vector<Quaternion> run(const ImuSequence& seq) const = 0;
};

class FilterEstimator : public Estimator {
 public:
  explicit FilterEstimator(FilterParams params) : params_(params) {}
  std::string id() const override;
  std::vector<Quaternion> run(const ImuSequence& seq) const override;
  const FilterParams& params() const { return params_; }

 private:
  FilterParams params_;
};

class StrapdownEstimator : public Estimator {
 public:
  enum class Init { identity, accel, truth };
  explicit StrapdownEstimator(Init init = Init::accel) : init_(init) {}
  std::string id() const override;
  std::vector<Quaternion> run(const ImuSequence& seq) const override;

 private:
  Init init_;
};

class NetworkEstimator : public Estimator {
 public:
  NetworkEstimator(GruNetwork net, bool jitr) : net_(std::move(net)), jitr_(jitr) {}
  std::string id() const override;
  std::vector<Quaternion> run(const ImuSequence& seq) const override;
  const GruNetwork& net() const { return net_; }

 private:
  GruNetwork net_;
  bool jitr_;
};

// Builds an estimator from a compact spec string:
//   filterA:gain=0.1            filterB:gain=1,ki=0.3,init_accel=0
//   filterA:params=tuned.json   strapdown[:init=identity|accel|truth]
//   net:weights=w.json[,jitr=1]
std::unique_ptr<Estimator> make_estimator(const std::string& spec);

struct EvalRow {
  std::string estimator, dataset, sequence, scenario;
  double rate_hz = 0.0;
  Eigen::Index samples = 0;
  double rmse = 0.0;  // degrees
  bool ok = false;
  std::string error;
};

struct EvalAggregate {
  std::string estimator, dataset, scenario;
  double rate_hz = 0.0;  // 0 when rows mix rates; set by frequency sweeps
  Eigen::Index sequences = 0;
  double mean = 0.0, median = 0.0, max = 0.0;  // degrees
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalAggregate> aggregates;
};

struct EvalOptions {
  int threads = 1;  // row parallelism; output is identical for any value
};

// Every estimator on every sequence under every scenario. A failing
// estimator marks its row instead of aborting the report.
EvalReport evaluate(const std::vector<const Estimator*>& estimators,
                    const std::vector<ImuSequence>& sequences,
                    const std::vector<Scenario>& scenarios, const EvalOptions& opts = {});

// One estimator across sampling rates: each sequence is resampled to each
// rate, the scenario applied, and the estimator scored there.
EvalReport frequency_sweep(const Estimator& estimator, const std::vector<ImuSequence>& sequences,
                           const std::vector<double>& rates, const Scenario& scenario,
                           const EvalOptions& opts = {});

void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

// Human-readable aggregate tables; the timestamp line is skipped in
// deterministic mode.
void write_report_summary(const EvalReport& report, std::ostream& out, bool with_timestamp);

}  // namespace attkit
