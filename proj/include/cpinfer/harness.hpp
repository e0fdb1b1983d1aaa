#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpinfer/detect.hpp"
#include "cpinfer/inference.hpp"
#include "cpinfer/multiplicity.hpp"
#include "cpinfer/projection.hpp"
#include "cpinfer/series.hpp"

namespace cpinfer {

inline constexpr int kReportSchemaVersion = 1;

// ---------------------------------------------------------------- ingestion

/// One observation per line. '#' starts a comment; blank lines are skipped.
/// A first row whose selected field is not numeric is taken as a header.
/// `column` is empty (first field), a 0-based index, or a header name.
Series parse_series_csv(std::istream& in, const std::string& column = "");
Series read_series_csv(const std::string& path, const std::string& column = "");

// ---------------------------------------------------------------- configuration

enum class SigmaMode { known, mad };

struct SigmaSpec {
  SigmaMode mode = SigmaMode::known;
  double value = 1.0;  // known mode only

  static SigmaSpec known(double sigma) { return {SigmaMode::known, sigma}; }
  static SigmaSpec mad() { return {SigmaMode::mad, 0.0}; }

  /// Throws DataError when the MAD estimate is zero.
  double resolve(const Series& series) const;
};

/// Draws WBS intervals for this series length when the detector has none.
DetectorConfig prepare_detector(const DetectorConfig& detector, int length);

struct TestConfig {
  DetectorConfig detector = DetectorConfig::bs_fixed(1);
  WindowSpec window;
  SelectionCondition::Kind condition = SelectionCondition::Kind::contains_tau;
  int samples = 10;
  SigmaSpec sigma;
  double alpha = 0.05;
  Correction correction = Correction::holm;
  std::uint64_t master_seed = 0;
  bool include_observed = true;
  int threads = 1;

  void validate() const;
};

// ---------------------------------------------------------------- detect / test

struct DetectReport {
  int length = 0;
  double sigma = 1.0;
  DetectorConfig detector;
  ChangeSet changes;
};

DetectReport run_detect(const Series& series, const DetectorConfig& detector, const SigmaSpec& sigma);

struct ChangepointRecord {
  int tau_hat = 0;
  int sign = 0;
  int order = 0;  // 1-based position in detection order
  bool tested = false;
  std::string warning;  // why the changepoint was skipped
  int h1 = 0;
  int h2 = 0;
  double phi_obs = 0.0;
  double p_hat = 1.0;
  double p_hat_ratio = 1.0;
  double p_adjusted = 1.0;
  int interval_count = 0;  // intervals of the observed-psi selection set
  std::size_t pieces = 0;  // certified pieces over all samples
  int zero_weight = 0;
};

struct TestReport {
  TestConfig config;
  int length = 0;
  double sigma = 1.0;
  ChangeSet changes;
  std::vector<ChangepointRecord> records;

  int significant() const;
};

TestReport run_test(const Series& series, const TestConfig& config);

nlohmann::json to_json(const DetectorConfig& detector);
nlohmann::json to_json(const DetectReport& report);
nlohmann::json to_json(const TestReport& report);
void write_test_csv(std::ostream& out, const TestReport& report);

// ---------------------------------------------------------------- evaluation helpers

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against U(0, 1).
KsResult ks_uniform(std::vector<double> values);

/// Kolmogorov limiting survival function P(K > x), with the finite-sample
/// argument (sqrt(n) + 0.12 + 0.11 / sqrt(n)) * D applied by ks_uniform.
double kolmogorov_survival(double x);

struct MatchCounts {
  int true_positives = 0;
  int false_positives = 0;
};

/// Greedy nearest-first one-to-one matching of flagged changepoints to true
/// ones; a pair matches when |flagged - true| < radius.
MatchCounts match_changepoints(const std::vector<int>& flagged, const std::vector<int>& truth, int radius);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b, bool* degenerate = nullptr);

/// Draws phi ~ N(0, sd^2) restricted to the union.
double sample_truncated(const PhiLaw& law, const PhiIntervalUnion& set, std::mt19937_64& rng);

// ---------------------------------------------------------------- simulation studies

struct Scenario {
  MeanModel model;
  NoiseSpec noise;
};

struct StudyConfig {
  Scenario scenario;
  DetectorConfig detector = DetectorConfig::bs_fixed(1);
  WindowSpec window;
  SelectionCondition::Kind condition = SelectionCondition::Kind::contains_tau;
  std::vector<int> n_grid{1, 5, 10};
  int replicates = 1000;
  // Count only replicates with at least one detection towards `replicates`,
  // simulating further ones as needed.
  bool count_retained = false;
  // Known sigma defaults to the noise standard deviation.
  std::optional<double> sigma;
  bool mad = false;
  double alpha = 0.05;
  Correction correction = Correction::holm;
  std::uint64_t master_seed = 0;
  bool include_observed = true;
  // Power studies test only the first detected changepoint for the
  // rejection rate; every detection enters the TP/FP accounting.
  int match_radius = 10;
  int threads = 1;

  void validate() const;
  int max_n() const;
};

struct NullStudyRow {
  int n = 0;
  std::vector<double> p_values;  // sorted
  KsResult ks;
  double frac_above_99 = 0.0;
};

struct NullStudyResult {
  StudyConfig config;
  int retained = 0;
  int discarded = 0;  // replicates with no detection
  std::vector<NullStudyRow> rows;
  double max_identity_gap = 0.0;  // max |weighted - ratio| over all estimates
};

/// Pools the p-value of every detected changepoint across replicates.
NullStudyResult run_null_study(const StudyConfig& config);

struct PowerStudyRow {
  int n = 0;
  double rejection_rate = 0.0;  // first detected changepoint, unadjusted p < alpha
  int tested = 0;
  double mean_true_positives = 0.0;
  double mean_false_positives = 0.0;
  // Means over retained replicates (at least one detection).
  double fwer = 0.0;  // fraction with at least one false positive
  double fdr = 0.0;   // mean of FP / (FP + TP), 0 when nothing is flagged
};

struct PowerStudyResult {
  StudyConfig config;
  int retained = 0;
  int discarded = 0;
  std::vector<PowerStudyRow> rows;
  double max_identity_gap = 0.0;
};

PowerStudyResult run_power_study(const StudyConfig& config);

struct CorrelationConfig {
  Scenario scenario;
  DetectorConfig detector = DetectorConfig::bs_fixed(3);
  int h = 10;
  int samples = 1;  // N used for every recomputed p-value
  int resamples = 1000;
  std::optional<double> sigma;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct CorrelationResult {
  CorrelationConfig config;
  ChangeSet changes;
  // rho[a][k]: resampling at changepoint a, correlation of pair k, pairs in
  // lexicographic order (1,2), (1,3), ..., (2,3), ...
  std::vector<std::vector<double>> rho;
  std::vector<std::pair<int, int>> pairs;  // 0-based changepoint positions
  bool degenerate = false;
  double max_abs_rho = 0.0;
};

/// Resamples phi at each changepoint from its conditional law (exact-match
/// selection set, observed psi), recomputes every p-value and correlates them.
CorrelationResult run_correlation_study(const CorrelationConfig& config);

/// Correlation matrix of p-value vectors (one per changepoint, aligned over
/// resamples); exposed so the estimator can be checked.
std::vector<std::vector<double>> pairwise_correlations(const std::vector<std::vector<double>>& p_by_changepoint,
                                                       bool* degenerate = nullptr);

nlohmann::json to_json(const StudyConfig& config);
nlohmann::json to_json(const NullStudyResult& result);
nlohmann::json to_json(const PowerStudyResult& result);
nlohmann::json to_json(const CorrelationResult& result);
void write_null_csv(std::ostream& out, const NullStudyResult& result);
void write_power_csv(std::ostream& out, const PowerStudyResult& result);
void write_correlation_csv(std::ostream& out, const CorrelationResult& result);

}  // namespace cpinfer
