#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpinfer/detect.hpp"
#include "cpinfer/intervals.hpp"
#include "cpinfer/projection.hpp"
#include "cpinfer/selection.hpp"
#include "cpinfer/series.hpp"

namespace cpinfer {

/// Null law of phi: N(0, sd^2).
struct PhiLaw {
  double sd = 1.0;

  explicit PhiLaw(double sd);
  static PhiLaw for_contrast(const Contrast& contrast, double sigma);
};

/// log Pr(phi in U); -inf for an empty union.
double log_interval_union_prob(const PhiLaw& law, const PhiIntervalUnion& u);
double interval_union_prob(const PhiLaw& law, const PhiIntervalUnion& u);

double log_exceedance_prob(const PhiLaw& law, const PhiIntervalUnion& u, double c);
double exceedance_prob(const PhiLaw& law, const PhiIntervalUnion& u, double c);

struct SampleProb {
  double w = 0.0;
  std::optional<double> p;  // empty when w == 0
  double log_w = 0.0;
  double log_numerator = 0.0;
};

SampleProb p_for_sample(const PhiLaw& law, const PhiIntervalUnion& s, double c);

struct SampleResult {
  int index = 1;  // 1-based
  bool observed = false;
  std::uint64_t stream_index = 0;  // simulated samples only
  PhiIntervalUnion s;
  double w = 0.0;
  std::optional<double> p;
  double log_w = 0.0;
  double log_numerator = 0.0;
  std::size_t pieces = 0;
};

struct InferenceOptions {
  int samples = 10;  // N
  double sigma = 1.0;
  std::uint64_t master_seed = 0;
  // The observed psi is sample 1. Turning this off draws every psi afresh;
  // that estimator is not valid and exists only as a negative control.
  bool include_observed = true;
  SelectionCondition::Kind condition = SelectionCondition::Kind::contains_tau;
  int threads = 1;
  SelectionOptions selection;
};

struct PValueReport {
  double p_hat = 0.0;        // weighted form
  double p_hat_ratio = 0.0;  // ratio-of-sums form, computed separately
  int n = 0;
  int zero_weight = 0;
  std::vector<SampleResult> samples;

  int tau_hat = 0;
  Window window;
  SelectionCondition::Kind condition = SelectionCondition::Kind::contains_tau;
  DetectorConfig detector;
  double sigma = 1.0;
  std::uint64_t master_seed = 0;
  bool include_observed = true;
  double phi_obs = 0.0;
  double phi_sd = 1.0;

  /// Estimate that would have been returned with only the first n samples.
  double p_hat_prefix(int n) const;
  /// Ratio form of the same.
  double p_hat_ratio_prefix(int n) const;
};

/// Seed stream for the j-th psi draw at a given changepoint.
std::uint64_t psi_seed(std::uint64_t master_seed, int tau_hat);

/// Monte Carlo post-selection p-value for the changepoint at tau_hat.
/// `detected` must be the detector output on `series`.
PValueReport estimate_p_value(const Series& series, const ChangeSet& detected, int tau_hat, const WindowSpec& window,
                              const DetectorConfig& detector, const InferenceOptions& options);

/// Runs the detector first.
PValueReport estimate_p_value(const Series& series, int tau_hat, const WindowSpec& window,
                              const DetectorConfig& detector, const InferenceOptions& options);

}  // namespace cpinfer
