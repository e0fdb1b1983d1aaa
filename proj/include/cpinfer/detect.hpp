#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpinfer/series.hpp"

namespace cpinfer {

enum class Algorithm { bs, wbs, l0 };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

/// Closed sub-interval [start, end] of 1-based indices, used by wild binary
/// segmentation.
struct SubInterval {
  int start = 1;
  int end = 2;
  friend bool operator==(const SubInterval&, const SubInterval&) = default;
};

/// Detector settings. For bs/wbs exactly one of fixed_count and threshold is
/// set; the threshold is in noise-sd units (|cusum| / sigma > threshold). For
/// l0, threshold is the raw penalty per changepoint.
struct DetectorConfig {
  Algorithm algorithm = Algorithm::bs;
  std::optional<int> fixed_count;
  std::optional<double> threshold;
  // WBS only: the random intervals are drawn once and are part of the
  // detector state, so every replay of the detector sees the same set.
  int interval_count = 0;
  std::uint64_t interval_seed = 0;
  std::vector<SubInterval> intervals;

  static DetectorConfig bs_fixed(int count);
  static DetectorConfig bs_threshold(double threshold);
  static DetectorConfig wbs_fixed(int count, int length, int interval_count, std::uint64_t seed);
  static DetectorConfig wbs_threshold(double threshold, int length, int interval_count, std::uint64_t seed);
  static DetectorConfig l0(double penalty);

  void validate() const;
};

/// Detected changepoints, 1-based, "last index of the left segment".
struct ChangeSet {
  std::vector<int> indices;      // strictly increasing
  std::vector<int> order_found;  // detection order (bs/wbs); equals indices for l0
  std::vector<int> signs;        // +1 when the mean increases, aligned with indices

  bool contains(int tau) const;
  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  friend bool operator==(const ChangeSet& a, const ChangeSet& b) { return a.indices == b.indices; }
};

/// CUSUM statistic on [s, e] (1-based, inclusive) split after b, s <= b < e:
/// sqrt(nl * nr / n) * (mean_left - mean_right).
double cusum(const Series& series, int s, int e, int b);

/// M random intervals with 1 <= start < end <= T drawn uniformly.
std::vector<SubInterval> draw_wbs_intervals(int length, int count, std::uint64_t seed);

ChangeSet binary_segmentation(const Series& series, const DetectorConfig& config, double sigma = 1.0);
ChangeSet wild_binary_segmentation(const Series& series, const DetectorConfig& config, double sigma = 1.0);
ChangeSet l0_segmentation(const Series& series, double penalty);

/// Dispatches on config.algorithm.
ChangeSet detect(const Series& series, const DetectorConfig& config, double sigma = 1.0);

/// Sum of segment residual sums of squares plus penalty * #changepoints.
double l0_objective(std::span<const double> values, std::span<const int> changepoints, double penalty);

/// Result of searching for an L0 penalty that yields exactly K changepoints.
struct PenaltySearch {
  double penalty = 0.0;
  int count = 0;
  bool exact = false;
  int nearest_below = -1;  // closest achievable count < K seen, -1 if none
  int nearest_above = -1;  // closest achievable count > K seen, -1 if none
};

/// Bisection on the penalty (the optimal count is non-increasing in it).
/// Returns the largest penalty found that yields exactly `count` changes;
/// `exact` is false when no probed penalty achieves the count.
PenaltySearch l0_penalty_for_count(const Series& series, int count, int max_iterations = 200);

}  // namespace cpinfer
