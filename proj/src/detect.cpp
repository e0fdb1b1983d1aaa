#include "cpinfer/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpinfer/detail/segmenters.hpp"
#include "cpinfer/error.hpp"

namespace cpinfer {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::bs: return "bs";
    case Algorithm::wbs: return "wbs";
    case Algorithm::l0: return "l0";
  }
  return "bs";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "bs") return Algorithm::bs;
  if (name == "wbs") return Algorithm::wbs;
  if (name == "l0") return Algorithm::l0;
  throw ConfigError("unknown detector '" + name + "' (expected bs, wbs or l0)");
}

DetectorConfig DetectorConfig::bs_fixed(int count) {
  DetectorConfig c;
  c.fixed_count = count;
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::bs_threshold(double threshold) {
  DetectorConfig c;
  c.threshold = threshold;
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::wbs_fixed(int count, int length, int interval_count, std::uint64_t seed) {
  DetectorConfig c;
  c.algorithm = Algorithm::wbs;
  c.fixed_count = count;
  c.interval_count = interval_count;
  c.interval_seed = seed;
  c.intervals = draw_wbs_intervals(length, interval_count, seed);
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::wbs_threshold(double threshold, int length, int interval_count, std::uint64_t seed) {
  DetectorConfig c;
  c.algorithm = Algorithm::wbs;
  c.threshold = threshold;
  c.interval_count = interval_count;
  c.interval_seed = seed;
  c.intervals = draw_wbs_intervals(length, interval_count, seed);
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::l0(double penalty) {
  DetectorConfig c;
  c.algorithm = Algorithm::l0;
  c.threshold = penalty;
  c.validate();
  return c;
}

void DetectorConfig::validate() const {
  if (algorithm == Algorithm::l0) {
    if (!threshold || !(*threshold > 0.0) || !std::isfinite(*threshold)) {
      throw ConfigError("l0 segmentation needs a penalty > 0");
    }
    if (fixed_count) {
      throw ConfigError("l0 takes a penalty; resolve a fixed count with l0_penalty_for_count first");
    }
    return;
  }
  if (fixed_count.has_value() == threshold.has_value()) {
    throw ConfigError("binary segmentation needs exactly one of fixed_count and threshold");
  }
  if (fixed_count && *fixed_count < 1) throw ConfigError("fixed_count must be >= 1");
  if (threshold && (!(*threshold > 0.0) || !std::isfinite(*threshold))) {
    throw ConfigError("threshold must be > 0");
  }
  if (algorithm == Algorithm::wbs && intervals.empty()) {
    throw ConfigError("wild binary segmentation needs at least one interval");
  }
  for (const SubInterval& iv : intervals) {
    if (iv.start < 1 || iv.end <= iv.start) throw ConfigError("invalid WBS interval");
  }
}

bool ChangeSet::contains(int tau) const { return std::binary_search(indices.begin(), indices.end(), tau); }

double cusum(const Series& series, int s, int e, int b) {
  const int n = static_cast<int>(series.size());
  if (s < 1 || e > n || b < s || b >= e) {
    throw ConfigError("cusum needs 1 <= s <= b < e <= T");
  }
  double left = 0.0;
  double right = 0.0;
  for (int t = s; t <= b; ++t) left += series[static_cast<std::size_t>(t - 1)];
  for (int t = b + 1; t <= e; ++t) right += series[static_cast<std::size_t>(t - 1)];
  const double len = e - s + 1;
  const double nl = b - s + 1;
  const double nr = e - b;
  return std::sqrt(nr / (len * nl)) * left - std::sqrt(nl / (len * nr)) * right;
}

std::vector<SubInterval> draw_wbs_intervals(int length, int count, std::uint64_t seed) {
  if (length < 2) throw ConfigError("WBS needs T >= 2");
  if (count < 1) throw ConfigError("WBS interval_count must be >= 1");
  auto rng = make_stream(seed, 0x5742'5349ULL);
  std::uniform_int_distribution<int> pick(1, length);
  std::vector<SubInterval> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    int a = pick(rng);
    int b = pick(rng);
    if (a == b) continue;
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return out;
}

namespace {

double scaled_cutoff(const DetectorConfig& config, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be > 0");
  return *config.threshold * sigma;
}

ChangeSet run_binseg(const Series& series, const DetectorConfig& config, double sigma, bool wild) {
  config.validate();
  detail::PlainField field;
  detail::BinarySegmenter<detail::PlainField> seg(series.values(), config.intervals, wild, field);
  if (config.fixed_count) return seg.run_fixed(*config.fixed_count);
  return seg.run_threshold(scaled_cutoff(config, sigma));
}

}  // namespace

ChangeSet binary_segmentation(const Series& series, const DetectorConfig& config, double sigma) {
  if (config.algorithm != Algorithm::bs) throw ConfigError("binary_segmentation needs algorithm = bs");
  return run_binseg(series, config, sigma, false);
}

ChangeSet wild_binary_segmentation(const Series& series, const DetectorConfig& config, double sigma) {
  if (config.algorithm != Algorithm::wbs) throw ConfigError("wild_binary_segmentation needs algorithm = wbs");
  return run_binseg(series, config, sigma, true);
}

ChangeSet l0_segmentation(const Series& series, double penalty) {
  if (!(penalty > 0.0) || !std::isfinite(penalty)) throw ConfigError("l0 penalty must be > 0");
  detail::PlainField field;
  return detail::optimal_partitioning(series.values(), penalty, field);
}

ChangeSet detect(const Series& series, const DetectorConfig& config, double sigma) {
  switch (config.algorithm) {
    case Algorithm::bs: return binary_segmentation(series, config, sigma);
    case Algorithm::wbs: return wild_binary_segmentation(series, config, sigma);
    case Algorithm::l0:
      config.validate();
      return l0_segmentation(series, *config.threshold);
  }
  throw InternalError("unhandled detector");
}

double l0_objective(std::span<const double> values, std::span<const int> changepoints, double penalty) {
  double total = 0.0;
  int lo = 0;
  const int n = static_cast<int>(values.size());
  for (std::size_t k = 0; k <= changepoints.size(); ++k) {
    const int hi = k < changepoints.size() ? changepoints[k] : n;
    double mean = 0.0;
    for (int t = lo; t < hi; ++t) mean += values[static_cast<std::size_t>(t)];
    mean /= hi - lo;
    for (int t = lo; t < hi; ++t) total += square(values[static_cast<std::size_t>(t)] - mean);
    lo = hi;
  }
  return total + penalty * static_cast<double>(changepoints.size());
}

PenaltySearch l0_penalty_for_count(const Series& series, int count, int max_iterations) {
  if (count < 0 || count >= static_cast<int>(series.size())) {
    throw ConfigError("requested changepoint count out of range");
  }
  auto count_at = [&](double pen) { return static_cast<int>(l0_segmentation(series, pen).size()); };
  PenaltySearch out;
  auto note = [&](int c) {
    if (c < count && (out.nearest_below < 0 || c > out.nearest_below)) out.nearest_below = c;
    if (c > count && (out.nearest_above < 0 || c < out.nearest_above)) out.nearest_above = c;
  };

  // Bracket: count(lo) >= K > count(hi) or count(hi) == K.
  double var_scale = 0.0;
  for (double v : series.values()) var_scale += v * v;
  double lo = 1e-9 * (1.0 + var_scale / static_cast<double>(series.size()));
  double hi = 1.0 + var_scale;
  int c_lo = count_at(lo);
  int c_hi = count_at(hi);
  note(c_lo);
  note(c_hi);
  if (c_hi == count) return {hi, c_hi, true, out.nearest_below, out.nearest_above};
  if (c_lo < count) {
    out.penalty = lo;
    out.count = c_lo;
    return out;
  }
  double best_exact = -1.0;
  for (int it = 0; it < max_iterations && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const int c = count_at(mid);
    note(c);
    if (c >= count) {
      lo = mid;
      if (c == count) best_exact = mid;
    } else {
      hi = mid;
    }
  }
  if (best_exact > 0.0) {
    out.penalty = best_exact;
    out.count = count;
    out.exact = true;
  } else {
    out.penalty = lo;
    out.count = count_at(lo);
  }
  return out;
}

}  // namespace cpinfer
