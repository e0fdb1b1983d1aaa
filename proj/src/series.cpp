#include "cpinfer/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpinfer/error.hpp"

namespace cpinfer {

Series::Series(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw DataError("series needs at least 2 observations, got " + std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DataError("non-finite observation at index " + std::to_string(i + 1));
    }
  }
}

void MeanModel::validate() const {
  if (length < 2) throw ConfigError("mean model length must be >= 2");
  if (segment_means.size() != changepoints.size() + 1) {
    throw ConfigError("mean model needs exactly one more segment mean than changepoints");
  }
  int prev = 0;
  for (int tau : changepoints) {
    if (tau <= prev || tau > length - 1) {
      throw ConfigError("changepoints must be strictly increasing within [1, T-1]");
    }
    prev = tau;
  }
  for (std::size_t k = 0; k + 1 < segment_means.size(); ++k) {
    if (segment_means[k] == segment_means[k + 1]) {
      throw ConfigError("adjacent segment means must differ");
    }
  }
}

std::vector<double> MeanModel::mean_vector() const {
  validate();
  std::vector<double> mu(static_cast<std::size_t>(length));
  std::size_t seg = 0;
  for (int t = 1; t <= length; ++t) {
    if (seg < changepoints.size() && t > changepoints[seg]) ++seg;
    mu[static_cast<std::size_t>(t - 1)] = segment_means[seg];
  }
  return mu;
}

void NoiseSpec::validate() const {
  switch (family) {
    case NoiseFamily::gaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("gaussian sigma must be > 0");
      break;
    case NoiseFamily::student_t:
      if (!(dof > 2.0) || !std::isfinite(dof)) throw ConfigError("student_t dof must be > 2");
      break;
    case NoiseFamily::laplace:
      if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("laplace scale must be > 0");
      break;
  }
}

double NoiseSpec::std_dev() const {
  validate();
  switch (family) {
    case NoiseFamily::gaussian: return sigma;
    case NoiseFamily::student_t: return std::sqrt(dof / (dof - 2.0));
    case NoiseFamily::laplace: return scale * std::sqrt(2.0);
  }
  return sigma;
}

std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t index) {
  // splitmix64 finalizer over a combination of both words.
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Series simulate_series(const MeanModel& model, const NoiseSpec& noise, std::uint64_t seed) {
  noise.validate();
  std::vector<double> x = model.mean_vector();
  auto rng = make_stream(seed, 0);
  switch (noise.family) {
    case NoiseFamily::gaussian: {
      std::normal_distribution<double> dist(0.0, noise.sigma);
      for (double& v : x) v += dist(rng);
      break;
    }
    case NoiseFamily::student_t: {
      std::student_t_distribution<double> dist(noise.dof);
      for (double& v : x) v += dist(rng);
      break;
    }
    case NoiseFamily::laplace: {
      // Difference of two unit exponentials is standard Laplace.
      std::exponential_distribution<double> dist(1.0);
      for (double& v : x) {
        double e1 = dist(rng);
        double e2 = dist(rng);
        v += noise.scale * (e1 - e2);
      }
      break;
    }
  }
  return Series(std::move(x));
}

MeanModel make_alternating_model(int length, int count, double amplitude) {
  if (count < 0 || count >= length) {
    throw ConfigError("alternating model needs 0 <= K < T");
  }
  if (!(amplitude != 0.0) || !std::isfinite(amplitude)) {
    throw ConfigError("alternating model amplitude must be finite and non-zero");
  }
  MeanModel model;
  model.length = length;
  for (int k = 1; k <= count; ++k) {
    model.changepoints.push_back(
        static_cast<int>(std::lround(static_cast<double>(k) * length / static_cast<double>(count + 1))));
  }
  for (int k = 0; k <= count; ++k) {
    model.segment_means.push_back(k % 2 == 0 ? amplitude : -amplitude);
  }
  model.validate();
  return model;
}

double estimate_sigma_mad(const Series& series) {
  std::vector<double> abs_diff(series.size() - 1);
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    abs_diff[t] = std::abs(series[t + 1] - series[t]);
  }
  // Median with the usual even-length averaging.
  const std::size_t n = abs_diff.size();
  const std::size_t mid = n / 2;
  std::nth_element(abs_diff.begin(), abs_diff.begin() + static_cast<std::ptrdiff_t>(mid), abs_diff.end());
  double median = abs_diff[mid];
  if (n % 2 == 0) {
    double lower = *std::max_element(abs_diff.begin(), abs_diff.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return 1.4826 * median / std::sqrt(2.0);
}

}  // namespace cpinfer
