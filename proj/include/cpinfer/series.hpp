#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cpinfer {

/// A univariate real-valued sequence of length T >= 2 with finite entries.
class Series {
 public:
  explicit Series(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Piecewise-constant mean. Changepoints use the "last index of the left
/// segment" convention, 1-based: mu[tau] != mu[tau + 1].
struct MeanModel {
  int length = 0;
  std::vector<int> changepoints;
  std::vector<double> segment_means;

  void validate() const;
  std::vector<double> mean_vector() const;
};

enum class NoiseFamily { gaussian, student_t, laplace };

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double sigma = 1.0;  // gaussian only
  double dof = 0.0;    // student_t only
  double scale = 0.0;  // laplace only

  static NoiseSpec gaussian(double sigma) { return {NoiseFamily::gaussian, sigma, 0.0, 0.0}; }
  static NoiseSpec student_t(double dof) { return {NoiseFamily::student_t, 1.0, dof, 0.0}; }
  static NoiseSpec laplace(double scale) { return {NoiseFamily::laplace, 1.0, 0.0, scale}; }

  void validate() const;
  // Standard deviation of a single noise draw.
  double std_dev() const;
};

/// Independent stream for (master_seed, index); the basis of all seeded
/// reproducibility in the library.
std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t index);

/// Mixes a 64-bit value; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t index);

Series simulate_series(const MeanModel& model, const NoiseSpec& noise, std::uint64_t seed);

/// K equally spaced changepoints tau_k = round(k T / (K + 1)), means alternating
/// +amplitude, -amplitude, ... starting at +amplitude.
MeanModel make_alternating_model(int length, int count, double amplitude);

/// Robust noise scale: 1.4826 * median(|X[t+1] - X[t]|) / sqrt(2).
double estimate_sigma_mad(const Series& series);

}  // namespace cpinfer
