#include "cpinfer/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>

#include "cpinfer/error.hpp"

namespace cpinfer::normal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

}  // namespace

double log_upper_tail(double x) {
  if (x == kInf) return -kInf;
  if (x == -kInf) return 0.0;
  if (x < 0.0) return std::log1p(-0.5 * std::erfc(-x * kInvSqrt2));
  if (x < 37.0) return std::log(0.5 * std::erfc(x * kInvSqrt2));
  // Asymptotic Mills-ratio series; the truncation error is below 1e-14 here.
  const double z = 1.0 / (x * x);
  const double series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double log_mass(double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi)) throw ConfigError("NaN interval bound");
  if (!(lo < hi)) return -kInf;
  if (hi <= 0.0) return log_mass(-hi, -lo);
  if (lo < 1.0) {
    // Straddles or sits near zero: erf differences have no cancellation here.
    const double e_hi = hi == kInf ? 1.0 : std::erf(hi * kInvSqrt2);
    const double e_lo = lo == -kInf ? -1.0 : std::erf(lo * kInvSqrt2);
    return std::log(0.5 * (e_hi - e_lo));
  }
  const double a = log_upper_tail(lo);
  const double b = log_upper_tail(hi);
  if (b == -kInf) return a;
  return a + std::log1p(-std::exp(b - a));
}

double mass(double lo, double hi) { return std::exp(log_mass(lo, hi)); }

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw ConfigError("quantile needs p in [0, 1]");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace cpinfer::normal
