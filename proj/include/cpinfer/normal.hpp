#pragma once

namespace cpinfer::normal {

/// log P(Z > x) for standard normal Z, accurate far into the upper tail.
double log_upper_tail(double x);

/// log P(lo <= Z <= hi), lo < hi; -inf when the mass underflows entirely.
double log_mass(double lo, double hi);

/// P(lo <= Z <= hi) without cancellation in either tail.
double mass(double lo, double hi);

/// Inverse of the standard normal CDF.
double quantile(double p);

/// log(exp(a) + exp(b)).
double log_add(double a, double b);

}  // namespace cpinfer::normal
