#pragma once

#include <limits>
#include <vector>

namespace cpinfer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi] of phi values; ends may be infinite.
struct PhiInterval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return lo <= x && x <= hi; }
  double length() const { return hi - lo; }
  friend bool operator==(const PhiInterval&, const PhiInterval&) = default;
};

/// Sorted, pairwise disjoint, non-adjacent intervals.
class PhiIntervalUnion {
 public:
  PhiIntervalUnion() = default;
  explicit PhiIntervalUnion(std::vector<PhiInterval> intervals);

  static PhiIntervalUnion whole_line() { return PhiIntervalUnion({{-kInf, kInf}}); }

  const std::vector<PhiInterval>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  bool empty() const { return intervals_.empty(); }
  bool contains(double x) const;

  PhiIntervalUnion intersect(const PhiIntervalUnion& other) const;
  /// Union is a subset of `other` (up to `tolerance` at the ends).
  bool subset_of(const PhiIntervalUnion& other, double tolerance = 0.0) const;

  /// (-inf, -c] U [c, inf) for c >= 0.
  static PhiIntervalUnion two_sided_tails(double c);

  friend bool operator==(const PhiIntervalUnion&, const PhiIntervalUnion&) = default;

 private:
  std::vector<PhiInterval> intervals_;
};

}  // namespace cpinfer
