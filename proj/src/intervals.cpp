#include "cpinfer/intervals.hpp"

#include <algorithm>
#include <cmath>

#include "cpinfer/error.hpp"

namespace cpinfer {

PhiIntervalUnion::PhiIntervalUnion(std::vector<PhiInterval> intervals) {
  for (const PhiInterval& iv : intervals) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi) || !(iv.lo < iv.hi)) {
      throw ConfigError("interval needs lo < hi");
    }
  }
  std::sort(intervals.begin(), intervals.end(), [](const PhiInterval& a, const PhiInterval& b) { return a.lo < b.lo; });
  for (const PhiInterval& iv : intervals) {
    if (!intervals_.empty() && iv.lo <= intervals_.back().hi) {
      intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
    } else {
      intervals_.push_back(iv);
    }
  }
}

bool PhiIntervalUnion::contains(double x) const {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                             [](double v, const PhiInterval& iv) { return v < iv.lo; });
  if (it == intervals_.begin()) return false;
  return std::prev(it)->contains(x);
}

PhiIntervalUnion PhiIntervalUnion::intersect(const PhiIntervalUnion& other) const {
  std::vector<PhiInterval> out;
  std::size_t i = 0;
  std::size_t j = 0;
  const auto& a = intervals_;
  const auto& b = other.intervals_;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return PhiIntervalUnion(std::move(out));
}

bool PhiIntervalUnion::subset_of(const PhiIntervalUnion& other, double tolerance) const {
  for (const PhiInterval& iv : intervals_) {
    bool covered = false;
    for (const PhiInterval& o : other.intervals_) {
      if (o.lo - tolerance <= iv.lo && iv.hi <= o.hi + tolerance) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

PhiIntervalUnion PhiIntervalUnion::two_sided_tails(double c) {
  if (!(c >= 0.0)) throw ConfigError("tail cut-off must be >= 0");
  if (c == 0.0) return whole_line();
  return PhiIntervalUnion({{-kInf, -c}, {c, kInf}});
}

}  // namespace cpinfer
