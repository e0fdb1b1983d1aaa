#pragma once

// Detector implementations written against an abstract ordered field so the
// same code runs on plain doubles and on phi-polynomials that record every
// data-dependent decision (see selection.hpp).
//
// A Field provides:
//   using Scalar;                                  // closed under +, -, double *
//   std::size_t argmax_abs(std::span<const Scalar>);  // first maximiser of |v|
//   std::size_t argmin(std::span<const Scalar>);      // first minimiser
//   bool abs_exceeds(const Scalar&, double);          // |v| > threshold
//   int sign(const Scalar&);                          // sign of the current value

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cpinfer/detect.hpp"
#include "cpinfer/poly.hpp"

namespace cpinfer::detail {

struct PlainField {
  using Scalar = double;

  std::size_t argmax_abs(std::span<const double> v) const {
    std::size_t best = 0;
    double best_abs = std::abs(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) {
      double a = std::abs(v[i]);
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    return best;
  }

  std::size_t argmin(std::span<const double> v) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] < v[best]) best = i;
    }
    return best;
  }

  bool abs_exceeds(double v, double threshold) const { return std::abs(v) > threshold; }
  int sign(double v) const { return (v > 0.0) - (v < 0.0); }
};

template <class Scalar>
std::vector<Scalar> prefix_sums(std::span<const Scalar> x) {
  std::vector<Scalar> p(x.size() + 1, Scalar(0.0));
  for (std::size_t t = 0; t < x.size(); ++t) p[t + 1] = p[t] + x[t];
  return p;
}

// 0-based inclusive [s, e], left part [s, b].
template <class Scalar>
Scalar cusum_from_prefix(const std::vector<Scalar>& prefix, int s, int e, int b) {
  const double n = e - s + 1;
  const double nl = b - s + 1;
  const double nr = e - b;
  Scalar left = prefix[b + 1] - prefix[s];
  Scalar right = prefix[e + 1] - prefix[b + 1];
  return std::sqrt(nl * nr / n) * (left / nl - right / nr);
}

template <class Scalar>
struct SplitCandidate {
  int split = 0;  // 0-based last index of the left part
  Scalar value{};
};

template <class Field>
class BinarySegmenter {
 public:
  using Scalar = typename Field::Scalar;

  BinarySegmenter(std::span<const Scalar> x, std::span<const SubInterval> intervals, bool wild, Field& field)
      : prefix_(prefix_sums<Scalar>(x)), n_(static_cast<int>(x.size())), intervals_(intervals), wild_(wild),
        field_(field) {}

  ChangeSet run_threshold(double cutoff) {
    std::vector<std::pair<int, int>> stack{{0, n_ - 1}};
    std::vector<int> order;
    std::vector<int> order_signs;
    while (!stack.empty()) {
      auto [s, e] = stack.back();
      stack.pop_back();
      auto best = segment_best(s, e);
      if (!best) continue;
      if (!field_.abs_exceeds(best->value, cutoff)) continue;
      order.push_back(best->split);
      order_signs.push_back(-field_.sign(best->value));
      // Left child processed first.
      stack.emplace_back(best->split + 1, e);
      stack.emplace_back(s, best->split);
    }
    return finish(order, order_signs);
  }

  ChangeSet run_fixed(int count) {
    struct Segment {
      int s;
      int e;
      std::optional<SplitCandidate<Scalar>> best;
    };
    std::vector<Segment> segments{{0, n_ - 1, segment_best(0, n_ - 1)}};
    std::vector<int> order;
    std::vector<int> order_signs;
    std::vector<Scalar> values;
    std::vector<std::size_t> owner;
    while (static_cast<int>(order.size()) < count) {
      values.clear();
      owner.clear();
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].best) {
          values.push_back(segments[i].best->value);
          owner.push_back(i);
        }
      }
      if (values.empty()) break;
      std::size_t k = field_.argmax_abs(values);
      if (!field_.abs_exceeds(values[k], 0.0)) break;
      const Segment chosen = segments[owner[k]];
      const int b = chosen.best->split;
      order.push_back(b);
      order_signs.push_back(-field_.sign(chosen.best->value));
      Segment left{chosen.s, b, segment_best(chosen.s, b)};
      Segment right{b + 1, chosen.e, segment_best(b + 1, chosen.e)};
      auto pos = segments.begin() + static_cast<std::ptrdiff_t>(owner[k]);
      pos = segments.erase(pos);
      pos = segments.insert(pos, right);
      segments.insert(pos, left);
    }
    return finish(order, order_signs);
  }

 private:
  std::optional<SplitCandidate<Scalar>> segment_best(int s, int e) {
    if (e <= s) return std::nullopt;
    values_.clear();
    splits_.clear();
    add_interval(s, e);
    if (wild_) {
      for (const SubInterval& iv : intervals_) {
        const int is = iv.start - 1;
        const int ie = iv.end - 1;
        if (is >= s && ie <= e && ie > is && !(is == s && ie == e)) add_interval(is, ie);
      }
    }
    std::size_t k = field_.argmax_abs(values_);
    return SplitCandidate<Scalar>{splits_[k], values_[k]};
  }

  void add_interval(int s, int e) {
    for (int b = s; b < e; ++b) {
      values_.push_back(cusum_from_prefix(prefix_, s, e, b));
      splits_.push_back(b);
    }
  }

  static ChangeSet finish(const std::vector<int>& order, const std::vector<int>& order_signs) {
    ChangeSet cs;
    cs.order_found.reserve(order.size());
    for (int b : order) cs.order_found.push_back(b + 1);
    std::vector<std::size_t> idx(order.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return order[a] < order[b]; });
    for (std::size_t i : idx) {
      cs.indices.push_back(order[i] + 1);
      cs.signs.push_back(order_signs[i]);
    }
    return cs;
  }

  std::vector<Scalar> prefix_;
  int n_;
  std::span<const SubInterval> intervals_;
  bool wild_;
  Field& field_;
  std::vector<Scalar> values_;
  std::vector<int> splits_;
};

/// Exact optimal partitioning, F(t) = min_s F(s) + RSS(s+1..t) + penalty * [s > 0].
/// Ties resolve to the smallest s (no change first, then the earliest last change).
template <class Field>
ChangeSet optimal_partitioning(std::span<const typename Field::Scalar> x, double penalty, Field& field) {
  using Scalar = typename Field::Scalar;
  const int n = static_cast<int>(x.size());
  std::vector<Scalar> sum(n + 1, Scalar(0.0));
  std::vector<Scalar> sum_sq(n + 1, Scalar(0.0));
  for (int t = 0; t < n; ++t) {
    sum[t + 1] = sum[t] + x[t];
    sum_sq[t + 1] = sum_sq[t] + square(x[t]);
  }
  std::vector<Scalar> cost(n + 1, Scalar(0.0));
  std::vector<int> last(n + 1, 0);
  std::vector<Scalar> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) {
    candidates.clear();
    for (int s = 0; s < t; ++s) {
      Scalar seg_sum = sum[t] - sum[s];
      Scalar rss = (sum_sq[t] - sum_sq[s]) - square(seg_sum) / static_cast<double>(t - s);
      Scalar c = cost[s] + rss;
      if (s > 0) c += Scalar(penalty);
      candidates.push_back(c);
    }
    std::size_t k = field.argmin(candidates);
    last[t] = static_cast<int>(k);
    cost[t] = candidates[k];
  }
  std::vector<int> cps;
  for (int t = n; last[t] > 0; t = last[t]) cps.push_back(last[t]);
  std::reverse(cps.begin(), cps.end());

  ChangeSet cs;
  cs.indices = cps;
  cs.order_found = cps;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const int lo = i == 0 ? 0 : cps[i - 1];
    const int mid = cps[i];
    const int hi = i + 1 < cps.size() ? cps[i + 1] : n;
    Scalar left_mean = (sum[mid] - sum[lo]) / static_cast<double>(mid - lo);
    Scalar right_mean = (sum[hi] - sum[mid]) / static_cast<double>(hi - mid);
    cs.signs.push_back(field.sign(right_mean - left_mean));
  }
  return cs;
}

}  // namespace cpinfer::detail
