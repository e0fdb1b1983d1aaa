#include "cpinfer/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cpinfer/detail/segmenters.hpp"
#include "cpinfer/error.hpp"

namespace cpinfer {

SelectionCondition SelectionCondition::contains(int tau_hat) {
  SelectionCondition c;
  c.kind = Kind::contains_tau;
  c.tau_hat = tau_hat;
  return c;
}

SelectionCondition SelectionCondition::exact(int tau_hat, ChangeSet reference) {
  if (!reference.contains(tau_hat)) throw ConfigError("exact-match reference must contain tau_hat");
  SelectionCondition c;
  c.kind = Kind::exact_match;
  c.tau_hat = tau_hat;
  c.reference = std::move(reference);
  return c;
}

bool SelectionCondition::holds(const ChangeSet& detected) const {
  if (kind == Kind::contains_tau) return detected.contains(tau_hat);
  return detected.indices == reference.indices;
}

std::string to_string(SelectionCondition::Kind kind) {
  return kind == SelectionCondition::Kind::contains_tau ? "contains_tau" : "exact_match";
}

SelectionCondition::Kind parse_condition(const std::string& name) {
  if (name == "contains_tau") return SelectionCondition::Kind::contains_tau;
  if (name == "exact_match") return SelectionCondition::Kind::exact_match;
  throw ConfigError("unknown condition '" + name + "' (expected contains_tau or exact_match)");
}

namespace {

double root_tolerance(double x) { return 1e-8 * (1.0 + std::abs(x)); }

// Sorted distinct real roots of p; returns the count.
int real_roots(const Poly2& p, std::array<double, 2>& r) {
  if (p.c2 == 0.0) {
    if (p.c1 == 0.0) return 0;
    r[0] = -p.c0 / p.c1;
    return 1;
  }
  const double disc = p.c1 * p.c1 - 4.0 * p.c2 * p.c0;
  if (disc < 0.0) return 0;
  const double q = -0.5 * (p.c1 + std::copysign(std::sqrt(disc), p.c1));
  if (q == 0.0) {
    r[0] = 0.0;
    return 1;
  }
  double a = q / p.c2;
  double b = p.c0 / q;
  if (a > b) std::swap(a, b);
  r[0] = a;
  r[1] = b;
  return a == b ? 1 : 2;
}

// Maximal interval containing x on which g >= 0, given the sorted distinct
// roots of g. Points within rounding distance of a root are resolved in
// favour of the adjacent region on which g holds.
template <class G>
PhiInterval nonnegative_run(double x, const std::array<double, 2>& r, int n, G&& g) {
  std::array<double, 4> bound{-kInf, kInf, kInf, kInf};
  for (int i = 0; i < n; ++i) bound[static_cast<std::size_t>(i + 1)] = r[static_cast<std::size_t>(i)];
  bound[static_cast<std::size_t>(n + 1)] = kInf;
  std::array<bool, 3> ok{};
  for (int k = 0; k <= n; ++k) {
    double rep;
    if (n == 0) {
      rep = x;
    } else if (k == 0) {
      rep = r[0] - 1.0 - std::abs(r[0]);
    } else if (k == n) {
      rep = r[static_cast<std::size_t>(n - 1)] + 1.0 + std::abs(r[static_cast<std::size_t>(n - 1)]);
    } else {
      rep = 0.5 * (r[0] + r[1]);
    }
    ok[static_cast<std::size_t>(k)] = g(rep) >= 0.0;
  }
  int k = 0;
  while (k < n && r[static_cast<std::size_t>(k)] < x) ++k;
  auto near = [&](int i) { return i >= 0 && i < n && std::abs(r[static_cast<std::size_t>(i)] - x) <= root_tolerance(x); };
  int start = -1;
  if (ok[static_cast<std::size_t>(k)]) {
    start = k;
  } else if (near(k) && k + 1 <= n && ok[static_cast<std::size_t>(k + 1)]) {
    start = k + 1;
  } else if (near(k - 1) && ok[static_cast<std::size_t>(k - 1)]) {
    start = k - 1;
  }
  if (start < 0) {
    if (near(k) || near(k - 1)) return {x, x};
    throw InternalError("trace predicate violated at its evaluation point");
  }
  int a = start;
  int z = start;
  while (a > 0 && ok[static_cast<std::size_t>(a - 1)]) --a;
  while (z < n && ok[static_cast<std::size_t>(z + 1)]) ++z;
  return {std::min(bound[static_cast<std::size_t>(a)], x), std::max(bound[static_cast<std::size_t>(z + 1)], x)};
}

// Narrows [lo, hi] by one predicate g >= 0 with the given roots.
template <class G>
void narrow(double x, const std::array<double, 2>& r, int n, G&& g, double& lo, double& hi) {
  if (n == 0) {
    // Constant sign; the decision at x already holds everywhere unless g < 0.
    if (g(x) < 0.0) throw InternalError("trace predicate violated at its evaluation point");
    return;
  }
  bool close = false;
  bool inside = false;
  for (int i = 0; i < n; ++i) {
    const double ri = r[static_cast<std::size_t>(i)];
    if (std::abs(ri - x) <= root_tolerance(x)) close = true;
    if (ri > lo && ri < hi) inside = true;
  }
  if (!inside && !close) return;
  if (close || n == 2) {
    // Double roots and near-ties need the sign pattern; otherwise the
    // nearest root on each side bounds the run.
    if (!close && n == 2) {
      // Fast path for two distinct sign-changing roots.
      double l = -kInf;
      double h = kInf;
      for (int i = 0; i < n; ++i) {
        const double ri = r[static_cast<std::size_t>(i)];
        if (ri < x) l = std::max(l, ri);
        if (ri > x) h = std::min(h, ri);
      }
      lo = std::max(lo, l);
      hi = std::min(hi, h);
      return;
    }
    PhiInterval run = nonnegative_run(x, r, n, g);
    lo = std::max(lo, run.lo);
    hi = std::min(hi, run.hi);
    return;
  }
  const double r0 = r[0];
  if (r0 < x) {
    lo = std::max(lo, r0);
  } else {
    hi = std::min(hi, r0);
  }
}

}  // namespace

PhiInterval certified_interval(std::span<const TracePredicate> predicates, double phi0) {
  double lo = -kInf;
  double hi = kInf;
  for (const TracePredicate& p : predicates) {
    const double v = p.poly.at(phi0);
    const bool holds = p.relation == Relation::positive ? v > 0.0 : v >= 0.0;
    if (!holds && std::abs(v) > 1e-9 * (1.0 + std::abs(p.poly.c0) + std::abs(p.poly.c1) + std::abs(p.poly.c2))) {
      throw InternalError("predicate violated at phi0");
    }
    if (p.poly.is_constant()) continue;
    std::array<double, 2> r{};
    const int n = real_roots(p.poly, r);
    narrow(phi0, r, n, [&](double t) { return p.poly.at(t); }, lo, hi);
  }
  return {lo, hi};
}

TraceField::TraceField(double phi_star, bool keep_predicates) : phi_(phi_star), keep_(keep_predicates) {}

void TraceField::reset(double phi_star) {
  phi_ = phi_star;
  lo_ = -kInf;
  hi_ = kInf;
  kept_.clear();
}

void TraceField::require(const Poly2& g, Relation relation) {
  if (g.is_constant()) return;
  if (keep_) kept_.push_back({g, relation});
  std::array<double, 2> r{};
  const int n = real_roots(g, r);
  narrow(phi_, r, n, [&](double t) { return g.at(t); }, lo_, hi_);
}

void TraceField::require_product(const Poly2& f1, const Poly2& f2, Relation relation) {
  if (f1.is_constant() && f2.is_constant()) return;
  if (keep_) kept_.push_back({f1 * f2, relation});
  std::array<double, 2> r{};
  int n = 0;
  if (f1.c1 != 0.0) r[static_cast<std::size_t>(n++)] = -f1.c0 / f1.c1;
  if (f2.c1 != 0.0) r[static_cast<std::size_t>(n++)] = -f2.c0 / f2.c1;
  if (n == 2) {
    if (r[0] > r[1]) std::swap(r[0], r[1]);
    if (r[0] == r[1]) n = 1;
  }
  narrow(phi_, r, n, [&](double t) { return f1.at(t) * f2.at(t); }, lo_, hi_);
}

std::size_t TraceField::argmax_abs(std::span<const Poly2> values) {
  std::size_t best = 0;
  double best_abs = std::abs(values[0].at(phi_));
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double a = std::abs(values[i].at(phi_));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  const Poly2& top = values[best];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == best) continue;
    const Poly2& v = values[i];
    if (top.is_constant() && v.is_constant()) continue;
    if (!top.is_affine() || !v.is_affine()) throw InternalError("absolute comparison needs affine values");
    // |top| >= |v|  <=>  (top - v)(top + v) >= 0
    require_product(top - v, top + v, i < best ? Relation::positive : Relation::nonnegative);
  }
  return best;
}

std::size_t TraceField::argmin(std::span<const Poly2> values) {
  std::size_t best = 0;
  double best_value = values[0].at(phi_);
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double v = values[i].at(phi_);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const Poly2& top = values[best];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == best) continue;
    require(values[i] - top, i < best ? Relation::positive : Relation::nonnegative);
  }
  return best;
}

bool TraceField::abs_exceeds(const Poly2& value, double threshold) {
  const bool result = std::abs(value.at(phi_)) > threshold;
  if (value.is_constant()) return result;
  if (!value.is_affine()) throw InternalError("absolute comparison needs an affine value");
  if (threshold == 0.0 && result) return true;  // fails only at an isolated root
  if (result) {
    require_product(value - Poly2(threshold), value + Poly2(threshold), Relation::positive);
  } else {
    require_product(Poly2(threshold) - value, Poly2(threshold) + value, Relation::nonnegative);
  }
  return result;
}

int TraceField::sign(const Poly2& value) const {
  const double v = value.at(phi_);
  return (v > 0.0) - (v < 0.0);
}

std::vector<Poly2> AffineSeries::polynomials() const {
  std::vector<Poly2> out(offset.size());
  for (std::size_t t = 0; t < offset.size(); ++t) out[t] = Poly2(offset[t], slope[t]);
  return out;
}

Series AffineSeries::at(double phi) const {
  std::vector<double> x(offset.size());
  for (std::size_t t = 0; t < offset.size(); ++t) x[t] = offset[t] + slope[t] * phi;
  return Series(std::move(x));
}

AffineSeries symbolic_series(std::span<const double> psi, const NuisanceBasis& basis, const Contrast& contrast) {
  if (static_cast<int>(contrast.nu.size()) != basis.length) throw ConfigError("contrast/basis length mismatch");
  AffineSeries s;
  s.offset = basis.apply(psi);
  s.slope.resize(s.offset.size());
  for (std::size_t t = 0; t < s.offset.size(); ++t) {
    s.offset[t] += basis.fixed_part[t];
    s.slope[t] = contrast.nu[t] / contrast.norm_sq;
  }
  return s;
}

PhiInterval default_phi_domain(double phi_sd, double phi_obs) {
  if (!(phi_sd > 0.0) || !std::isfinite(phi_sd)) throw ConfigError("phi sd must be > 0");
  const double b = std::max(12.0, std::abs(phi_obs) / phi_sd + 2.0);
  return {-b * phi_sd, b * phi_sd};
}

ChangeSet run_detector(std::span<const Poly2> data, const DetectorConfig& detector, double sigma, TraceField& field) {
  detector.validate();
  switch (detector.algorithm) {
    case Algorithm::bs:
    case Algorithm::wbs: {
      detail::BinarySegmenter<TraceField> seg(data, detector.intervals, detector.algorithm == Algorithm::wbs, field);
      if (detector.fixed_count) return seg.run_fixed(*detector.fixed_count);
      if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
      return seg.run_threshold(*detector.threshold * sigma);
    }
    case Algorithm::l0:
      return detail::optimal_partitioning(data, *detector.threshold, field);
  }
  throw InternalError("unhandled detector");
}

PhiIntervalUnion selection_set(std::span<const double> psi, const NuisanceBasis& basis, const Contrast& contrast,
                               const DetectorConfig& detector, double sigma, const SelectionCondition& condition,
                               const PhiInterval& domain, const SelectionOptions& options, SelectionStats* stats) {
  if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || !(domain.lo < domain.hi)) {
    throw ConfigError("selection domain must be a bounded interval");
  }
  const std::vector<Poly2> data = symbolic_series(psi, basis, contrast).polynomials();
  const double min_width = 1e-12 * options.phi_sd;

  std::vector<PhiInterval> members;
  TraceField field;
  SelectionStats local;
  double x = domain.lo;
  while (x < domain.hi) {
    if (local.pieces >= options.max_pieces) {
      throw InternalError("selection set exceeded " + std::to_string(options.max_pieces) + " certified intervals");
    }
    field.reset(x);
    const ChangeSet detected = run_detector(data, detector, sigma, field);
    const bool member = condition.holds(detected);
    const double guard = std::max(min_width, 8.0 * std::abs(x) * std::numeric_limits<double>::epsilon());
    double end = std::min(field.interval().hi, domain.hi);
    if (end < x + guard) end = std::min(x + guard, domain.hi);
    ++local.pieces;
    if (member) {
      ++local.member_pieces;
      if (!members.empty() && members.back().hi >= x) {
        members.back().hi = end;
      } else {
        members.push_back({x, end});
      }
    }
    x = end;
  }
  if (stats) *stats = local;
  return PhiIntervalUnion(std::move(members));
}

double grid_point(const PhiInterval& domain, std::size_t n_grid, std::size_t i) {
  return domain.lo + (domain.hi - domain.lo) * static_cast<double>(i) / static_cast<double>(n_grid - 1);
}

std::vector<bool> grid_oracle_selection_set(std::span<const double> psi, const NuisanceBasis& basis,
                                            const Contrast& contrast, const DetectorConfig& detector, double sigma,
                                            const SelectionCondition& condition, const PhiInterval& domain,
                                            std::size_t n_grid) {
  if (n_grid < 2) throw ConfigError("grid oracle needs at least 2 points");
  std::vector<bool> out(n_grid);
  PhiPsiCoords coords{0.0, std::vector<double>(psi.begin(), psi.end())};
  for (std::size_t i = 0; i < n_grid; ++i) {
    coords.phi = grid_point(domain, n_grid, i);
    out[i] = condition.holds(detect(reconstruct(coords, basis, contrast), detector, sigma));
  }
  return out;
}

}  // namespace cpinfer
