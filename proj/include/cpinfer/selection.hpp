#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cpinfer/detect.hpp"
#include "cpinfer/intervals.hpp"
#include "cpinfer/poly.hpp"
#include "cpinfer/projection.hpp"

namespace cpinfer {

/// The event a p-value conditions on.
struct SelectionCondition {
  enum class Kind { contains_tau, exact_match };

  Kind kind = Kind::contains_tau;
  int tau_hat = 1;
  ChangeSet reference;  // exact_match only

  static SelectionCondition contains(int tau_hat);
  static SelectionCondition exact(int tau_hat, ChangeSet reference);

  bool holds(const ChangeSet& detected) const;
};

std::string to_string(SelectionCondition::Kind kind);
SelectionCondition::Kind parse_condition(const std::string& name);

enum class Relation { nonnegative, positive };

/// poly(phi) >= 0 or > 0; one recorded decision of a detector run.
struct TracePredicate {
  Poly2 poly;
  Relation relation = Relation::nonnegative;
};

/// Maximal interval containing phi0 on which every predicate holds. Ends are
/// reported closed. Throws InternalError when a predicate fails at phi0.
PhiInterval certified_interval(std::span<const TracePredicate> predicates, double phi0);

/// Detector field over phi-polynomials. Each data-dependent decision is
/// resolved at the evaluation point and narrows the interval of phi on which
/// the decision (and hence the whole execution trace) stays the same.
class TraceField {
 public:
  using Scalar = Poly2;

  explicit TraceField(double phi_star = 0.0, bool keep_predicates = false);

  void reset(double phi_star);

  std::size_t argmax_abs(std::span<const Poly2> values);
  std::size_t argmin(std::span<const Poly2> values);
  bool abs_exceeds(const Poly2& value, double threshold);
  int sign(const Poly2& value) const;

  double phi_star() const { return phi_; }
  PhiInterval interval() const { return {lo_, hi_}; }
  const std::vector<TracePredicate>& predicates() const { return kept_; }

 private:
  void require(const Poly2& g, Relation relation);
  void require_product(const Poly2& f1, const Poly2& f2, Relation relation);

  double phi_ = 0.0;
  double lo_ = -kInf;
  double hi_ = kInf;
  bool keep_ = false;
  std::vector<TracePredicate> kept_;
};

/// X'(phi) = offset + slope * phi for fixed psi.
struct AffineSeries {
  std::vector<double> offset;
  std::vector<double> slope;

  std::vector<Poly2> polynomials() const;
  Series at(double phi) const;
};

AffineSeries symbolic_series(std::span<const double> psi, const NuisanceBasis& basis, const Contrast& contrast);

/// [-B sd, B sd] with B = max(12, |phi_obs| / sd + 2).
PhiInterval default_phi_domain(double phi_sd, double phi_obs);

struct SelectionStats {
  std::size_t pieces = 0;         // certified intervals visited
  std::size_t member_pieces = 0;  // of which satisfy the condition
};

struct SelectionOptions {
  double phi_sd = 1.0;  // scale for the minimum certified width
  std::size_t max_pieces = 1'000'000;
};

/// Runs the detector under `field` on polynomial data.
ChangeSet run_detector(std::span<const Poly2> data, const DetectorConfig& detector, double sigma, TraceField& field);

/// S_psi = {phi in domain : condition holds for X'(phi, psi)} as an exact union
/// of intervals, by covering the domain with certified intervals.
PhiIntervalUnion selection_set(std::span<const double> psi, const NuisanceBasis& basis, const Contrast& contrast,
                               const DetectorConfig& detector, double sigma, const SelectionCondition& condition,
                               const PhiInterval& domain, const SelectionOptions& options,
                               SelectionStats* stats = nullptr);

/// Brute-force membership on n_grid equally spaced points of the domain
/// (endpoints included), by reconstructing each series and re-running the
/// plain detector.
std::vector<bool> grid_oracle_selection_set(std::span<const double> psi, const NuisanceBasis& basis,
                                            const Contrast& contrast, const DetectorConfig& detector, double sigma,
                                            const SelectionCondition& condition, const PhiInterval& domain,
                                            std::size_t n_grid);

/// Grid point i of the oracle grid.
double grid_point(const PhiInterval& domain, std::size_t n_grid, std::size_t i);

}  // namespace cpinfer
