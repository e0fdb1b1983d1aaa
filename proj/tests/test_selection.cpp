#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cpinfer/error.hpp"
#include "cpinfer/selection.hpp"

using namespace cpinfer;
using Catch::Approx;

namespace {

struct Instance {
  Series x;
  ChangeSet detected;
  int tau = 0;
  Window window;
  Contrast contrast;
  NuisanceBasis basis;
  std::vector<double> psi;
  PhiInterval domain;
};

Instance make_instance(std::mt19937_64& rng, const DetectorConfig& cfg, int n, int h, bool observed_psi) {
  std::normal_distribution<double> d;
  for (;;) {
    std::vector<double> v(n);
    const int jump_at = n / 2;
    for (int t = 0; t < n; ++t) v[t] = d(rng) + (t >= jump_at ? 1.5 : 0.0);
    Series x(v);
    ChangeSet cs = detect(x, cfg, 1.0);
    if (cs.empty()) continue;
    const int tau = cs.indices[rng() % cs.size()];
    const Window w = resolve_window({WindowPolicy::fixed_h, h}, cs, tau, n);
    Contrast c = build_contrast(w, n);
    NuisanceBasis b = build_nuisance_basis(w, x);
    std::vector<double> psi(b.dimension());
    if (observed_psi) {
      psi = decompose(x, b, c).psi;
    } else {
      for (double& p : psi) p = d(rng);
    }
    const double sd = std::sqrt(c.norm_sq);
    const PhiInterval domain = default_phi_domain(sd, c.dot(x.values()));
    return {x, cs, tau, w, c, b, psi, domain};
  }
}

int oracle_mismatches(const Instance& in, const DetectorConfig& cfg, const SelectionCondition& cond,
                      std::size_t n_grid) {
  SelectionOptions opt;
  opt.phi_sd = std::sqrt(in.contrast.norm_sq);
  const auto s = selection_set(in.psi, in.basis, in.contrast, cfg, 1.0, cond, in.domain, opt);
  const auto grid = grid_oracle_selection_set(in.psi, in.basis, in.contrast, cfg, 1.0, cond, in.domain, n_grid);
  int bad = 0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double phi = grid_point(in.domain, n_grid, i);
    if (grid[i] == s.contains(phi)) continue;
    bool near_end = false;
    for (const PhiInterval& iv : s.intervals()) {
      near_end = near_end || std::abs(phi - iv.lo) <= 1e-8 || std::abs(phi - iv.hi) <= 1e-8;
    }
    bad += !near_end;
  }
  return bad;
}

}  // namespace

TEST_CASE("certified_interval from linear and quadratic predicates") {
  std::vector<TracePredicate> p{{Poly2(-1.0, 1.0), Relation::nonnegative}};
  auto iv = certified_interval(p, 2.0);
  CHECK(iv.lo == Approx(1.0));
  CHECK(iv.hi == kInf);

  p = {{Poly2(4.0, 0.0, -1.0), Relation::nonnegative}};
  iv = certified_interval(p, 0.0);
  CHECK(iv.lo == Approx(-2.0));
  CHECK(iv.hi == Approx(2.0));

  p = {{Poly2(0.0, 1.0), Relation::nonnegative}, {Poly2(1.0, -1.0), Relation::positive}};
  iv = certified_interval(p, 0.5);
  CHECK(iv.lo == Approx(0.0).margin(1e-15));
  CHECK(iv.hi == Approx(1.0));

  // Outside the roots of an upward parabola.
  p = {{Poly2(-1.0, 0.0, 1.0), Relation::nonnegative}};
  iv = certified_interval(p, 3.0);
  CHECK(iv.lo == Approx(1.0));
  CHECK(iv.hi == kInf);

  p = {{Poly2(-1.0, 1.0), Relation::nonnegative}};
  CHECK_THROWS_AS(certified_interval(p, 0.0), InternalError);
  CHECK(certified_interval({}, 0.3) == PhiInterval{-kInf, kInf});
}

TEST_CASE("Selection conditions") {
  ChangeSet cs;
  cs.indices = {4, 9};
  ChangeSet other;
  other.indices = {4};
  CHECK(SelectionCondition::contains(4).holds(cs));
  CHECK(SelectionCondition::contains(4).holds(other));
  CHECK_FALSE(SelectionCondition::contains(5).holds(cs));
  CHECK(SelectionCondition::exact(4, cs).holds(cs));
  CHECK_FALSE(SelectionCondition::exact(4, cs).holds(other));
  CHECK_THROWS_AS(SelectionCondition::exact(5, cs), ConfigError);
}

TEST_CASE("Symbolic series is the affine reconstruction") {
  std::mt19937_64 rng(1);
  const auto cfg = DetectorConfig::bs_fixed(1);
  const Instance in = make_instance(rng, cfg, 30, 5, true);
  const AffineSeries a = symbolic_series(in.psi, in.basis, in.contrast);
  const double phi_obs = in.contrast.dot(in.x.values());
  const Series back = a.at(phi_obs);
  for (std::size_t t = 0; t < in.x.size(); ++t) {
    CHECK(back[t] == Approx(in.x[t]).margin(1e-12));
    const int idx = static_cast<int>(t) + 1;
    if (idx < in.window.first() || idx > in.window.last()) CHECK(a.slope[t] == 0.0);
  }
  const Series s1 = a.at(-1.0);
  const Series s2 = a.at(2.0);
  const Series s3 = a.at(0.5);
  for (std::size_t t = 0; t < in.x.size(); ++t) CHECK(s3[t] == Approx(s1[t] + 0.5 * (s2[t] - s1[t])).margin(1e-12));
}

TEST_CASE("Trace field replays the plain detector") {
  std::mt19937_64 rng(2);
  for (const DetectorConfig& cfg : {DetectorConfig::bs_fixed(2), DetectorConfig::bs_threshold(1.0),
                                    DetectorConfig::wbs_fixed(2, 40, 20, 3), DetectorConfig::l0(3.0)}) {
    for (int rep = 0; rep < 10; ++rep) {
      const Instance in = make_instance(rng, cfg, 40, 6, false);
      const auto polys = symbolic_series(in.psi, in.basis, in.contrast).polynomials();
      for (double phi : {-3.0, -0.4, 0.0, 0.9, 2.5}) {
        TraceField field(phi);
        const ChangeSet traced = run_detector(polys, cfg, 1.0, field);
        const ChangeSet plain = detect(symbolic_series(in.psi, in.basis, in.contrast).at(phi), cfg, 1.0);
        CHECK(traced.indices == plain.indices);
        CHECK(traced.order_found == plain.order_found);
        CHECK(field.interval().contains(phi));
      }
    }
  }
}

TEST_CASE("Observed data lies in its own selection set") {
  const Series step({0, 0, 0, 0, 10, 10, 10, 10});
  const auto cfg = DetectorConfig::bs_fixed(1);
  const ChangeSet cs = detect(step, cfg);
  REQUIRE(cs.indices == std::vector<int>{4});
  const Window w = resolve_window({WindowPolicy::fixed_h, 3}, cs, 4, 8);
  const Contrast c = build_contrast(w, 8);
  const NuisanceBasis b = build_nuisance_basis(w, step);
  const auto obs = decompose(step, b, c);
  const PhiInterval domain = default_phi_domain(std::sqrt(c.norm_sq), obs.phi);
  for (const auto& cond : {SelectionCondition::contains(4), SelectionCondition::exact(4, cs)}) {
    const auto s = selection_set(obs.psi, b, c, cfg, 1.0, cond, domain, {});
    CHECK(s.contains(obs.phi));
    CHECK(grid_oracle_selection_set(obs.psi, b, c, cfg, 1.0, cond, {obs.phi, obs.phi + 1.0}, 2)[0]);
  }
}

TEST_CASE("Selection sets match the grid oracle") {
  std::mt19937_64 rng(3);
  const std::vector<DetectorConfig> configs{
      DetectorConfig::bs_fixed(1),         DetectorConfig::bs_fixed(2), DetectorConfig::bs_threshold(1.5),
      DetectorConfig::wbs_fixed(2, 36, 15, 9), DetectorConfig::l0(1.0), DetectorConfig::l0(5.0)};
  for (const DetectorConfig& cfg : configs) {
    for (int rep = 0; rep < 8; ++rep) {
      const int n = 12 + static_cast<int>(rng() % 25);
      const int length = cfg.algorithm == Algorithm::wbs ? 36 : n;
      const Instance in = make_instance(rng, cfg, length, 2 + static_cast<int>(rng() % 5), rep % 2 == 0);
      CHECK(oracle_mismatches(in, cfg, SelectionCondition::contains(in.tau), 2000) == 0);
      CHECK(oracle_mismatches(in, cfg, SelectionCondition::exact(in.tau, in.detected), 2000) == 0);
    }
  }
}

TEST_CASE("Selection set on a null series matches the oracle on a fine grid") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d;
  std::vector<double> v(50);
  for (double& x : v) x = d(rng);
  const Series x(v);
  const auto cfg = DetectorConfig::bs_fixed(1);
  const ChangeSet cs = detect(x, cfg);
  const Window w = resolve_window({WindowPolicy::fixed_h, 5}, cs, cs.indices[0], 50);
  Instance in{x, cs, cs.indices[0], w, build_contrast(w, 50), build_nuisance_basis(w, x), {}, {}};
  in.psi = decompose(x, in.basis, in.contrast).psi;
  in.domain = default_phi_domain(std::sqrt(in.contrast.norm_sq), in.contrast.dot(x.values()));
  CHECK(oracle_mismatches(in, cfg, SelectionCondition::contains(in.tau), 10000) == 0);
}

TEST_CASE("Selection set structure") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto cfg = rep % 2 ? DetectorConfig::bs_fixed(2) : DetectorConfig::l0(2.0);
    const Instance in = make_instance(rng, cfg, 30, 4, rep % 3 == 0);
    SelectionStats stats;
    const auto contains =
        selection_set(in.psi, in.basis, in.contrast, cfg, 1.0, SelectionCondition::contains(in.tau), in.domain, {}, &stats);
    const auto exact = selection_set(in.psi, in.basis, in.contrast, cfg, 1.0,
                                     SelectionCondition::exact(in.tau, in.detected), in.domain, {});
    CHECK(exact.subset_of(contains, 1e-12));
    CHECK(stats.pieces >= stats.member_pieces);
    const auto& ivs = contains.intervals();
    for (std::size_t i = 0; i < ivs.size(); ++i) {
      CHECK(ivs[i].lo < ivs[i].hi);
      CHECK(ivs[i].lo >= in.domain.lo);
      CHECK(ivs[i].hi <= in.domain.hi);
      if (i > 0) CHECK(ivs[i - 1].hi < ivs[i].lo);
    }
    const auto again =
        selection_set(in.psi, in.basis, in.contrast, cfg, 1.0, SelectionCondition::contains(in.tau), in.domain, {});
    CHECK(again == contains);
  }
}

TEST_CASE("Nothing is selected when the threshold is out of reach") {
  std::mt19937_64 rng(6);
  const Instance in = make_instance(rng, DetectorConfig::bs_fixed(1), 30, 4, true);
  const auto cfg = DetectorConfig::bs_threshold(1e6);
  const auto s = selection_set(in.psi, in.basis, in.contrast, cfg, 1.0, SelectionCondition::contains(in.tau),
                               in.domain, {});
  CHECK(s.empty());
  const auto grid = grid_oracle_selection_set(in.psi, in.basis, in.contrast, cfg, 1.0,
                                              SelectionCondition::contains(in.tau), in.domain, 100);
  CHECK(std::none_of(grid.begin(), grid.end(), [](bool b) { return b; }));
}

TEST_CASE("Phi domain") {
  auto d = default_phi_domain(2.0, 1.0);
  CHECK(d.lo == Approx(-24.0));
  CHECK(d.hi == Approx(24.0));
  d = default_phi_domain(1.0, -30.0);
  CHECK(d.hi == Approx(32.0));
  CHECK(d.contains(-30.0));
  CHECK_THROWS_AS(default_phi_domain(0.0, 1.0), ConfigError);
  std::mt19937_64 rng(7);
  const Instance in = make_instance(rng, DetectorConfig::bs_fixed(1), 20, 3, true);
  CHECK_THROWS_AS(selection_set(in.psi, in.basis, in.contrast, DetectorConfig::bs_fixed(1), 1.0,
                                SelectionCondition::contains(in.tau), {-kInf, 1.0}, {}),
                  ConfigError);
}
