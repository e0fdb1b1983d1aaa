#include <catch_amalgamated.hpp>

#include <random>

#include "cpinfer/error.hpp"
#include "cpinfer/multiplicity.hpp"

using namespace cpinfer;
using Catch::Approx;

namespace {

std::vector<double> approx_vec(const std::vector<double>& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-12));
  return got;
}

// Direct transcriptions of both procedures, quadratic in the input size.
std::vector<double> naive_holm(const std::vector<double>& p) {
  const std::size_t k = p.size();
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    // rank of p[i], ties broken by index
    double best = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool before = p[j] < p[i] || (p[j] == p[i] && j <= i);
      if (!before) continue;
      std::size_t rank = 0;
      for (std::size_t m = 0; m < k; ++m) rank += p[m] < p[j] || (p[m] == p[j] && m < j);
      best = std::max(best, std::min(1.0, static_cast<double>(k - rank) * p[j]));
    }
    out[i] = best;
  }
  return out;
}

std::vector<double> naive_bh(const std::vector<double>& p) {
  const std::size_t k = p.size();
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    double best = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool after = p[j] > p[i] || (p[j] == p[i] && j >= i);
      if (!after) continue;
      std::size_t rank = 1;
      for (std::size_t m = 0; m < k; ++m) rank += p[m] < p[j] || (p[m] == p[j] && m < j);
      best = std::min(best, static_cast<double>(k) * p[j] / static_cast<double>(rank));
    }
    out[i] = best;
  }
  return out;
}

}  // namespace

TEST_CASE("Holm examples") {
  approx_vec(holm_bonferroni(std::vector<double>{0.01, 0.04}), {0.02, 0.04});
  approx_vec(holm_bonferroni(std::vector<double>{0.5}), {0.5});
  approx_vec(holm_bonferroni(std::vector<double>{0.03, 0.03, 0.03}), {0.09, 0.09, 0.09});
  approx_vec(holm_bonferroni(std::vector<double>{0.04, 0.01}), {0.04, 0.02});
  approx_vec(holm_bonferroni(std::vector<double>{0.6, 0.01}), {0.6, 0.02});
  approx_vec(holm_bonferroni(std::vector<double>{0.3, 0.4}), {0.6, 0.6});
}

TEST_CASE("Benjamini-Hochberg examples") {
  approx_vec(benjamini_hochberg(std::vector<double>{0.01, 0.04, 0.03}), {0.03, 0.04, 0.04});
  approx_vec(benjamini_hochberg(std::vector<double>{1.0, 1.0}), {1.0, 1.0});
  approx_vec(benjamini_hochberg(std::vector<double>{0.25, 0.5, 0.75, 1.0}), {1.0, 1.0, 1.0, 1.0});
  approx_vec(benjamini_hochberg(std::vector<double>{0.5}), {0.5});
}

TEST_CASE("Adjustments against direct transcriptions") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t k = 1 + rng() % 12;
    std::vector<double> p(k);
    for (double& v : p) v = rep % 4 == 0 ? std::round(u(rng) * 10.0) / 100.0 : u(rng) * u(rng);
    const auto h = holm_bonferroni(p);
    const auto b = benjamini_hochberg(p);
    approx_vec(h, naive_holm(p));
    approx_vec(b, naive_bh(p));
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(h[i] >= p[i]);
      CHECK(b[i] >= p[i]);
      CHECK(h[i] <= 1.0);
      CHECK(b[i] <= 1.0);
      CHECK(h[i] >= b[i] - 1e-15);
      for (std::size_t j = 0; j < k; ++j) {
        if (p[i] < p[j]) {
          CHECK(h[i] <= h[j]);
          CHECK(b[i] <= b[j]);
        }
      }
    }
    CHECK(holm_bonferroni(p) == h);
  }
}

TEST_CASE("Correction dispatch and validation") {
  const std::vector<double> p{0.01, 0.2};
  CHECK(adjust(p, Correction::none) == p);
  CHECK(adjust(p, Correction::holm) == holm_bonferroni(p));
  CHECK(adjust(p, Correction::bh) == benjamini_hochberg(p));
  for (auto c : {Correction::none, Correction::holm, Correction::bh}) CHECK(parse_correction(to_string(c)) == c);
  CHECK_THROWS_AS(parse_correction("bonferroni-ish"), ConfigError);
  CHECK_THROWS_AS(holm_bonferroni(std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{0.2, 1.5}), ConfigError);
  CHECK_THROWS_AS(holm_bonferroni(std::vector<double>{-0.1}), ConfigError);
}
