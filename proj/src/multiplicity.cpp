#include "cpinfer/multiplicity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpinfer/error.hpp"

namespace cpinfer {

namespace {

std::vector<std::size_t> ascending_order(std::span<const double> p) {
  if (p.empty()) throw ConfigError("p-value vector is empty");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("p-values must lie in [0, 1]");
  }
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return order;
}

}  // namespace

std::vector<double> holm_bonferroni(std::span<const double> p) {
  const auto order = ascending_order(p);
  const double m = static_cast<double>(p.size());
  std::vector<double> out(p.size());
  double running = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    running = std::max(running, std::min(1.0, (m - static_cast<double>(k)) * p[order[k]]));
    out[order[k]] = running;
  }
  return out;
}

std::vector<double> benjamini_hochberg(std::span<const double> p) {
  const auto order = ascending_order(p);
  const double m = static_cast<double>(p.size());
  std::vector<double> out(p.size());
  double running = 1.0;
  for (std::size_t k = order.size(); k-- > 0;) {
    running = std::min(running, m * p[order[k]] / static_cast<double>(k + 1));
    // m * p / m can round one ulp below p.
    out[order[k]] = std::max(running, p[order[k]]);
  }
  return out;
}

std::string to_string(Correction correction) {
  switch (correction) {
    case Correction::none: return "none";
    case Correction::holm: return "holm";
    case Correction::bh: return "bh";
  }
  return "?";
}

Correction parse_correction(const std::string& name) {
  if (name == "none") return Correction::none;
  if (name == "holm") return Correction::holm;
  if (name == "bh") return Correction::bh;
  throw ConfigError("unknown correction '" + name + "' (expected none, holm or bh)");
}

std::vector<double> adjust(std::span<const double> p, Correction correction) {
  switch (correction) {
    case Correction::holm: return holm_bonferroni(p);
    case Correction::bh: return benjamini_hochberg(p);
    case Correction::none: break;
  }
  ascending_order(p);
  return {p.begin(), p.end()};
}

}  // namespace cpinfer
