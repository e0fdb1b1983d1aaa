#pragma once

#include <span>
#include <string>
#include <vector>

namespace cpinfer {

/// Holm step-down adjusted p-values, in input order. Inputs must lie in [0, 1].
std::vector<double> holm_bonferroni(std::span<const double> p);

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
std::vector<double> benjamini_hochberg(std::span<const double> p);

enum class Correction { none, holm, bh };

std::string to_string(Correction correction);
Correction parse_correction(const std::string& name);

std::vector<double> adjust(std::span<const double> p, Correction correction);

}  // namespace cpinfer
