#include "cpinfer/projection.hpp"

#include <algorithm>
#include <cmath>

#include "cpinfer/error.hpp"

namespace cpinfer {

std::string to_string(WindowPolicy policy) {
  switch (policy) {
    case WindowPolicy::fixed_h: return "fixed_h";
    case WindowPolicy::truncate_at_neighbors: return "truncate_at_neighbors";
    case WindowPolicy::between_neighbors: return "between_neighbors";
    case WindowPolicy::midpoint: return "midpoint";
  }
  return "fixed_h";
}

WindowPolicy parse_window_policy(const std::string& name) {
  if (name == "fixed_h") return WindowPolicy::fixed_h;
  if (name == "truncate_at_neighbors") return WindowPolicy::truncate_at_neighbors;
  if (name == "between_neighbors") return WindowPolicy::between_neighbors;
  if (name == "midpoint") return WindowPolicy::midpoint;
  throw ConfigError("unknown window policy '" + name + "'");
}

void Window::validate(int length) const {
  if (h1 < 1 || h2 < 1) throw ConfigError("window half-widths must be >= 1");
  if (tau_hat - h1 < 0 || tau_hat + h2 > length) {
    throw ConfigError("window (" + std::to_string(tau_hat - h1) + ", " + std::to_string(tau_hat + h2) +
                      "] lies outside the data");
  }
}

Window resolve_window(const WindowSpec& spec, const ChangeSet& changes, int tau_hat, int length) {
  if (tau_hat < 1 || tau_hat > length - 1) throw ConfigError("changepoint outside [1, T-1]");
  if (spec.policy != WindowPolicy::between_neighbors && spec.h < 1) throw ConfigError("h must be >= 1");
  auto it = std::lower_bound(changes.indices.begin(), changes.indices.end(), tau_hat);
  const int prev = it == changes.indices.begin() ? 0 : *std::prev(it);
  int next = length;
  if (it != changes.indices.end() && *it == tau_hat) ++it;
  if (it != changes.indices.end()) next = *it;
  const int gap_left = tau_hat - prev;
  const int gap_right = next - tau_hat;

  Window w;
  w.tau_hat = tau_hat;
  w.policy = spec.policy;
  switch (spec.policy) {
    case WindowPolicy::fixed_h:
      w.h1 = spec.h;
      w.h2 = spec.h;
      break;
    case WindowPolicy::truncate_at_neighbors:
      w.h1 = std::min(spec.h, gap_left);
      w.h2 = std::min(spec.h, gap_right);
      break;
    case WindowPolicy::between_neighbors:
      w.h1 = gap_left;
      w.h2 = gap_right;
      break;
    case WindowPolicy::midpoint:
      w.h1 = gap_left / 2;
      w.h2 = gap_right / 2;
      break;
  }
  w.h1 = std::min(w.h1, tau_hat);
  w.h2 = std::min(w.h2, length - tau_hat);
  if (w.h1 < 1 || w.h2 < 1) {
    throw ConfigError("window around changepoint " + std::to_string(tau_hat) + " is empty after clipping");
  }
  return w;
}

double Contrast::dot(std::span<const double> x) const {
  double s = 0.0;
  for (int t = window.first(); t <= window.last(); ++t) {
    s += nu[static_cast<std::size_t>(t - 1)] * x[static_cast<std::size_t>(t - 1)];
  }
  return s;
}

Contrast build_contrast(const Window& window, int length) {
  window.validate(length);
  Contrast c;
  c.window = window;
  c.nu.assign(static_cast<std::size_t>(length), 0.0);
  for (int t = window.first(); t <= window.tau_hat; ++t) c.nu[static_cast<std::size_t>(t - 1)] = 1.0 / window.h1;
  for (int t = window.tau_hat + 1; t <= window.last(); ++t) {
    c.nu[static_cast<std::size_t>(t - 1)] = -1.0 / window.h2;
  }
  c.norm_sq = 1.0 / window.h1 + 1.0 / window.h2;
  return c;
}

namespace {

// Helmert contrasts for a block of n coordinates starting at row `row0`.
void fill_helmert(Eigen::MatrixXd& u, int row0, int col0, int n) {
  for (int k = 1; k < n; ++k) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int j = 0; j < k; ++j) u(row0 + j, col0 + k - 1) = scale;
    u(row0 + k, col0 + k - 1) = -static_cast<double>(k) * scale;
  }
}

}  // namespace

Eigen::MatrixXd NuisanceBasis::dense_u() const {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(length, u_window.cols());
  u.block(window.first() - 1, 0, u_window.rows(), u_window.cols()) = u_window;
  return u;
}

std::vector<double> NuisanceBasis::apply(std::span<const double> psi) const {
  if (static_cast<Eigen::Index>(psi.size()) != u_window.cols()) {
    throw ConfigError("psi has dimension " + std::to_string(psi.size()) + ", basis has " +
                      std::to_string(u_window.cols()));
  }
  std::vector<double> out(static_cast<std::size_t>(length), 0.0);
  if (psi.empty()) return out;
  Eigen::Map<const Eigen::VectorXd> p(psi.data(), static_cast<Eigen::Index>(psi.size()));
  Eigen::VectorXd block = u_window * p;
  const int off = window.first() - 1;
  for (Eigen::Index i = 0; i < block.size(); ++i) out[static_cast<std::size_t>(off + i)] = block[i];
  return out;
}

std::vector<double> NuisanceBasis::project(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != length) throw ConfigError("series length does not match basis");
  Eigen::Map<const Eigen::VectorXd> xw(x.data() + window.first() - 1, window.width());
  Eigen::VectorXd psi = u_window.transpose() * xw;
  return {psi.data(), psi.data() + psi.size()};
}

NuisanceBasis build_nuisance_basis(const Window& window, const Series& series_obs) {
  const int length = static_cast<int>(series_obs.size());
  window.validate(length);
  NuisanceBasis basis;
  basis.window = window;
  basis.length = length;
  const int width = window.width();
  basis.u_window = Eigen::MatrixXd::Zero(width, width - 2);
  fill_helmert(basis.u_window, 0, 0, window.h1);
  fill_helmert(basis.u_window, window.h1, window.h1 - 1, window.h2);

  basis.a.assign(static_cast<std::size_t>(length), 0.0);
  basis.fixed_part = series_obs.vector();
  double mean = 0.0;
  for (int t = window.first(); t <= window.last(); ++t) mean += series_obs[static_cast<std::size_t>(t - 1)];
  mean /= width;
  for (int t = window.first(); t <= window.last(); ++t) {
    basis.a[static_cast<std::size_t>(t - 1)] = 1.0 / width;
    basis.fixed_part[static_cast<std::size_t>(t - 1)] = mean;
  }
  return basis;
}

Series reconstruct(const PhiPsiCoords& coords, const NuisanceBasis& basis, const Contrast& contrast) {
  if (static_cast<int>(contrast.nu.size()) != basis.length) throw ConfigError("contrast/basis length mismatch");
  std::vector<double> x = basis.apply(coords.psi);
  const double k = coords.phi / contrast.norm_sq;
  for (std::size_t t = 0; t < x.size(); ++t) x[t] += contrast.nu[t] * k + basis.fixed_part[t];
  return Series(std::move(x));
}

PhiPsiCoords decompose(const Series& series, const NuisanceBasis& basis, const Contrast& contrast) {
  if (static_cast<int>(series.size()) != basis.length || contrast.nu.size() != series.size()) {
    throw ConfigError("series length does not match basis");
  }
  return {contrast.dot(series.values()), basis.project(series.values())};
}

}  // namespace cpinfer
