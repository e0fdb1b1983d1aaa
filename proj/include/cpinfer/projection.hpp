#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cpinfer/detect.hpp"
#include "cpinfer/series.hpp"

namespace cpinfer {

enum class WindowPolicy { fixed_h, truncate_at_neighbors, between_neighbors, midpoint };

std::string to_string(WindowPolicy policy);
WindowPolicy parse_window_policy(const std::string& name);

/// How to size the test window around each detected changepoint.
struct WindowSpec {
  WindowPolicy policy = WindowPolicy::fixed_h;
  int h = 10;
};

/// Test window (tau_hat - h1, tau_hat + h2], 1-based.
struct Window {
  int tau_hat = 1;
  int h1 = 1;
  int h2 = 1;
  WindowPolicy policy = WindowPolicy::fixed_h;

  int first() const { return tau_hat - h1 + 1; }  // 1-based, inclusive
  int last() const { return tau_hat + h2; }       // 1-based, inclusive
  int width() const { return h1 + h2; }
  void validate(int length) const;
};

/// Window for changepoint `tau_hat` of `changes` under `spec`, clipped to the
/// data. Neighbours of the first/last changepoint are 0 and T.
Window resolve_window(const WindowSpec& spec, const ChangeSet& changes, int tau_hat, int length);

/// nu = 1/h1 on the left half of the window, -1/h2 on the right half.
struct Contrast {
  std::vector<double> nu;
  double norm_sq = 0.0;
  Window window;

  double dot(std::span<const double> x) const;
};

Contrast build_contrast(const Window& window, int length);

/// Orthonormal basis of the within-window directions orthogonal to both the
/// window mean and the contrast, plus the conditioned part of the data.
///
/// Only the window block of U is stored (`u_window`, width x (width - 2));
/// rows outside the window are identically zero. The columns are Helmert
/// contrasts of the left half followed by those of the right half, a fixed
/// deterministic choice.
struct NuisanceBasis {
  Window window;
  int length = 0;
  Eigen::MatrixXd u_window;
  std::vector<double> a;           // 1/(h1+h2) inside the window
  std::vector<double> fixed_part;  // (a a^T/||a||^2 + B B^T) X_obs

  int dimension() const { return static_cast<int>(u_window.cols()); }
  /// U as a dense T x (h1 + h2 - 2) matrix.
  Eigen::MatrixXd dense_u() const;
  /// U psi as a length-T vector.
  std::vector<double> apply(std::span<const double> psi) const;
  /// U^T x.
  std::vector<double> project(std::span<const double> x) const;
};

NuisanceBasis build_nuisance_basis(const Window& window, const Series& series_obs);

struct PhiPsiCoords {
  double phi = 0.0;
  std::vector<double> psi;
};

/// X' = U psi + nu phi / ||nu||^2 + fixed_part.
Series reconstruct(const PhiPsiCoords& coords, const NuisanceBasis& basis, const Contrast& contrast);

/// phi = nu^T X, psi = U^T X.
PhiPsiCoords decompose(const Series& series, const NuisanceBasis& basis, const Contrast& contrast);

}  // namespace cpinfer
