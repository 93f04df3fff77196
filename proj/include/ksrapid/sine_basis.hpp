#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "ksrapid/errors.hpp"
#include "ksrapid/spectral_core.hpp"

namespace ksrapid {

// Discrete sine tools on the uniform grid x_i = i h, h = 1/(n+1), i = 1..n
// (interior points only; the endpoints carry homogeneous Dirichlet values).
// The grid sines sin(j pi x_i), j <= n, are orthogonal under the trapezoid
// inner product, so grid <-> modal conversions are exact for band-limited
// fields and the trapezoid L2 norm equals the coefficient norm.

inline Eigen::MatrixXd sine_matrix(int n_modes, int n_interior) {
  Eigen::MatrixXd S(n_modes, n_interior);
  const double h = 1.0 / (n_interior + 1);
  for (int j = 1; j <= n_modes; ++j)
    for (int i = 1; i <= n_interior; ++i) S(j - 1, i - 1) = std::sin(j * kPi * i * h);
  return S;
}

/// Orthonormal sine coefficients of grid values: v_j = <v, sqrt(2) sin(j pi x)>.
inline Eigen::VectorXd grid_to_modal(const Eigen::VectorXd& grid, int n_modes) {
  const int n = static_cast<int>(grid.size());
  if (n_modes > n)
    throw DimensionMismatch("grid_to_modal: " + std::to_string(n_modes) + " modes from " +
                            std::to_string(n) + " interior points");
  Eigen::VectorXd coeffs(n_modes);
  const double h = 1.0 / (n + 1);
  const double scale = std::sqrt(2.0) * h;
  for (int j = 1; j <= n_modes; ++j) {
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += grid(i - 1) * std::sin(j * kPi * i * h);
    coeffs(j - 1) = scale * s;
  }
  return coeffs;
}

inline Eigen::VectorXd modal_to_grid(const Eigen::VectorXd& coeffs, int n_interior) {
  Eigen::VectorXd grid = Eigen::VectorXd::Zero(n_interior);
  const double h = 1.0 / (n_interior + 1);
  for (int j = 1; j <= coeffs.size(); ++j) {
    const double amp = std::sqrt(2.0) * coeffs(j - 1);
    if (amp == 0.0) continue;
    for (int i = 1; i <= n_interior; ++i) grid(i - 1) += amp * std::sin(j * kPi * i * h);
  }
  return grid;
}

/// Trapezoid L2 norm of interior grid values (endpoints are zero).
inline double grid_l2_norm(const Eigen::VectorXd& grid) {
  const double h = 1.0 / (grid.size() + 1);
  return std::sqrt(h * grid.squaredNorm());
}

}  // namespace ksrapid
