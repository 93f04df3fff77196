#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

#include "ksrapid/errors.hpp"
#include "ksrapid/kernel_synthesis.hpp"

namespace ksrapid {

/// Sine-Galerkin discretization of (Kv)(x) = integral k(x,y) v(y) dy and the
/// cached factorization of I - K. Since k = sum_j rho_j(x) phi_j(y), column n
/// of the matrix is the sine-coefficient vector of rho_n for n <= N and zero
/// beyond the truncation.
class TransformOperator {
public:
  int M = 0;  // Galerkin dimension
  int N = 0;  // kernel truncation
  Eigen::MatrixXd matrix;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // of I - matrix
  double min_singular_value = 0.0;          // of I - matrix
  double max_singular_value = 0.0;
  double operator_norm = 0.0;  // ||matrix||_2

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    if (v.size() != M)
      throw DimensionMismatch("apply: vector size " + std::to_string(v.size()) +
                              " != basis size " + std::to_string(M));
    return matrix * v;
  }

  /// Solves (I - K) v = w with the cached factorization.
  Eigen::VectorXd solve_inverse(const Eigen::VectorXd& w) const {
    if (w.size() != M)
      throw DimensionMismatch("solve_inverse: vector size " + std::to_string(w.size()) +
                              " != basis size " + std::to_string(M));
    if (min_singular_value <= 0.0 ||
        max_singular_value / min_singular_value > 1e12)
      throw NearSingular("I - K is numerically singular (cond ~ " +
                         std::to_string(max_singular_value / std::max(min_singular_value, 1e-300)) +
                         "); the kernel assembly is suspect");
    Eigen::VectorXd v = lu.solve(w);
    const double res = (v - matrix * v - w).norm();
    if (res > 1e-10 * std::max(w.norm(), 1e-30))
      throw NearSingular("solve_inverse residual " + std::to_string(res) + " too large");
    return v;
  }

  Eigen::VectorXd apply_i_minus_k(const Eigen::VectorXd& v) const {
    if (v.size() != M) throw DimensionMismatch("apply_i_minus_k: size mismatch");
    return v - matrix * v;
  }
};

inline TransformOperator assemble_transform(const KernelModel& model, int M) {
  if (M < model.N)
    throw DimensionMismatch("assemble_transform needs M >= N, got M = " + std::to_string(M) +
                            ", N = " + std::to_string(model.N));
  TransformOperator op;
  op.M = M;
  op.N = model.N;
  op.matrix = Eigen::MatrixXd::Zero(M, M);
  for (int n = 1; n <= model.N; ++n)
    for (int m = 1; m <= M; ++m) op.matrix(m - 1, n - 1) = model.row_sine_coeff(n, m);

  const Eigen::MatrixXd ImK = Eigen::MatrixXd::Identity(M, M) - op.matrix;
  op.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(ImK);
  {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(ImK);
    op.min_singular_value = svd.singularValues().tail(1)(0);
    op.max_singular_value = svd.singularValues()(0);
  }
  {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(op.matrix);
    op.operator_norm = svd.singularValues()(0);
  }
  return op;
}

struct SpectralRadiusEstimate {
  double power_norm = 0.0;   // ||K^m||_2^(1/m)
  double max_abs_eig = 0.0;  // spectral radius of the truncated matrix
};

/// Gelfand-formula proxy for the spectral radius plus the direct eigenvalue
/// bound of the truncation. The continuous claim r(K) = 0 cannot be checked
/// at finite dimension; a small max |eig| certifies that 1 stays far from
/// the discrete spectrum.
inline SpectralRadiusEstimate spectral_radius_estimate(const Eigen::MatrixXd& K, int m_powers) {
  if (m_powers < 4) throw DimensionMismatch("spectral_radius_estimate needs m_powers >= 4");
  SpectralRadiusEstimate est;
  Eigen::MatrixXd P = K;
  for (int i = 1; i < m_powers; ++i) P = P * K;
  const double norm_m = Eigen::BDCSVD<Eigen::MatrixXd>(P).singularValues()(0);
  est.power_norm = std::pow(norm_m, 1.0 / m_powers);
  Eigen::EigenSolver<Eigen::MatrixXd> eig(K, /*computeEigenvectors=*/false);
  est.max_abs_eig = eig.eigenvalues().cwiseAbs().maxCoeff();
  return est;
}

inline SpectralRadiusEstimate spectral_radius_estimate(const TransformOperator& op, int m_powers) {
  return spectral_radius_estimate(op.matrix, m_powers);
}

}  // namespace ksrapid
