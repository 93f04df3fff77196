#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <vector>

#include "ksrapid/errors.hpp"
#include "ksrapid/quadrature.hpp"
#include "ksrapid/spectral_core.hpp"

namespace ksrapid {

/// Boundary observation z_x(t, 0) = sum_j z0_j e^{mu_j t} sqrt(2) j pi of the
/// adjoint system, from orthonormal initial mode coefficients.
inline std::vector<double> adjoint_boundary_signal(const Eigen::VectorXd& z0_modes, double lambda,
                                                   const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    double s = 0.0;
    for (int j = 1; j <= z0_modes.size(); ++j)
      s += z0_modes(j - 1) * std::exp(eigenvalue(j, lambda) * t) * std::sqrt(2.0) * j * kPi;
    out.push_back(s);
  }
  return out;
}

namespace detail {

// log of int_0^T e^{s t} dt, stable for any sign and size of s.
inline double log_exp_integral(double s, double T) {
  if (std::abs(s) * T < 1e-12) return std::log(T);
  if (s > 0.0) return s * T + std::log1p(-std::exp(-s * T)) - std::log(s);
  return std::log1p(-std::exp(s * T)) - std::log(-s);
}

}  // namespace detail

/// Observability Gram matrix G_jk = int_0^T (sqrt2 j pi)(sqrt2 k pi)
/// e^{(mu_j + mu_k) t} dt with closed-form time integrals; its smallest
/// eigenvalue detects the rank drop at critical lambda. Qualitative only:
/// Gram matrices of exponential families are exponentially ill-conditioned,
/// so n_modes stays small. Throws when a growing mode overflows the raw
/// entries; use the normalized variant (or a shorter T) in that regime.
inline double observability_gram_min_eig(double lambda, int n_modes, double T) {
  if (n_modes < 1 || n_modes > 12)
    throw DimensionMismatch("observability gram limited to 1..12 modes");
  Eigen::MatrixXd G(n_modes, n_modes);
  for (int j = 1; j <= n_modes; ++j)
    for (int k = j; k <= n_modes; ++k) {
      const double s = eigenvalue(j, lambda) + eigenvalue(k, lambda);
      if (s * T > 700.0)
        throw NumericalOverflow("Gram entry e^{(mu_j+mu_k)T} overflows; reduce T or use the "
                                "normalized Gram");
      const double time_integral = (std::abs(s) * T < 1e-12) ? T : (std::expm1(s * T)) / s;
      const double val = 2.0 * j * k * kPi * kPi * time_integral;
      G(j - 1, k - 1) = val;
      G(k - 1, j - 1) = val;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  return es.eigenvalues()(0);
}

/// Unit-diagonal (correlation) form of the Gram, computed in log space so
/// arbitrarily growing modes stay representable. Rank deficiency survives
/// the normalization, so this is the robust dichotomy detector.
inline double observability_gram_normalized_min_eig(double lambda, int n_modes, double T) {
  if (n_modes < 1 || n_modes > 12)
    throw DimensionMismatch("observability gram limited to 1..12 modes");
  std::vector<double> mu(n_modes + 1);
  for (int j = 1; j <= n_modes; ++j) mu[j] = eigenvalue(j, lambda);
  Eigen::MatrixXd G(n_modes, n_modes);
  for (int j = 1; j <= n_modes; ++j)
    for (int k = j; k <= n_modes; ++k) {
      const double lg = detail::log_exp_integral(mu[j] + mu[k], T) -
                        0.5 * detail::log_exp_integral(2.0 * mu[j], T) -
                        0.5 * detail::log_exp_integral(2.0 * mu[k], T);
      G(j - 1, k - 1) = G(k - 1, j - 1) = std::exp(lg);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  return es.eigenvalues()(0);
}

/// Auxiliary boundary-to-state profile: the solution of
///   b'''' + lambda b'' = 0, b(0) = b(1) = 0, b''(0) = 1, b''(1) = 0,
/// in closed form b(x) = (1 - x - cos(s x) + cot(s) sin(s x))/lambda with
/// s = sqrt(lambda). Degenerates when sin(s) = 0.
struct BoundaryProfile {
  double lambda = 0.0;
  double s = 0.0;
  double cot_s = 0.0;

  double eval(double x) const {
    return (1.0 - x - std::cos(s * x) + cot_s * std::sin(s * x)) / lambda;
  }
  double deriv2(double x) const {
    return (s * s) * (std::cos(s * x) - cot_s * std::sin(s * x)) / lambda;
  }
  double deriv4(double x) const {
    return -(s * s * s * s) * (std::cos(s * x) - cot_s * std::sin(s * x)) / lambda;
  }

  /// Orthonormal sine coefficients b_j by Gauss quadrature.
  Eigen::VectorXd sine_coefficients(int j_max, int quad_order = 0) const {
    const int q = quad_order > 0 ? quad_order : std::max(128, 4 * j_max);
    const QuadratureRule rule = gauss_legendre(q);
    Eigen::VectorXd out(j_max);
    for (int j = 1; j <= j_max; ++j)
      out(j - 1) = rule.integrate([&](double x) { return eval(x) * eigenfunction_eval(j, x); });
    return out;
  }
};

inline BoundaryProfile b_function(double lambda, double eps_critical = 1e-6) {
  if (lambda <= 0.0) throw DegenerateBoundaryProfile("b function needs lambda > 0");
  const double s = std::sqrt(lambda);
  if (std::abs(std::sin(s)) <= eps_critical)
    throw DegenerateBoundaryProfile("sin(sqrt(lambda)) ~ 0: the closed form degenerates");
  return BoundaryProfile{lambda, s, std::cos(s) / std::sin(s)};
}

struct OverdeterminedReport {
  std::vector<std::complex<double>> mu_values;
  std::vector<double> smallest_singular_values;
};

/// For each mu, the 5 x 4 boundary-condition matrix of
///   phi'''' + lambda phi'' = mu phi,
///   phi(0) = phi(1) = phi'(0) = phi''(0) = phi''(1) = 0,
/// acting on a fundamental system built from the matrix exponential of the
/// companion ODE (robust for any root configuration). Away from the critical
/// lambda set the corollary predicts full rank: only phi = 0 satisfies all
/// five conditions.
inline OverdeterminedReport eigenproblem_overdetermined_check(
    double lambda, const std::vector<std::complex<double>>& mu_grid) {
  OverdeterminedReport rep;
  using CMat4 = Eigen::Matrix4cd;
  for (const auto& mu : mu_grid) {
    CMat4 C = CMat4::Zero();
    C(0, 1) = 1.0;
    C(1, 2) = 1.0;
    C(2, 3) = 1.0;
    C(3, 0) = mu;
    C(3, 2) = -lambda;
    const CMat4 Phi1 = C.exp();  // fundamental matrix at x = 1
    Eigen::Matrix<std::complex<double>, 5, 4> B;
    // State ordering (phi, phi', phi'', phi'''); fundamental solutions are
    // the columns of exp(C x), i.e. column k has canonical data e_k at x = 0.
    B.row(0) = Eigen::Matrix<std::complex<double>, 1, 4>{1.0, 0.0, 0.0, 0.0};  // phi(0)
    B.row(1) = Phi1.row(0);                                                    // phi(1)
    B.row(2) = Eigen::Matrix<std::complex<double>, 1, 4>{0.0, 1.0, 0.0, 0.0};  // phi'(0)
    B.row(3) = Eigen::Matrix<std::complex<double>, 1, 4>{0.0, 0.0, 1.0, 0.0};  // phi''(0)
    B.row(4) = Phi1.row(2);                                                    // phi''(1)
    Eigen::JacobiSVD<Eigen::Matrix<std::complex<double>, 5, 4>> svd(B);
    rep.mu_values.push_back(mu);
    rep.smallest_singular_values.push_back(svd.singularValues()(3));
  }
  return rep;
}

}  // namespace ksrapid
