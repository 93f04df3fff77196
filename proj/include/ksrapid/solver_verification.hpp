#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "ksrapid/ks_solver.hpp"

namespace ksrapid {

// Solver verification studies: manufactured-solution time order, boundary
// lifting accuracy, and the discrete energy identity. Shared between the
// acceptance suite and the CLI's solver_check experiment.

inline Eigen::VectorXd sampled_sine(int j, int n, double amp = 1.0) {
  Eigen::VectorXd u(n);
  const double h = 1.0 / (n + 1);
  for (int i = 1; i <= n; ++i) u(i - 1) = amp * std::sin(j * kPi * i * h);
  return u;
}

struct ManufacturedStudy {
  double diff_coarse = 0.0;   // ||u_dt - u_dt/2||
  double diff_fine = 0.0;     // ||u_dt/2 - u_dt/4||
  double observed_order = 0.0;
  double final_error = 0.0;   // against the manufactured solution at T
};

/// u* = e^{-t} sin(pi x) solves the full nonlinear equation with forcing
///   e^{-t}(pi^4 - lambda pi^2 - 1) sin(pi x) + e^{-2t} (pi/2) sin(2 pi x);
/// the observed dt-order comes from consecutive-refinement differences so the
/// fixed spatial error cancels.
inline ManufacturedStudy manufactured_solution_study(double lambda = 1.0, int n = 192,
                                                     double T = 4e-3, int coarse_steps = 4) {
  auto exact = [&](double t) {
    Eigen::VectorXd u(n);
    const double h = 1.0 / (n + 1);
    for (int i = 1; i <= n; ++i) u(i - 1) = std::exp(-t) * std::sin(kPi * i * h);
    return u;
  };
  auto forcing_at = [&](double t) {
    Forcing f;
    f.interior.resize(n);
    const double h = 1.0 / (n + 1);
    const double c1 = (std::pow(kPi, 4) - lambda * kPi * kPi - 1.0) * std::exp(-t);
    const double c2 = 0.5 * kPi * std::exp(-2.0 * t);
    for (int i = 1; i <= n; ++i)
      f.interior(i - 1) = c1 * std::sin(kPi * i * h) + c2 * std::sin(2 * kPi * i * h);
    return f;
  };
  auto run = [&](int steps) {
    SolverConfig cfg;
    cfg.grid_size = n;
    cfg.dt = T / steps;
    cfg.picard_sweeps = 1;
    GridSolver solver(lambda, cfg);
    std::function<Forcing(double)> fcb = forcing_at;
    Eigen::VectorXd u = exact(0.0);
    double t = 0.0;
    for (int s = 0; s < steps; ++s) {
      u = solver.advance(u, t, BoundaryData::none(), &fcb).u;
      t += cfg.dt;
    }
    return u;
  };
  const Eigen::VectorXd u1 = run(coarse_steps);
  const Eigen::VectorXd u2 = run(2 * coarse_steps);
  const Eigen::VectorXd u3 = run(4 * coarse_steps);
  ManufacturedStudy st;
  st.diff_coarse = grid_l2_norm(u1 - u2);
  st.diff_fine = grid_l2_norm(u2 - u3);
  st.observed_order = std::log2(st.diff_coarse / st.diff_fine);
  st.final_error = grid_l2_norm(u3 - exact(T));
  return st;
}

struct LiftStudy {
  std::vector<int> grids;
  std::vector<double> errors;   // |measured u_xx(0) - h| per grid
  double order = 0.0;           // observed order between the last two grids
};

/// Fourth-order one-sided estimate of u_xx(0) from interior values with
/// u(0) = 0 (forward stencil on six nodes).
inline double one_sided_second_derivative_at_0(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  const double h = 1.0 / (n + 1);
  const double c[6] = {45.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0};
  double s = 0.0;
  for (int k = 1; k <= 5; ++k) s += c[k] * u(k - 1);
  return s / (h * h);
}

inline LiftStudy lift_boundary_study(double target = 3.0,
                                     std::vector<int> grids = {64, 128, 256}) {
  LiftStudy st;
  st.grids = grids;
  for (int n : grids) {
    const StateField hom = StateField::grid(sampled_sine(1, n, std::sqrt(2.0)));
    const StateField lifted = lift_boundary(hom, target);
    st.errors.push_back(std::abs(one_sided_second_derivative_at_0(lifted.data) - target));
  }
  const auto k = st.errors.size();
  if (k >= 2 && st.errors[k - 1] > 0.0)
    st.order = std::log2(st.errors[k - 2] / st.errors[k - 1]);
  return st;
}

struct EnergyStudy {
  double residual = 0.0;
  double scale = 0.0;
  double relative = 0.0;
};

/// Discrete counterpart of the homogeneous energy balance
///   |u(t)|^2 - |u(0)|^2 + 2 int int u_xx^2 - 2 lambda int int u_x^2 = 0,
/// with midpoint time quadrature and trapezoid space quadrature (wall values
/// of u_x included; u and u_xx vanish there).
inline EnergyStudy energy_identity_study(double lambda = 1.0, int n = 256, double dt = 2e-5,
                                         double t_final = 0.01) {
  SolverConfig cfg;
  cfg.grid_size = n;
  cfg.dt = dt;
  cfg.nonlinear = false;
  GridSolver solver(lambda, cfg);
  Eigen::VectorXd u =
      std::sqrt(2.0) * (sampled_sine(1, n) + 0.3 * sampled_sine(2, n));
  const double e0 = grid_l2_norm(u) * grid_l2_norm(u);
  const double h = 1.0 / (n + 1);
  auto int_ux_sq = [&](const Eigen::VectorXd& v) {
    const fd::GhostValues g = fd::ghosts(v, {});
    const Eigen::VectorXd ux = fd::apply_d1(v, g.lm1, g.rp1);
    const double ux0 = (16.0 * v(0) - 2.0 * v(1)) / (12.0 * h);
    const double ux1 = (2.0 * v(n - 2) - 16.0 * v(n - 1)) / (12.0 * h);
    return h * (ux.squaredNorm() + 0.5 * ux0 * ux0 + 0.5 * ux1 * ux1);
  };
  double budget = 0.0;
  const int steps = static_cast<int>(std::round(t_final / dt));
  for (int s = 0; s < steps; ++s) {
    const Eigen::VectorXd u_next = solver.linear_step(u, 0.0, 0.0, {});
    const Eigen::VectorXd u_mid = 0.5 * (u + u_next);
    const Eigen::VectorXd uxx = fd::apply_d2(u_mid);
    budget += dt * 2.0 * (h * uxx.squaredNorm() - lambda * int_ux_sq(u_mid));
    u = u_next;
  }
  const double e1 = grid_l2_norm(u) * grid_l2_norm(u);
  EnergyStudy st;
  st.residual = e1 - e0 + budget;
  st.scale = std::max({e0, std::abs(budget), 1e-30});
  st.relative = std::abs(st.residual) / st.scale;
  return st;
}

struct GridConvergenceStudy {
  double err_coarse = 0.0;
  double err_fine = 0.0;
  double reduction = 0.0;  // err_coarse / err_fine under one halving of h
};

/// Linear homogeneous run against exact modal exponentials; with band-limited
/// data the ghost closure is exact and the interior stencils give clean
/// fourth-order convergence in h.
inline GridConvergenceStudy grid_convergence_study(double lambda = 0.0, double T = 2e-3,
                                                   double dt = 2e-7, int n_coarse = 32) {
  auto err_at = [&](int n) {
    SolverConfig cfg;
    cfg.grid_size = n;
    cfg.dt = dt;
    cfg.nonlinear = false;
    GridSolver solver(lambda, cfg);
    Eigen::VectorXd u =
        std::sqrt(2.0) * (sampled_sine(1, n) + sampled_sine(2, n));
    const int steps = static_cast<int>(std::round(T / dt));
    for (int s = 0; s < steps; ++s) u = solver.linear_step(u, 0.0, 0.0, {});
    const Eigen::VectorXd exact =
        std::sqrt(2.0) * (std::exp(eigenvalue(1, lambda) * T) * sampled_sine(1, n) +
                          std::exp(eigenvalue(2, lambda) * T) * sampled_sine(2, n));
    return grid_l2_norm(u - exact);
  };
  GridConvergenceStudy st;
  st.err_coarse = err_at(n_coarse);
  st.err_fine = err_at(2 * n_coarse);
  st.reduction = st.err_coarse / st.err_fine;
  return st;
}

}  // namespace ksrapid
