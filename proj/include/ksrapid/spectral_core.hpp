#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksrapid {

inline constexpr double kPi = 3.14159265358979323846;

/// Positive mode number of the sine eigenbasis on (0,1).
struct ModeIndex {
  int value;
  explicit ModeIndex(int j) : value(j) {
    if (j < 1) throw std::invalid_argument("ModeIndex must be >= 1, got " + std::to_string(j));
  }
};

/// Physical/control constants plus discretization knobs. One instance is the
/// single source of admissibility truth for a whole pipeline run.
struct Parameters {
  double lambda = 1.0;        // anti-diffusion coefficient
  double a = 10.0;            // kernel shift
  double nu = 0.0;            // target decay rate; 0 means "pick 0.5*(a - max mu)"
  int n_kernel = 64;          // kernel truncation N
  int n_sim = 256;            // simulation grid resolution
  double eps_critical = 1e-6; // distance tolerance to the critical sets
  double t_final = 0.05;
  double dt = 2e-5;
};

/// mu_j = -j^4 pi^4 + lambda j^2 pi^2, the j-th eigenvalue of the linear
/// operator -d^4/dx^4 - lambda d^2/dx^2 with Navier boundary conditions.
inline double eigenvalue(ModeIndex j, double lambda) {
  const double jp = j.value * kPi;
  const double jp2 = jp * jp;
  return -jp2 * jp2 + lambda * jp2;
}

inline double eigenvalue(int j, double lambda) { return eigenvalue(ModeIndex(j), lambda); }

/// phi_j(x) = sqrt(2) sin(j pi x), orthonormal in L^2(0,1).
inline double eigenfunction_eval(ModeIndex j, double x) {
  return std::sqrt(2.0) * std::sin(j.value * kPi * x);
}
inline double eigenfunction_eval(int j, double x) { return eigenfunction_eval(ModeIndex(j), x); }

inline double eigenfunction_deriv(ModeIndex j, double x) {
  return std::sqrt(2.0) * j.value * kPi * std::cos(j.value * kPi * x);
}
inline double eigenfunction_deriv(int j, double x) { return eigenfunction_deriv(ModeIndex(j), x); }

inline double eigenfunction_deriv2(int j, double x) {
  const double jp = j * kPi;
  return -std::sqrt(2.0) * jp * jp * std::sin(jp * x);
}

/// min over 1 <= j < k <= j_max of |lambda - (j^2+k^2) pi^2|.
/// The set grows like k^2 pi^2, so a window covering all elements below
/// lambda plus the first band above it makes the finite search exact; see
/// critical_lambda_window.
inline double dist_to_critical_lambda(double lambda, int j_max) {
  if (j_max < 2) throw std::invalid_argument("dist_to_critical_lambda needs j_max >= 2");
  double best = std::numeric_limits<double>::infinity();
  for (int j = 1; j < j_max; ++j)
    for (int k = j + 1; k <= j_max; ++k) {
      const double elem = (double(j) * j + double(k) * k) * kPi * kPi;
      best = std::min(best, std::abs(lambda - elem));
    }
  return best;
}

/// Window size that makes dist_to_critical_lambda exact for this lambda:
/// every element (j^2+k^2)pi^2 <= lambda has k <= sqrt(lambda)/pi, and any
/// element with k one past that bound already lies above lambda, so the
/// nearest element from above is inside the window too.
inline int critical_lambda_window(double lambda) {
  const int w = static_cast<int>(std::ceil(std::sqrt(std::max(lambda, 0.0)) / kPi)) + 2;
  return std::max(w, 2);
}

/// min over 1 <= j,k <= j_max of |a - (mu_k - mu_j)|. Note j = k puts 0 in
/// the set, so a = 0 is always at distance zero.
inline double dist_to_critical_a(double a, double lambda, int j_max) {
  if (j_max < 1) throw std::invalid_argument("dist_to_critical_a needs j_max >= 1");
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> mu(j_max + 1);
  for (int j = 1; j <= j_max; ++j) mu[j] = eigenvalue(j, lambda);
  for (int j = 1; j <= j_max; ++j)
    for (int k = 1; k <= j_max; ++k) best = std::min(best, std::abs(a - (mu[k] - mu[j])));
  return best;
}

/// Window that makes dist_to_critical_a exact. For k > j,
///   |mu_k - mu_j| = (k^2-j^2) pi^2 |(k^2+j^2) pi^2 - lambda|,
/// so once k^2 pi^2 >= 2 lambda the element magnitude is at least
/// k^3 pi^4 / 2; elements within |a|+1 of a therefore have
/// max(j,k) <= max(sqrt(2 lambda)/pi, cbrt(2(|a|+1)/pi^4)).
inline int critical_a_window(double a, double lambda) {
  const double k_lam = std::sqrt(2.0 * std::max(lambda, 0.0)) / kPi;
  const double k_mag = std::cbrt(2.0 * (std::abs(a) + 1.0) / (kPi * kPi * kPi * kPi));
  const int w = static_cast<int>(std::ceil(std::max(k_lam, k_mag))) + 2;
  return std::max(w, 2);
}

struct MaxMuResult {
  double value;
  int j;
};

/// Largest eigenvalue mu_j and its index. As a function of continuous j,
/// mu peaks at j^2 = lambda / (2 pi^2), so scanning to ceil(sqrt(lambda)/pi)+2
/// is exhaustive.
inline MaxMuResult max_mu(double lambda) {
  const int cap = std::max(3, static_cast<int>(std::ceil(std::sqrt(std::max(lambda, 0.0)) / kPi)) + 2);
  MaxMuResult best{eigenvalue(1, lambda), 1};
  for (int j = 2; j <= cap; ++j) {
    const double m = eigenvalue(j, lambda);
    if (m > best.value) best = {m, j};
  }
  return best;
}

struct ValidationCheck {
  std::string name;
  bool passed;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed = true;
  double margin = 0.0;  // a - max_j mu_j - nu
  double max_mu_value = 0.0;
  int max_mu_index = 1;
  double nu_effective = 0.0;

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks)
      os << (c.passed ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    return os.str();
  }
};

/// nu = 0 in Parameters means "default to half the available decay band".
inline double effective_nu(const Parameters& p) {
  if (p.nu > 0.0) return p.nu;
  const auto mm = max_mu(p.lambda);
  return 0.5 * (p.a - mm.value);
}

/// Structured admissibility report; never throws so the CLI can print
/// actionable diagnostics for rejected configurations.
inline ValidationReport validate(const Parameters& p) {
  ValidationReport rep;
  auto add = [&rep](const std::string& name, bool ok, const std::string& detail) {
    rep.checks.push_back({name, ok, detail});
    rep.all_passed = rep.all_passed && ok;
  };
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
  };

  add("eps_critical > 0", p.eps_critical > 0.0, "eps_critical = " + fmt(p.eps_critical));
  add("dt > 0", p.dt > 0.0, "dt = " + fmt(p.dt));
  add("t_final >= dt", p.t_final >= p.dt, "t_final = " + fmt(p.t_final));
  add("n_kernel >= 1", p.n_kernel >= 1, "n_kernel = " + std::to_string(p.n_kernel));
  add("n_sim >= n_kernel", p.n_sim >= p.n_kernel,
      "n_sim = " + std::to_string(p.n_sim) + ", n_kernel = " + std::to_string(p.n_kernel));

  const double dl = dist_to_critical_lambda(p.lambda, critical_lambda_window(p.lambda));
  add("lambda not in N", dl > p.eps_critical,
      "dist(lambda, N) = " + fmt(dl) + (dl > p.eps_critical ? "" : "  <-- lambda in N"));

  const double da = dist_to_critical_a(p.a, p.lambda, critical_a_window(p.a, p.lambda));
  add("a not in N1", da > p.eps_critical,
      "dist(a, N1) = " + fmt(da) + (da > p.eps_critical ? "" : "  <-- a in N1"));

  const auto mm = max_mu(p.lambda);
  rep.max_mu_value = mm.value;
  rep.max_mu_index = mm.j;
  add("a > max_j mu_j", p.a > mm.value,
      "a = " + fmt(p.a) + ", max mu = mu_" + std::to_string(mm.j) + " = " + fmt(mm.value));

  const double nu = effective_nu(p);
  rep.nu_effective = nu;
  rep.margin = p.a - mm.value - nu;
  add("0 < nu < a - max_j mu_j", nu > 0.0 && nu < p.a - mm.value,
      "nu = " + fmt(nu) + ", bound = " + fmt(p.a - mm.value) + ", margin = " + fmt(rep.margin));

  return rep;
}

}  // namespace ksrapid
