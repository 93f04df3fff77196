#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "ksrapid/errors.hpp"

namespace ksrapid {

/// Smooth test function on the unit square for the transposition identity.
/// Membership in the test class E requires
///   rho(0,y) = rho(1,y) = rho(x,0) = rho(x,1) = 0,
///   rho_x(0,y) = rho_xx(0,y) = rho_xx(1,y) = rho_yy(x,1) = 0.
struct TestFunction2D {
  std::function<double(double, double)> value;
  std::function<double(double, double)> dx;
  std::function<double(double, double)> dxx;
  std::function<double(double, double)> dxxxx;
  std::function<double(double, double)> dyy;
  std::function<double(double, double)> dyyyy;
  std::string name = "rho";
};

/// Verifies the eight boundary constraints of E on a sample grid.
inline void check_test_function(const TestFunction2D& rho, double tol = 1e-8) {
  const int n = 17;
  double worst = 0.0;
  std::string which;
  auto track = [&](double v, const char* label) {
    if (std::abs(v) > worst) {
      worst = std::abs(v);
      which = label;
    }
  };
  for (int i = 0; i <= n; ++i) {
    const double s = double(i) / n;
    track(rho.value(0.0, s), "rho(0,y)");
    track(rho.value(1.0, s), "rho(1,y)");
    track(rho.value(s, 0.0), "rho(x,0)");
    track(rho.value(s, 1.0), "rho(x,1)");
    track(rho.dx(0.0, s), "rho_x(0,y)");
    track(rho.dxx(0.0, s), "rho_xx(0,y)");
    track(rho.dxx(1.0, s), "rho_xx(1,y)");
    track(rho.dyy(s, 1.0), "rho_yy(x,1)");
  }
  if (worst > tol)
    throw InvalidTestFunction("test function '" + rho.name + "' violates " + which +
                              " = 0 by " + std::to_string(worst));
}

/// Polynomial in one variable with exact differentiation, for building
/// separable members of E.
struct Poly1D {
  Eigen::VectorXd coeffs;  // coeffs[k] * x^k

  double eval(double x) const {
    double v = 0.0;
    for (int k = int(coeffs.size()) - 1; k >= 0; --k) v = v * x + coeffs(k);
    return v;
  }
  Poly1D deriv() const {
    if (coeffs.size() <= 1) return Poly1D{Eigen::VectorXd::Zero(1)};
    Eigen::VectorXd d(coeffs.size() - 1);
    for (int k = 1; k < coeffs.size(); ++k) d(k - 1) = k * coeffs(k);
    return Poly1D{d};
  }
  Poly1D deriv(int order) const {
    Poly1D p = *this;
    for (int i = 0; i < order; ++i) p = p.deriv();
    return p;
  }
  /// x^p (1-x)^q expanded into monomials.
  static Poly1D bernstein(int p, int q) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p + q + 1);
    double binom = 1.0;
    for (int i = 0; i <= q; ++i) {
      c(p + i) = ((i % 2) ? -binom : binom);
      binom = binom * (q - i) / (i + 1);
    }
    return Poly1D{c};
  }
};

/// rho(x,y) = f(x) g(y) with all partials taken analytically.
inline TestFunction2D separable_test_function(const Poly1D& f, const Poly1D& g,
                                              std::string name = "separable") {
  TestFunction2D t;
  const Poly1D f1 = f.deriv(), f2 = f.deriv(2), f4 = f.deriv(4);
  const Poly1D g2 = g.deriv(2), g4 = g.deriv(4);
  t.value = [f, g](double x, double y) { return f.eval(x) * g.eval(y); };
  t.dx = [f1, g](double x, double y) { return f1.eval(x) * g.eval(y); };
  t.dxx = [f2, g](double x, double y) { return f2.eval(x) * g.eval(y); };
  t.dxxxx = [f4, g](double x, double y) { return f4.eval(x) * g.eval(y); };
  t.dyy = [f, g2](double x, double y) { return f.eval(x) * g2.eval(y); };
  t.dyyyy = [f, g4](double x, double y) { return f.eval(x) * g4.eval(y); };
  t.name = std::move(name);
  return t;
}

}  // namespace ksrapid
