#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "ksrapid/kernel_synthesis.hpp"

using namespace ksrapid;
using Catch::Approx;
using cdbl = std::complex<double>;

namespace {

// Polynomial-root oracle: eigenvalues of the companion matrix of
// r^4 + lambda r^2 + (a + mu_j).
std::vector<cdbl> quartic_roots_oracle(double lambda, double shifted) {
  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  C(1, 0) = 1.0;
  C(2, 1) = 1.0;
  C(3, 2) = 1.0;
  C(0, 3) = -shifted;  // -(a + mu)
  C(2, 3) = -lambda;
  Eigen::EigenSolver<Eigen::Matrix4d> es(C);
  std::vector<cdbl> out;
  for (int i = 0; i < 4; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

double min_dist_to(const std::vector<cdbl>& set, cdbl z) {
  double best = 1e300;
  for (const auto& s : set) best = std::min(best, std::abs(s - z));
  return best;
}

}  // namespace

TEST_CASE("characteristic roots solve the quartic") {
  for (double lambda : {1.0, 45.0}) {
    const double a = (lambda == 1.0) ? 10.0 : 400.0;
    for (int j = 1; j <= 128; ++j) {
      const double mu = eigenvalue(j, lambda);
      const auto r = characteristic_roots(j, lambda, a);
      for (cdbl root : {r.r1, r.r2(), r.r3, r.r4()}) {
        const cdbl res = root * root * root * root + lambda * root * root + (a + mu);
        CHECK(std::abs(res) <= 1e-8 * (1.0 + std::abs(a + mu)));
      }
    }
  }
}

TEST_CASE("roots match the companion-matrix oracle at j=1, lambda=1, a=10") {
  const double lambda = 1.0, a = 10.0;
  const double shifted = a + eigenvalue(1, lambda);  // ~ -77.5395
  CHECK(shifted == Approx(-77.5395).epsilon(1e-5));
  const auto oracle = quartic_roots_oracle(lambda, shifted);
  const auto r = characteristic_roots(1, lambda, a);
  CHECK(min_dist_to(oracle, r.r1) <= 1e-10);
  CHECK(min_dist_to(oracle, r.r3) <= 1e-10);
  // Branch identification: r1 real ~ 2.8844, i*r4 real ~ 3.0528.
  CHECK(r.r1.imag() == Approx(0.0).margin(1e-12));
  CHECK(r.r1.real() == Approx(2.8844).epsilon(1e-4));
  CHECK(r.i_r4().imag() == Approx(0.0).margin(1e-12));
  CHECK(r.i_r4().real() == Approx(3.0528).epsilon(1e-4));
}

TEST_CASE("root asymptotics") {
  const double lambda = 1.0, a = 10.0;
  SECTION("r1/(j pi) -> 1") {
    const auto r = characteristic_roots(256, lambda, a);
    CHECK(std::abs(r.r1 / (256.0 * kPi) - 1.0) < 1e-3);
  }
  SECTION("|r1 - j pi + lambda/(2 j pi)| j^3 bounded") {
    double worst = 0.0;
    for (int j = 1; j <= 128; ++j) {
      const auto r = characteristic_roots(j, lambda, a);
      const cdbl dev = r.r1 - j * kPi + lambda / (2.0 * j * kPi);
      worst = std::max(worst, std::abs(dev) * std::pow(double(j), 3));
    }
    // Leading error constant is (a/4 + lambda^2/8)/pi^3 ~ 0.085 here.
    CHECK(worst < 0.5);
  }
  SECTION("|i r4 - (j pi - a/(4 j^3 pi^3))| j^5 bounded") {
    double worst = 0.0;
    for (int j = 1; j <= 128; ++j) {
      const auto r = characteristic_roots(j, lambda, a);
      const cdbl dev = r.i_r4() - (j * kPi - a / (4.0 * std::pow(j * kPi, 3)));
      worst = std::max(worst, std::abs(dev) * std::pow(double(j), 5));
    }
    CHECK(worst < 0.1);
  }
}

TEST_CASE("degenerate root configurations are rejected") {
  // Force a + mu_1 = 0 by hand: lambda = 1, a = -mu_1.
  const double lambda = 1.0;
  const double a = -eigenvalue(1, lambda);
  CHECK_THROWS_AS(characteristic_roots(1, lambda, a), DegenerateRoots);
  // Force lambda^2 = 4 (a + mu_1).
  const double a2 = lambda * lambda / 4.0 - eigenvalue(1, lambda);
  CHECK_THROWS_AS(characteristic_roots(1, lambda, a2), DegenerateRoots);
  // A clean j is unaffected.
  CHECK_NOTHROW(characteristic_roots(2, lambda, a));
}

TEST_CASE("mode shape satisfies its boundary value problem") {
  const double lambda = 1.0, a = 10.0;
  for (int j : {1, 2, 3, 7, 20, 64, 128}) {
    const auto m = mode_shape(j, lambda, a);
    CHECK(m.value(0.0) == Approx(0.0).margin(1e-8));
    CHECK(m.value(1.0) == Approx(0.0).margin(1e-8));
    CHECK(m.deriv2(1.0) == Approx(0.0).margin(1e-8));
    CHECK(m.deriv2(0.0) == Approx(1.0).epsilon(1e-8));

    // Defining ODE at 20 interior points: psi'''' + lambda psi'' + (a+mu) psi = 0.
    const double mu = eigenvalue(j, lambda);
    double scale = 0.0;
    std::vector<double> res;
    for (int i = 1; i <= 20; ++i) {
      const double x = i / 21.0;
      const double d4 = m.deriv4(x), d2 = m.deriv2(x), v = m.value(x);
      scale = std::max({scale, std::abs(d4), std::abs(lambda * d2), std::abs((a + mu) * v)});
      res.push_back(d4 + lambda * d2 + (a + mu) * v);
    }
    for (double r : res) CHECK(std::abs(r) <= 1e-6 * scale);
  }
}

TEST_CASE("alpha coefficients match the 4x4 boundary-condition system") {
  const double lambda = 1.0, a = 10.0;
  const auto m = mode_shape(1, lambda, a);
  // alpha1 = 1/sqrt(lambda^2 - 4(a+mu_1)) = 1/sqrt(311.158) by direct substitution.
  const double disc = lambda * lambda - 4.0 * (a + eigenvalue(1, lambda));
  CHECK(disc == Approx(311.158).epsilon(1e-5));
  CHECK(std::abs(m.alpha1 - 1.0 / std::sqrt(disc)) <= 1e-12);
  CHECK(std::abs(m.alpha1) == Approx(0.05669).epsilon(1e-3));
  CHECK(std::abs(m.alpha1 + m.alpha3) <= 1e-15);

  // Independent cross-check: solve the boundary-condition linear system for
  // the expansion psi = b1 cosh(r1 x) + b2 sinh(r1 x) + b3 cos(i r3 x) + b4 sin(i r4 x).
  const auto r = m.roots;
  const cdbl i(0.0, 1.0);
  Eigen::Matrix4cd A;
  Eigen::Vector4cd rhs;
  auto row = [&](int k, cdbl c1, cdbl c2, cdbl c3, cdbl c4, cdbl b) {
    A(k, 0) = c1;
    A(k, 1) = c2;
    A(k, 2) = c3;
    A(k, 3) = c4;
    rhs(k) = b;
  };
  // psi(0) = 0, psi''(0) = 1, psi(1) = 0, psi''(1) = 0.
  row(0, 1.0, 0.0, 1.0, 0.0, 0.0);
  row(1, r.r1 * r.r1, 0.0, r.r3 * r.r3, 0.0, 1.0);
  row(2, std::cosh(r.r1), std::sinh(r.r1), std::cos(i * r.r3), std::sin(i * r.r4()), 0.0);
  row(3, r.r1 * r.r1 * std::cosh(r.r1), r.r1 * r.r1 * std::sinh(r.r1),
      r.r3 * r.r3 * std::cos(i * r.r3), r.r4() * r.r4() * std::sin(i * r.r4()), 0.0);
  Eigen::Vector4cd alpha = A.fullPivLu().solve(rhs);
  CHECK(std::abs(alpha(0) - m.alpha1) <= 1e-10);
  CHECK(std::abs(alpha(1) - m.alpha2) <= 1e-10);
  CHECK(std::abs(alpha(2) - m.alpha3) <= 1e-10);
  CHECK(std::abs(alpha(3) - m.alpha4) <= 1e-10);
}

TEST_CASE("mode shape stays finite and real at large j (overflow safety)") {
  const double lambda = 1.0, a = 10.0;
  const auto m = mode_shape(128, lambda, a);
  for (double x : {0.0, 1e-3, 0.25, 0.5, 0.75, 1.0 - 1e-3, 1.0}) {
    const double v = m.value(x);  // throws if the imaginary residue is large
    CHECK(std::isfinite(v));
  }
  // The dominant oscillatory part has amplitude ~ |alpha1 / sin(i r4)|;
  // against a_j ~ a/(sqrt(2) j pi) the product stays O(1).
  double sup = 0.0;
  for (int i = 0; i <= 200; ++i) sup = std::max(sup, std::abs(m.value(i / 200.0)));
  const double aj = a / (std::sqrt(2.0) * 128.0 * kPi);
  CHECK(sup * aj < 10.0);
  CHECK(sup * aj > 0.1);
}

TEST_CASE("coupling coefficients") {
  const double lambda = 1.0, a = 10.0;
  CHECK(coupling_coefficient(1, 2, lambda, a) ==
        Approx(1.0 / (-eigenvalue(1, lambda) + eigenvalue(2, lambda) + a)).epsilon(1e-14));
  CHECK(coupling_coefficient(1, 2, lambda, a) == Approx(-7.0347e-4).epsilon(1e-4));
  CHECK(coupling_coefficient(5, 5, lambda, a) == Approx(1.0 / a).epsilon(1e-14));

  // Row-sum bound sum_{k != j} |a_jk| <= C (1 + ln j)/j^3 with a fitted C.
  const int K = 4096;
  double worst_ratio = 0.0;
  for (int j : {1, 2, 4, 8, 16, 32, 64, 128}) {
    double s = 0.0;
    for (int k = 1; k <= K; ++k)
      if (k != j) s += std::abs(coupling_coefficient(j, k, lambda, a));
    worst_ratio = std::max(worst_ratio, s * std::pow(double(j), 3) / (1.0 + std::log(double(j))));
  }
  CHECK(worst_ratio < 1.0);    // fitted constant is modest
  CHECK(worst_ratio > 0.001);  // and the bound is not vacuous
}

TEST_CASE("coefficient system") {
  SECTION("N = 1 gives c_1 = 1") {
    Parameters p;
    p.lambda = 1.0;
    p.a = 10.0;
    p.nu = 50.0;
    p.n_kernel = 1;
    p.n_sim = 1;
    const auto sol = solve_coefficients(p);
    CHECK(sol.c.size() == 1);
    CHECK(sol.c(0) == Approx(1.0).epsilon(1e-14));
  }

  Parameters p;
  p.lambda = 1.0;
  p.a = 10.0;
  p.nu = 50.0;

  SECTION("|c_j - 1| decays like (1 + ln j)/j^3: log-log fit slope in [0.8, 1.2]") {
    p.n_kernel = 64;
    p.n_sim = 256;
    const auto sol = solve_coefficients(p);
    const int N = p.n_kernel;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int j = N / 4; j <= N; ++j) {
      const double dev = std::abs(sol.c(j - 1) - 1.0);
      REQUIRE(dev > 0.0);
      const double X = std::log((1.0 + std::log(double(j))) / std::pow(double(j), 3));
      const double Y = std::log(dev);
      sx += X;
      sy += Y;
      sxx += X * X;
      sxy += X * Y;
      ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope >= 0.8);
    CHECK(slope <= 1.2);
  }

  SECTION("truncation convergence: doubling N moves c_1 by <= 1e-6") {
    p.n_kernel = 64;
    p.n_sim = 256;
    const auto c64 = solve_coefficients(p).c;
    p.n_kernel = 128;
    const auto c128 = solve_coefficients(p).c;
    const double delta = std::abs(c64(0) - c128(0));
    INFO("observed |c_1(64) - c_1(128)| = " << delta);
    CHECK(delta <= 1e-6);
  }
}
