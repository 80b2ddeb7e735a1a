#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "rmtlab/quadrature.hpp"
#include "rmtlab/semicircle.hpp"

using namespace rmtlab;
using std::numbers::pi;

namespace {

// Independent oracle: tanh-sinh handles the square-root endpoints directly.
double oracle_cdf(double x) {
  boost::math::quadrature::tanh_sinh<double> ts;
  if (x <= -2.0) return 0.0;
  return ts.integrate([](double t) { return rho_sc(t); }, -2.0, std::min(x, 2.0));
}

Complex oracle_stieltjes(Complex z) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto re = [z](double x) { return (rho_sc(x) / (x - z)).real(); };
  auto im = [z](double x) { return (rho_sc(x) / (x - z)).imag(); };
  return {ts.integrate(re, -2.0, 2.0), ts.integrate(im, -2.0, 2.0)};
}

}  // namespace

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
  const auto& rule = gauss_legendre(10);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    sum += rule.weights[i] * std::pow(rule.nodes[i], 18);
  }
  CHECK(sum == doctest::Approx(2.0 / 19.0).epsilon(1e-14));
  CHECK(integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("rho_sc") {
  CHECK(rho_sc(0.0) == doctest::Approx(1.0 / pi));
  CHECK(rho_sc(2.0) == 0.0);
  CHECK(rho_sc(-2.0) == 0.0);
  CHECK(rho_sc(3.0) == 0.0);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double mass = ts.integrate([](double x) { return rho_sc(x); }, -2.0, 2.0);
  CHECK(std::abs(mass - 1.0) < 1e-10);
}

TEST_CASE("m_sc closed form") {
  const Complex m = m_sc(Complex(0.0, 1.0));
  // Root of m^2 + z m + 1 = 0 at z = i with positive imaginary part.
  CHECK(std::abs(m - Complex(0.0, (std::sqrt(5.0) - 1.0) / 2.0)) < 1e-14);
  CHECK(std::abs(m + Complex(0.0, 1.0) + 1.0 / m) < 1e-12);

  const Complex z(2.0, 0.5);
  CHECK(std::abs(m_sc(z) - oracle_stieltjes(z)) < 1e-8);
  CHECK(std::abs(m_sc(std::conj(z)) - std::conj(m_sc(z))) < 1e-15);
  CHECK_THROWS_AS(m_sc(Complex(1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("m_sc on a grid: sign, modulus, defining equation") {
  for (double E = -12.0; E <= 12.0; E += 0.37) {
    for (double eta : {1e-6, 1e-3, 0.05, 0.5, 2.0, 40.0}) {
      const Complex z(E, eta);
      const Complex m = m_sc(z);
      CHECK(m.imag() > 0.0);
      CHECK(std::abs(m) <= 1.0 + 1e-14);
      CHECK(std::abs(m + z + 1.0 / m) < 1e-10);
      const Complex mb = m_sc(std::conj(z));
      CHECK(mb.imag() < 0.0);
    }
  }
}

TEST_CASE("Im m_sc two-sided bounds with a fitted constant") {
  double lo = 1e300;
  double hi = 0.0;
  for (double E = -2.0; E <= 2.0; E += 0.01) {
    for (double eta = 1e-4; eta <= 3.0; eta *= 1.5) {
      const double kappa = std::abs(std::abs(E) - 2.0);
      const double ratio = m_sc(Complex(E, eta)).imag() / std::sqrt(kappa + eta);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  const double c = std::min(lo, 1.0 / hi);
  CHECK(c > 0.1);
}

TEST_CASE("semicircle_cdf") {
  CHECK(semicircle_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(semicircle_cdf(2.0) == 1.0);
  CHECK(semicircle_cdf(-2.0) == 0.0);
  CHECK(semicircle_cdf(7.0) == 1.0);
  const double f1 = oracle_cdf(1.0);
  CHECK(std::abs(semicircle_cdf(1.0) - f1) < 1e-10);
  CHECK(std::abs(semicircle_cdf(1.0) - 0.80449889052211468) < 1e-10);
  for (double x = -1.9; x < 2.0; x += 0.3) {
    CHECK(std::abs(semicircle_cdf(x) - oracle_cdf(x)) < 1e-10);
  }
}

TEST_CASE("gamma_quantile") {
  CHECK(gamma_quantile(1000, 1000) == 2.0);
  CHECK(gamma_quantile(500, 1000) == 0.0);
  CHECK_THROWS_AS(gamma_quantile(0, 10), std::out_of_range);
  CHECK_THROWS_AS(gamma_quantile(11, 10), std::out_of_range);

  // Bisection on the quadrature CDF.
  double lo = -2.0;
  double hi = 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (oracle_cdf(mid) < 1e-3 ? lo : hi) = mid;
  }
  CHECK(std::abs(gamma_quantile(1, 1000) - 0.5 * (lo + hi)) < 1e-9);

  const auto table = quantile_table(301);
  for (std::size_t i = 1; i <= 301; ++i) {
    CHECK(std::abs(semicircle_cdf(table.gamma[i - 1]) - double(i) / 301.0) < 1e-10);
    if (i > 1) CHECK(table.gamma[i - 1] > table.gamma[i - 2]);
    // F(-x) = 1 - F(x) gives gamma_i = -gamma_{N-i}.
    if (i < 301) CHECK(std::abs(table.gamma[i - 1] + table.gamma[301 - i - 1]) < 1e-12);
    CHECK(table.delta[i - 1] > 0.0);
  }
}

TEST_CASE("gap_scale") {
  CHECK(gap_scale(1, 1000) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(gap_scale(1000, 1000) == doctest::Approx(0.01).epsilon(1e-12));
  for (std::size_t k = 2; k <= 500; ++k) {
    CHECK(gap_scale(k, 1000) < gap_scale(k - 1, 1000));
  }
  CHECK(gap_scale(3, 1000) == gap_scale(998, 1000));
}

TEST_CASE("psi") {
  const double im = m_sc(Complex(0.0, 1.0)).imag();
  CHECK(psi(SpectralPoint(0.0, 1.0), 100) ==
        doctest::Approx(std::sqrt(im / 100.0) + 0.01).epsilon(1e-14));
  CHECK(psi(SpectralPoint(0.3, -0.2), 100) == doctest::Approx(psi(SpectralPoint(0.3, 0.2), 100)));

  double prev = psi(SpectralPoint(0.5, 1.0), 1000);
  for (double eta = 1.1; eta < 50.0; eta *= 1.1) {
    const double cur = psi(SpectralPoint(0.5, eta), 1000);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("psi lower bound over the spectral domain with a fitted constant") {
  const double tau = 0.2;
  auto fitted = [tau](std::size_t N) {
    double c = 1e300;
    const double lo = std::pow(double(N), -1.0 + tau / 10.0);
    for (double E = -10.0 / tau; E <= 10.0 / tau; E += 0.25) {
      for (double eta = lo; eta <= 10.0 / tau; eta *= 1.3) {
        SpectralPoint z(E, eta);
        REQUIRE(z.in_domain(tau, N));
        c = std::min(c, psi(z, N) / (std::pow(tau, 0.25) / std::sqrt(double(N))));
      }
    }
    return c;
  };
  const double c1 = fitted(1000);
  const double c2 = fitted(4000);
  CHECK(c1 > 0.0);
  // The same constant serves both sizes.
  CHECK(std::abs(c1 / c2 - 1.0) < 0.1);
}

TEST_CASE("spectral domain membership") {
  CHECK(SpectralPoint(0.0, 0.5).in_domain(0.2, 1000));
  CHECK_FALSE(SpectralPoint(51.0, 0.5).in_domain(0.2, 1000));
  CHECK_FALSE(SpectralPoint(0.0, 1e-4).in_domain(0.2, 1000));
  CHECK(SpectralPoint(0.0, -0.5).in_domain(0.2, 1000));
  CHECK_THROWS_AS(SpectralPoint(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("m_divided") {
  const std::vector<Complex> one{{0.4, 0.3}};
  CHECK(std::abs(m_divided(one).value - m_sc(one[0])) < 1e-10);

  const Complex z1(0.4, 0.3);
  const Complex z2(-1.1, -0.2);
  const std::vector<Complex> pair{z1, z2};
  const Complex expected = (m_sc(z1) - m_sc(z2)) / (z1 - z2);
  CHECK(std::abs(m_divided(pair).value - expected) < 1e-8);

  const std::vector<Complex> triple{z1, z2, {1.9, 0.05}};
  const std::vector<Complex> shuffled{{1.9, 0.05}, z1, z2};
  CHECK(std::abs(m_divided(triple).value - m_divided(shuffled).value) < 1e-9);

  // Confluent pair: m'(z) = m^2 / (1 - m^2).
  const std::vector<Complex> twice{z1, z1};
  const Complex m = m_sc(z1);
  CHECK(std::abs(m_divided(twice).value - m * m / (1.0 - m * m)) < 1e-8);

  const std::vector<Complex> bad{{0.1, 0.0}};
  CHECK_THROWS_AS(m_divided(bad), std::invalid_argument);
}
