#include "rmtlab/semicircle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rmtlab/quadrature.hpp"

namespace rmtlab {

using std::numbers::pi;

SpectralPoint::SpectralPoint(double E, double eta) : E_(E), eta_(eta) {
  if (!(eta != 0.0) || !std::isfinite(eta) || !std::isfinite(E)) {
    throw std::invalid_argument("SpectralPoint: eta must be finite and nonzero");
  }
}

bool SpectralPoint::in_domain(double tau, std::size_t N) const {
  const double a = std::abs(eta_);
  const double lo = std::pow(static_cast<double>(N), -1.0 + tau / 10.0);
  return std::abs(E_) <= 10.0 / tau && a >= lo && a <= 10.0 / tau;
}

double rho_sc(double E) {
  const double s = 4.0 - E * E;
  return s > 0.0 ? std::sqrt(s) / (2.0 * pi) : 0.0;
}

Complex m_sc(Complex z) {
  if (!(z.imag() != 0.0)) {
    throw std::invalid_argument("m_sc: z must have nonzero imaginary part");
  }
  // sqrt(z-2)*sqrt(z+2) carries the cut on [-2, 2] and behaves like z at
  // infinity; pick the algebraically stable form of the decaying root.
  const Complex s = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  const Complex plus = z + s;
  const Complex minus = -z + s;
  if (std::abs(plus) >= std::abs(minus)) return -2.0 / plus;
  return 0.5 * minus;
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  const double F =
      0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * pi) + std::asin(0.5 * x) / pi;
  return std::clamp(F, 0.0, 1.0);
}

double gamma_quantile(std::size_t i, std::size_t N) {
  if (N == 0 || i < 1 || i > N) {
    throw std::out_of_range("gamma_quantile: index " + std::to_string(i) +
                            " outside [1, " + std::to_string(N) + "]");
  }
  if (i == N) return 2.0;
  const double target = static_cast<double>(i) / static_cast<double>(N);
  if (2 * i == N) return 0.0;
  double lo = -2.0;
  double hi = 2.0;
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (semicircle_cdf(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double gap_scale(std::size_t k, std::size_t N) {
  if (N == 0 || k < 1 || k > N) {
    throw std::out_of_range("gap_scale: index outside [1, N]");
  }
  const double kk = static_cast<double>(std::min(k, N + 1 - k));
  return std::pow(static_cast<double>(N), -2.0 / 3.0) * std::pow(kk, -1.0 / 3.0);
}

QuantileTable quantile_table(std::size_t N) {
  QuantileTable table;
  table.N = N;
  table.gamma.resize(N);
  table.delta.resize(N);
  for (std::size_t i = 1; i <= N; ++i) {
    table.gamma[i - 1] = gamma_quantile(i, N);
    table.delta[i - 1] = gap_scale(i, N);
  }
  return table;
}

double psi(const SpectralPoint& z, std::size_t N) {
  const double n_eta = static_cast<double>(N) * std::abs(z.eta());
  const double im = std::abs(m_sc(z.z()).imag());
  return std::sqrt(im / n_eta) + 1.0 / n_eta;
}

DividedStieltjes m_divided(std::span<const Complex> points, double rel_tol) {
  if (points.empty()) {
    throw std::invalid_argument("m_divided: empty point set");
  }
  double scale = 1.0;
  std::vector<double> breaks{-0.5 * pi};
  for (const Complex& z : points) {
    if (!(z.imag() != 0.0)) {
      throw std::invalid_argument("m_divided: point on the real axis");
    }
    scale /= std::abs(z.imag());
    if (std::abs(z.real()) < 2.0) breaks.push_back(std::asin(0.5 * z.real()));
  }
  breaks.push_back(0.5 * pi);
  std::sort(breaks.begin(), breaks.end());

  // rho_sc(x) dx = (2/pi) cos^2(theta) dtheta under x = 2 sin(theta).
  auto integrand = [&points](double theta) {
    const double c = std::cos(theta);
    const double x = 2.0 * std::sin(theta);
    Complex value = (2.0 / pi) * c * c;
    for (const Complex& z : points) value /= (x - z);
    return value;
  };

  DividedStieltjes out;
  out.points.assign(points.begin(), points.end());
  out.value = integrate_piecewise(integrand, breaks, rel_tol, 1e-15 * scale);
  return out;
}

}  // namespace rmtlab
