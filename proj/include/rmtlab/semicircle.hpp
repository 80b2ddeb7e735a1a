#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rmtlab/types.hpp"

namespace rmtlab {

/// A spectral parameter z = E + i*eta off the real axis.
class SpectralPoint {
 public:
  SpectralPoint(double E, double eta);
  explicit SpectralPoint(Complex z) : SpectralPoint(z.real(), z.imag()) {}

  double E() const { return E_; }
  double eta() const { return eta_; }
  Complex z() const { return {E_, eta_}; }

  /// Membership in the domain |E| <= 10/tau, N^{-1+tau/10} <= |eta| <= 10/tau.
  bool in_domain(double tau, std::size_t N) const;

 private:
  double E_;
  double eta_;
};

double rho_sc(double E);

/// Stieltjes transform of the semicircle law; Im m_sc(z) has the sign of Im z.
/// Throws std::invalid_argument for real z.
Complex m_sc(Complex z);

/// Closed-form semicircle CDF, clamped to [0, 1].
double semicircle_cdf(double x);

/// gamma_i with F(gamma_i) = i/N, 1 <= i <= N.
double gamma_quantile(std::size_t i, std::size_t N);

/// Typical gap N^{-2/3} k'^{-1/3}, k' = min(k, N+1-k).
double gap_scale(std::size_t k, std::size_t N);

struct QuantileTable {
  std::size_t N = 0;
  std::vector<double> gamma;
  std::vector<double> delta;
};

QuantileTable quantile_table(std::size_t N);

/// Local-law control parameter sqrt(|Im m_sc|/(N|eta|)) + 1/(N|eta|).
double psi(const SpectralPoint& z, std::size_t N);

/// m[B] = int rho_sc(x) prod_{z in B} 1/(x - z) dx.
struct DividedStieltjes {
  std::vector<Complex> points;
  Complex value;
};

/// Evaluates m[B] by adaptive quadrature in x = 2 sin(theta). Coincident
/// points are allowed (the integrand then has a higher-order pole off the
/// real axis). Throws std::invalid_argument for a real point.
DividedStieltjes m_divided(std::span<const Complex> points,
                           double rel_tol = 1e-11);

}  // namespace rmtlab
