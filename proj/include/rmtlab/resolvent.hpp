#pragma once

#include <cstddef>

#include "rmtlab/eigensolve.hpp"
#include "rmtlab/semicircle.hpp"
#include "rmtlab/types.hpp"

namespace rmtlab {

/// G(z) = (H - z)^{-1} as a dense matrix. Matrix indices are 0-based
/// throughout this module.
struct ResolventBundle {
  SpectralPoint z;
  ComplexMatrix G;
  bool spectrum_backed = false;

  std::size_t size() const { return static_cast<std::size_t>(G.rows()); }
};

/// Spectral path: G = sum_i u_i u_i^* / (lambda_i - z).
ResolventBundle resolvent(const RealSpectrum& s, const SpectralPoint& z);
ResolventBundle resolvent(const ComplexSpectrum& s, const SpectralPoint& z);
/// Direct path: LU solve of (H - z) G = I.
ResolventBundle resolvent(const RealMatrix& H, const SpectralPoint& z);
ResolventBundle resolvent(const ComplexMatrix& H, const SpectralPoint& z);

/// max |((H - z) G - I)_ij|.
double inverse_residual(const RealMatrix& H, const ResolventBundle& b);

/// m_N(z) = (1/N) Tr G.
Complex stieltjes_trace(const ResolventBundle& b);
/// (1/N) sum_i 1/(lambda_i - z) without forming G.
Complex stieltjes_trace(const RealVector& lambdas, Complex z);

/// |<x, G y> - <x, y> m_sc(z)| / Psi(z). x and y must be unit vectors.
double iso_residual(const ResolventBundle& b, const ComplexVector& x, const ComplexVector& y);

/// R^{(a)}: resolvent of H with row and column a set to zero. Entry (a,a) is
/// -1/z, the rest of row and column a vanish.
ComplexMatrix minor_resolvent(const RealMatrix& H, std::size_t a, Complex z);

/// Largest residual of the three Schur-complement identities expressing R
/// (resolvent of H with h_ab = h_ba = 0) through R^{(a)}. The diagonal entry
/// q_aa is kept in the first identity. Requires a != b.
double schur_identity_check(const RealMatrix& H, std::size_t a, std::size_t b, Complex z);

/// max-norm residual of the exact four-step expansions G = R - RUR + ... +
/// (RU)^4 G and R = G + GUG + GUGUG + GUGUGUG + (GU)^4 R, U = H - Q.
double expansion_check(const RealMatrix& H, std::size_t a, std::size_t b, Complex z);

/// || G - sum_{k=0}^{order} (-RU)^k R ||_max; of size |h_ab|^{order+1}.
double expansion_remainder(const RealMatrix& H, std::size_t a, std::size_t b, Complex z,
                           int order);

/// max |G Gbar - (G - Gbar)/(z - zbar)| with Gbar = G(zbar) from a separate
/// solve.
double ward_residual(const RealMatrix& H, const SpectralPoint& z);

/// (eta/pi) int_R dE / ((E - lambda)^2 + eta^2), by quadrature on a
/// compactified line; the mass is translation invariant in lambda.
double poisson_mass(double lambda, double eta);

/// Coordinates U^* x of a vector in the eigenbasis.
ComplexVector eigen_coords(const RealSpectrum& s, const ComplexVector& x);
ComplexVector eigen_coords(const ComplexSpectrum& s, const ComplexVector& x);

/// U^* A U.
ComplexMatrix eigen_conjugate(const RealSpectrum& s, const ComplexMatrix& A);
ComplexMatrix eigen_conjugate(const ComplexSpectrum& s, const ComplexMatrix& A);

/// Entries of resolvent chains from eigen-coordinates a = U^* x, b = U^* y.
/// Gbar denotes G(zbar) = G^*.
Complex chain_G(const RealVector& lambdas, const ComplexVector& a, const ComplexVector& b,
                Complex z);
Complex chain_GG(const RealVector& lambdas, const ComplexVector& a, const ComplexVector& b,
                 Complex z);
Complex chain_GGbar(const RealVector& lambdas, const ComplexVector& a, const ComplexVector& b,
                    Complex z);
/// x^* G A Gbar y with At = U^* A U.
Complex chain_GAGbar(const RealVector& lambdas, const ComplexVector& a, const ComplexMatrix& At,
                     const ComplexVector& b, Complex z);
/// x^* G A Gbar G y.
Complex chain_GAGbarG(const RealVector& lambdas, const ComplexVector& a,
                      const ComplexMatrix& At, const ComplexVector& b, Complex z);

}  // namespace rmtlab
