#include "rmtlab/resolvent.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rmtlab/quadrature.hpp"

namespace rmtlab {
namespace {

template <class Scalar>
ResolventBundle spectral_resolvent(const Spectrum<Scalar>& s, const SpectralPoint& z) {
  const Eigen::Index n = s.lambdas.size();
  ComplexVector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = 1.0 / (s.lambdas[i] - z.z());
  const ComplexMatrix U = s.vectors.template cast<Complex>();
  ResolventBundle out{z, ComplexMatrix(), true};
  out.G.noalias() = U * d.asDiagonal() * U.adjoint();
  return out;
}

template <class Scalar>
ResolventBundle direct_resolvent(const Matrix<Scalar>& H, const SpectralPoint& z) {
  const Eigen::Index n = H.rows();
  ComplexMatrix A = H.template cast<Complex>();
  A.diagonal().array() -= z.z();
  ResolventBundle out{z, ComplexMatrix(), false};
  out.G = A.partialPivLu().solve(ComplexMatrix::Identity(n, n));
  return out;
}

ComplexMatrix inverse_shifted(const RealMatrix& H, Complex z) {
  ComplexMatrix A = H.cast<Complex>();
  A.diagonal().array() -= z;
  return A.partialPivLu().solve(ComplexMatrix::Identity(H.rows(), H.cols()));
}

void check_pair(const RealMatrix& H, std::size_t a, std::size_t b) {
  const auto n = static_cast<std::size_t>(H.rows());
  if (a >= n || b >= n) throw std::out_of_range("index outside [0, N)");
  if (a == b) throw std::invalid_argument("indices a and b must differ");
}

RealMatrix without_pair(const RealMatrix& H, std::size_t a, std::size_t b) {
  RealMatrix Q = H;
  const auto ia = static_cast<Eigen::Index>(a);
  const auto ib = static_cast<Eigen::Index>(b);
  Q(ia, ib) = 0.0;
  Q(ib, ia) = 0.0;
  return Q;
}

template <class Scalar>
ComplexVector coords(const Spectrum<Scalar>& s, const ComplexVector& x) {
  return s.vectors.template cast<Complex>().adjoint() * x;
}

template <class Scalar>
ComplexMatrix conjugate(const Spectrum<Scalar>& s, const ComplexMatrix& A) {
  if constexpr (!is_complex_v<Scalar>) {
    // Real eigenvectors and a real A stay in real arithmetic.
    if (A.imag().isZero(0.0)) {
      const RealMatrix R = s.vectors.transpose() * A.real() * s.vectors;
      return R.cast<Complex>();
    }
  }
  const ComplexMatrix U = s.vectors.template cast<Complex>();
  return U.adjoint() * A * U;
}

}  // namespace

ResolventBundle resolvent(const RealSpectrum& s, const SpectralPoint& z) {
  return spectral_resolvent(s, z);
}
ResolventBundle resolvent(const ComplexSpectrum& s, const SpectralPoint& z) {
  return spectral_resolvent(s, z);
}
ResolventBundle resolvent(const RealMatrix& H, const SpectralPoint& z) {
  return direct_resolvent(H, z);
}
ResolventBundle resolvent(const ComplexMatrix& H, const SpectralPoint& z) {
  return direct_resolvent(H, z);
}

double inverse_residual(const RealMatrix& H, const ResolventBundle& b) {
  ComplexMatrix A = H.cast<Complex>();
  A.diagonal().array() -= b.z.z();
  ComplexMatrix R = A * b.G;
  R.diagonal().array() -= 1.0;
  return R.cwiseAbs().maxCoeff();
}

Complex stieltjes_trace(const ResolventBundle& b) {
  return b.G.trace() / static_cast<double>(b.G.rows());
}

Complex stieltjes_trace(const RealVector& lambdas, Complex z) {
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) sum += 1.0 / (lambdas[i] - z);
  return sum / static_cast<double>(lambdas.size());
}

double iso_residual(const ResolventBundle& b, const ComplexVector& x, const ComplexVector& y) {
  const Complex xGy = x.dot(b.G * y);
  const Complex xy = x.dot(y);
  return std::abs(xGy - xy * m_sc(b.z.z())) / psi(b.z, b.size());
}

ComplexMatrix minor_resolvent(const RealMatrix& H, std::size_t a, Complex z) {
  const Eigen::Index n = H.rows();
  const auto ia = static_cast<Eigen::Index>(a);
  if (ia >= n) throw std::out_of_range("minor_resolvent: index outside [0, N)");
  // Deleted (N-1) x (N-1) matrix, inverted and scattered back.
  RealMatrix D(n - 1, n - 1);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != ia) keep.push_back(i);
  }
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) D(i, j) = H(keep[i], keep[j]);
  }
  const ComplexMatrix Dinv = inverse_shifted(D, z);
  ComplexMatrix R = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) R(keep[i], keep[j]) = Dinv(i, j);
  }
  R(ia, ia) = -1.0 / z;
  return R;
}

double schur_identity_check(const RealMatrix& H, std::size_t a, std::size_t b, Complex z) {
  check_pair(H, a, b);
  const RealMatrix Q = without_pair(H, a, b);
  const ComplexMatrix R = inverse_shifted(Q, z);
  const ComplexMatrix Ra = minor_resolvent(H, a, z);
  const auto ia = static_cast<Eigen::Index>(a);
  ComplexVector q = Q.col(ia).cast<Complex>();
  q[ia] = 0.0;
  // c_i = sum_{r != a} R^{(a)}_{ir} q_{ra}
  const ComplexVector c = Ra * q;
  const Complex Raa = 1.0 / (Q(ia, ia) - z - q.dot(c));
  double worst = std::abs(R(ia, ia) - Raa);
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    if (i == ia) continue;
    worst = std::max(worst, std::abs(R(ia, i) + R(ia, ia) * c[i]));
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      if (j == ia) continue;
      worst = std::max(worst, std::abs(R(i, j) - Ra(i, j) - R(ia, ia) * c[i] * c[j]));
    }
  }
  return worst;
}

double expansion_check(const RealMatrix& H, std::size_t a, std::size_t b, Complex z) {
  check_pair(H, a, b);
  const RealMatrix Q = without_pair(H, a, b);
  const ComplexMatrix U = (H - Q).cast<Complex>();
  const ComplexMatrix G = inverse_shifted(H, z);
  const ComplexMatrix R = inverse_shifted(Q, z);
  // G - R = -RUG and R - G = GUR, iterated four times.
  auto expand = [&U](const ComplexMatrix& X, const ComplexMatrix& Y, double sign) {
    const ComplexMatrix XU = X * U;
    ComplexMatrix term = X;
    ComplexMatrix sum = X;
    for (int k = 1; k <= 3; ++k) {
      term = sign * (XU * term);
      sum += term;
    }
    const ComplexMatrix XU2 = XU * XU;
    sum += XU2 * XU2 * Y;
    return sum;
  };
  const double first = (G - expand(R, G, -1.0)).cwiseAbs().maxCoeff();
  const double second = (R - expand(G, R, 1.0)).cwiseAbs().maxCoeff();
  return std::max(first, second);
}

double expansion_remainder(const RealMatrix& H, std::size_t a, std::size_t b, Complex z,
                           int order) {
  check_pair(H, a, b);
  if (order < 0) throw std::invalid_argument("expansion_remainder: negative order");
  const RealMatrix Q = without_pair(H, a, b);
  const ComplexMatrix U = (H - Q).cast<Complex>();
  const ComplexMatrix G = inverse_shifted(H, z);
  const ComplexMatrix R = inverse_shifted(Q, z);
  const ComplexMatrix RU = R * U;
  ComplexMatrix term = R;
  ComplexMatrix sum = R;
  for (int k = 1; k <= order; ++k) {
    term = -(RU * term);
    sum += term;
  }
  return (G - sum).cwiseAbs().maxCoeff();
}

double ward_residual(const RealMatrix& H, const SpectralPoint& z) {
  const ComplexMatrix G = inverse_shifted(H, z.z());
  const ComplexMatrix Gb = inverse_shifted(H, std::conj(z.z()));
  const Complex denom = z.z() - std::conj(z.z());
  return (G * Gb - (G - Gb) / denom).cwiseAbs().maxCoeff();
}

double poisson_mass(double /*lambda*/, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("poisson_mass: eta must be positive");
  // E = lambda + eta * t / (1 - t^2) maps (-1, 1) onto the real line.
  auto integrand = [eta](double t) {
    const double s = 1.0 - t * t;
    const double u = t / s;
    const double dE = eta * (1.0 + t * t) / (s * s);
    // E - lambda = eta * u, formed directly to avoid cancellation for small eta.
    const double d = eta * u;
    return eta / std::numbers::pi / (d * d + eta * eta) * dE;
  };
  return integrate_piecewise(integrand, {-1.0, -0.5, 0.0, 0.5, 1.0}, 1e-13);
}

ComplexVector eigen_coords(const RealSpectrum& s, const ComplexVector& x) { return coords(s, x); }
ComplexVector eigen_coords(const ComplexSpectrum& s, const ComplexVector& x) {
  return coords(s, x);
}
ComplexMatrix eigen_conjugate(const RealSpectrum& s, const ComplexMatrix& A) {
  return conjugate(s, A);
}
ComplexMatrix eigen_conjugate(const ComplexSpectrum& s, const ComplexMatrix& A) {
  return conjugate(s, A);
}

Complex chain_G(const RealVector& lambdas, const ComplexVector& a, const ComplexVector& b,
                Complex z) {
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    sum += std::conj(a[i]) * b[i] / (lambdas[i] - z);
  }
  return sum;
}

Complex chain_GG(const RealVector& lambdas, const ComplexVector& a, const ComplexVector& b,
                 Complex z) {
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const Complex d = 1.0 / (lambdas[i] - z);
    sum += std::conj(a[i]) * b[i] * d * d;
  }
  return sum;
}

Complex chain_GGbar(const RealVector& lambdas, const ComplexVector& a, const ComplexVector& b,
                    Complex z) {
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    sum += std::conj(a[i]) * b[i] / std::norm(lambdas[i] - z);
  }
  return sum;
}

Complex chain_GAGbar(const RealVector& lambdas, const ComplexVector& a, const ComplexMatrix& At,
                     const ComplexVector& b, Complex z) {
  const Eigen::Index n = lambdas.size();
  ComplexVector left(n);
  ComplexVector right(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    left[i] = std::conj(a[i]) / (lambdas[i] - z);
    right[i] = b[i] / (lambdas[i] - std::conj(z));
  }
  return left.transpose() * (At * right);
}

Complex chain_GAGbarG(const RealVector& lambdas, const ComplexVector& a,
                      const ComplexMatrix& At, const ComplexVector& b, Complex z) {
  const Eigen::Index n = lambdas.size();
  ComplexVector left(n);
  ComplexVector right(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    left[i] = std::conj(a[i]) / (lambdas[i] - z);
    right[i] = b[i] / std::norm(lambdas[i] - z);
  }
  return left.transpose() * (At * right);
}

}  // namespace rmtlab
