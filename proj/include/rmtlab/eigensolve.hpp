#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rmtlab/types.hpp"

namespace rmtlab {

/// Sorted eigenvalues with orthonormal, sign-normalized eigenvectors in the
/// columns of `vectors` (column i belongs to lambdas[i]).
template <class Scalar>
struct Spectrum {
  RealVector lambdas;
  Matrix<Scalar> vectors;

  std::size_t size() const { return static_cast<std::size_t>(lambdas.size()); }
};

using RealSpectrum = Spectrum<double>;
using ComplexSpectrum = Spectrum<Complex>;

/// One eigenpair, 1-based index in ascending order.
template <class Scalar>
struct Eigenpair {
  std::size_t index = 0;
  double lambda = 0.0;
  Vector<Scalar> vector;
};

enum class EigenBackend {
  householder_ql,  ///< in-tree Householder tridiagonalization + implicit QL
  lapack,          ///< LAPACK divide-and-conquer / MRRR drivers
};

std::string_view to_string(EigenBackend backend);
EigenBackend parse_eigen_backend(std::string_view name);

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full decomposition. Throws std::invalid_argument for input that is not
/// self-adjoint and ConvergenceError when QL exceeds 60 sweeps for an
/// eigenvalue.
RealSpectrum eig_sym(const RealMatrix& H,
                     EigenBackend backend = EigenBackend::householder_ql);
ComplexSpectrum eig_sym(const ComplexMatrix& H,
                        EigenBackend backend = EigenBackend::householder_ql);

/// Ascending eigenvalues only.
RealVector eigenvalues(const RealMatrix& H,
                       EigenBackend backend = EigenBackend::householder_ql);
RealVector eigenvalues(const ComplexMatrix& H,
                       EigenBackend backend = EigenBackend::householder_ql);

/// The index-th eigenpair (1-based). The LAPACK backend computes only the
/// requested vector.
Eigenpair<double> eig_select(const RealMatrix& H, std::size_t index,
                             EigenBackend backend = EigenBackend::householder_ql);
Eigenpair<Complex> eig_select(const ComplexMatrix& H, std::size_t index,
                              EigenBackend backend = EigenBackend::householder_ql);

/// Makes the first coordinate with magnitude above 1e-12 real and positive.
template <class Scalar>
void normalize_sign(Eigen::Ref<Vector<Scalar>> v);

/// Symmetric tridiagonal eigenproblem (diagonal d, off-diagonal e with
/// e.size() == d.size() - 1) by implicit QL with Wilkinson shifts. When
/// `vectors` is non-null it must be square with d.size() rows; rotations are
/// accumulated into it. Eigenvalues come back unsorted in d.
void tridiagonal_ql(RealVector& d, RealVector e, RealMatrix* vectors,
                    int max_sweeps = 60);

struct EdgeSpec {
  enum class Side { bottom, top };
  Side side = Side::bottom;
  std::size_t k = 1;
};

/// Parses "bottom:K" or "top:K".
EdgeSpec parse_edge_spec(std::string_view text);
std::string to_string(const EdgeSpec& spec);

struct EdgeIndex {
  std::size_t ell = 1;
  /// ell <= N^{1-tau} or ell >= N - N^{1-tau}.
  bool edge_regime = false;
};

/// bottom k -> k, top k -> N + 1 - k. Throws std::out_of_range when k is 0
/// or exceeds N.
EdgeIndex edge_index_resolve(const EdgeSpec& spec, std::size_t N, double tau);

}  // namespace rmtlab
