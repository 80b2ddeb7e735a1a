#include "rmtlab/eigensolve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <vector>

extern "C" {
void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a, const int* lda,
             double* w, double* work, const int* lwork, int* iwork, const int* liwork,
             int* info, std::size_t, std::size_t);
void zheevd_(const char* jobz, const char* uplo, const int* n, std::complex<double>* a,
             const int* lda, double* w, std::complex<double>* work, const int* lwork,
             double* rwork, const int* lrwork, int* iwork, const int* liwork, int* info,
             std::size_t, std::size_t);
void dsyevr_(const char* jobz, const char* range, const char* uplo, const int* n, double* a,
             const int* lda, const double* vl, const double* vu, const int* il, const int* iu,
             const double* abstol, int* m, double* w, double* z, const int* ldz, int* isuppz,
             double* work, const int* lwork, int* iwork, const int* liwork, int* info,
             std::size_t, std::size_t, std::size_t);
void zheevr_(const char* jobz, const char* range, const char* uplo, const int* n,
             std::complex<double>* a, const int* lda, const double* vl, const double* vu,
             const int* il, const int* iu, const double* abstol, int* m, double* w,
             std::complex<double>* z, const int* ldz, int* isuppz, std::complex<double>* work,
             const int* lwork, double* rwork, const int* lrwork, int* iwork, const int* liwork,
             int* info, std::size_t, std::size_t, std::size_t);
}

namespace rmtlab {

std::string_view to_string(EigenBackend backend) {
  return backend == EigenBackend::lapack ? "lapack" : "householder_ql";
}

EigenBackend parse_eigen_backend(std::string_view name) {
  if (name == "householder_ql") return EigenBackend::householder_ql;
  if (name == "lapack") return EigenBackend::lapack;
  throw std::invalid_argument("unknown eigen backend '" + std::string(name) + "'");
}

template <class Scalar>
void normalize_sign(Eigen::Ref<Vector<Scalar>> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > 1e-12) {
      if constexpr (is_complex_v<Scalar>) {
        v *= std::conj(v[i]) / mag;
        v[i] = Complex(v[i].real(), 0.0);
      } else {
        if (v[i] < 0.0) v = -v;
      }
      return;
    }
  }
}

template void normalize_sign<double>(Eigen::Ref<RealVector>);
template void normalize_sign<Complex>(Eigen::Ref<ComplexVector>);

void tridiagonal_ql(RealVector& d, RealVector e_in, RealMatrix* vectors, int max_sweeps) {
  const Eigen::Index n = d.size();
  if (n == 0) return;
  RealVector e = RealVector::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) e[i] = e_in[i];
  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0;
  double tst1 = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    Eigen::Index m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int sweeps = 0;
      do {
        if (++sweeps > max_sweeps) {
          throw ConvergenceError("implicit QL did not converge for eigenvalue " +
                                 std::to_string(l) + " within " +
                                 std::to_string(max_sweeps) + " sweeps");
        }
        // Wilkinson shift from the leading 2x2 block.
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (Eigen::Index i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          if (vectors) {
            double* vi = vectors->col(i).data();
            double* vi1 = vectors->col(i + 1).data();
            for (Eigen::Index k = 0; k < n; ++k) {
              const double t = vi1[k];
              vi1[k] = s * vi[k] + c * t;
              vi[k] = c * vi[k] - s * t;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

namespace {

template <class Scalar>
void check_self_adjoint(const Matrix<Scalar>& H) {
  if (H.rows() != H.cols() || H.rows() == 0) {
    throw std::invalid_argument("eig_sym: matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (!H.allFinite()) throw std::invalid_argument("eig_sym: non-finite entries");
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("eig_sym: matrix is not self-adjoint");
  }
}

/// Householder reduction A = Q T Q* with T real symmetric tridiagonal. The
/// unitary phases that make the off-diagonal real are folded into Q.
template <class Scalar>
void tridiagonalize(Matrix<Scalar> A, RealVector& d, RealVector& e, Matrix<Scalar>* Q) {
  const Eigen::Index n = A.rows();
  if (Q) Q->setIdentity(n, n);
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index m = n - k - 1;
    Vector<Scalar> v = A.col(k).tail(m);
    const double tail_norm = v.tail(m - 1).norm();
    if (tail_norm == 0.0) continue;
    const double norm = v.norm();
    Scalar phase = Scalar(1.0);
    if (std::abs(v[0]) != 0.0) phase = v[0] / std::abs(v[0]);
    const Scalar alpha = -phase * norm;
    v[0] -= alpha;
    const double tau = 2.0 / v.squaredNorm();
    auto A22 = A.bottomRightCorner(m, m);
    const Vector<Scalar> p = tau * (A22.template selfadjointView<Eigen::Lower>() * v);
    const Scalar K = 0.5 * tau * v.dot(p);
    const Vector<Scalar> w = p - K * v;
    A22.template selfadjointView<Eigen::Lower>().rankUpdate(v, w, Scalar(-1.0));
    A(k + 1, k) = alpha;
    A.col(k).tail(m - 1).setZero();
    if (Q) {
      auto Qb = Q->rightCols(m);
      const Vector<Scalar> Qv = Qb * v;
      Qb.noalias() -= tau * Qv * v.adjoint();
    }
  }
  d.resize(n);
  e.resize(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index i = 0; i < n; ++i) d[i] = std::real(A(i, i));
  Scalar acc = Scalar(1.0);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Scalar off = A(i + 1, i);
    const double mag = std::abs(off);
    e[i] = mag;
    if constexpr (is_complex_v<Scalar>) {
      if (mag > 0.0) acc *= off / mag;
      if (Q) Q->col(i + 1) *= acc;
    } else {
      if (off < 0.0) acc = -acc;
      if (Q) Q->col(i + 1) *= acc;
    }
  }
}

template <class Scalar>
Spectrum<Scalar> ql_decompose(const Matrix<Scalar>& H) {
  RealVector d;
  RealVector e;
  Matrix<Scalar> Q;
  tridiagonalize<Scalar>(H, d, e, &Q);
  const Eigen::Index n = d.size();
  RealMatrix V = RealMatrix::Identity(n, n);
  tridiagonal_ql(d, e, &V);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&d](Eigen::Index a, Eigen::Index b) { return d[a] < d[b]; });
  RealMatrix Vs(n, n);
  Spectrum<Scalar> out;
  out.lambdas.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.lambdas[j] = d[order[static_cast<std::size_t>(j)]];
    Vs.col(j) = V.col(order[static_cast<std::size_t>(j)]);
  }
  out.vectors.noalias() = Q * Vs.template cast<Scalar>();
  return out;
}

template <class Scalar>
RealVector ql_values(const Matrix<Scalar>& H) {
  RealVector d;
  RealVector e;
  tridiagonalize<Scalar>(H, d, e, nullptr);
  tridiagonal_ql(d, e, nullptr);
  std::sort(d.data(), d.data() + d.size());
  return d;
}

void lapack_check(int info, const char* routine) {
  if (info < 0) {
    throw std::invalid_argument(std::string(routine) + ": illegal argument " +
                                std::to_string(-info));
  }
  if (info > 0) {
    throw ConvergenceError(std::string(routine) + " failed to converge (info=" +
                           std::to_string(info) + ")");
  }
}

RealVector lapack_evd(RealMatrix& A, bool vectors) {
  const int n = static_cast<int>(A.rows());
  RealVector w(n);
  const char jobz = vectors ? 'V' : 'N';
  const char uplo = 'L';
  int info = 0;
  int lwork = -1;
  int liwork = -1;
  double wq = 0.0;
  int iwq = 0;
  dsyevd_(&jobz, &uplo, &n, A.data(), &n, w.data(), &wq, &lwork, &iwq, &liwork, &info, 1, 1);
  lapack_check(info, "dsyevd");
  lwork = static_cast<int>(wq);
  liwork = iwq;
  std::vector<double> work(static_cast<std::size_t>(lwork));
  std::vector<int> iwork(static_cast<std::size_t>(liwork));
  dsyevd_(&jobz, &uplo, &n, A.data(), &n, w.data(), work.data(), &lwork, iwork.data(),
          &liwork, &info, 1, 1);
  lapack_check(info, "dsyevd");
  return w;
}

RealVector lapack_evd(ComplexMatrix& A, bool vectors) {
  const int n = static_cast<int>(A.rows());
  RealVector w(n);
  const char jobz = vectors ? 'V' : 'N';
  const char uplo = 'L';
  int info = 0;
  int lwork = -1;
  int lrwork = -1;
  int liwork = -1;
  Complex wq;
  double rwq = 0.0;
  int iwq = 0;
  zheevd_(&jobz, &uplo, &n, A.data(), &n, w.data(), &wq, &lwork, &rwq, &lrwork, &iwq, &liwork,
          &info, 1, 1);
  lapack_check(info, "zheevd");
  lwork = static_cast<int>(wq.real());
  lrwork = static_cast<int>(rwq);
  liwork = iwq;
  std::vector<Complex> work(static_cast<std::size_t>(lwork));
  std::vector<double> rwork(static_cast<std::size_t>(lrwork));
  std::vector<int> iwork(static_cast<std::size_t>(liwork));
  zheevd_(&jobz, &uplo, &n, A.data(), &n, w.data(), work.data(), &lwork, rwork.data(),
          &lrwork, iwork.data(), &liwork, &info, 1, 1);
  lapack_check(info, "zheevd");
  return w;
}

Eigenpair<double> lapack_select(RealMatrix A, int index) {
  const int n = static_cast<int>(A.rows());
  const char jobz = 'V';
  const char range = 'I';
  const char uplo = 'L';
  const double vl = 0.0;
  const double vu = 0.0;
  const double abstol = 0.0;
  int m = 0;
  RealVector w(n);
  RealVector z(n);
  int isuppz[2];
  int info = 0;
  int lwork = -1;
  int liwork = -1;
  double wq = 0.0;
  int iwq = 0;
  dsyevr_(&jobz, &range, &uplo, &n, A.data(), &n, &vl, &vu, &index, &index, &abstol, &m,
          w.data(), z.data(), &n, isuppz, &wq, &lwork, &iwq, &liwork, &info, 1, 1, 1);
  lapack_check(info, "dsyevr");
  lwork = static_cast<int>(wq);
  liwork = iwq;
  std::vector<double> work(static_cast<std::size_t>(lwork));
  std::vector<int> iwork(static_cast<std::size_t>(liwork));
  dsyevr_(&jobz, &range, &uplo, &n, A.data(), &n, &vl, &vu, &index, &index, &abstol, &m,
          w.data(), z.data(), &n, isuppz, work.data(), &lwork, iwork.data(), &liwork, &info,
          1, 1, 1);
  lapack_check(info, "dsyevr");
  Eigenpair<double> out{static_cast<std::size_t>(index), w[0], z};
  normalize_sign<double>(out.vector);
  return out;
}

Eigenpair<Complex> lapack_select(ComplexMatrix A, int index) {
  const int n = static_cast<int>(A.rows());
  const char jobz = 'V';
  const char range = 'I';
  const char uplo = 'L';
  const double vl = 0.0;
  const double vu = 0.0;
  const double abstol = 0.0;
  int m = 0;
  RealVector w(n);
  ComplexVector z(n);
  int isuppz[2];
  int info = 0;
  int lwork = -1;
  int lrwork = -1;
  int liwork = -1;
  Complex wq;
  double rwq = 0.0;
  int iwq = 0;
  zheevr_(&jobz, &range, &uplo, &n, A.data(), &n, &vl, &vu, &index, &index, &abstol, &m,
          w.data(), z.data(), &n, isuppz, &wq, &lwork, &rwq, &lrwork, &iwq, &liwork, &info, 1,
          1, 1);
  lapack_check(info, "zheevr");
  lwork = static_cast<int>(wq.real());
  lrwork = static_cast<int>(rwq);
  liwork = iwq;
  std::vector<Complex> work(static_cast<std::size_t>(lwork));
  std::vector<double> rwork(static_cast<std::size_t>(lrwork));
  std::vector<int> iwork(static_cast<std::size_t>(liwork));
  zheevr_(&jobz, &range, &uplo, &n, A.data(), &n, &vl, &vu, &index, &index, &abstol, &m,
          w.data(), z.data(), &n, isuppz, work.data(), &lwork, rwork.data(), &lrwork,
          iwork.data(), &liwork, &info, 1, 1, 1);
  lapack_check(info, "zheevr");
  Eigenpair<Complex> out{static_cast<std::size_t>(index), w[0], z};
  normalize_sign<Complex>(out.vector);
  return out;
}

template <class Scalar>
Spectrum<Scalar> decompose(const Matrix<Scalar>& H, EigenBackend backend) {
  check_self_adjoint(H);
  Spectrum<Scalar> out;
  if (backend == EigenBackend::lapack) {
    out.vectors = H;
    out.lambdas = lapack_evd(out.vectors, true);
  } else {
    out = ql_decompose(H);
  }
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    normalize_sign<Scalar>(out.vectors.col(j));
  }
  return out;
}

template <class Scalar>
RealVector values(const Matrix<Scalar>& H, EigenBackend backend) {
  check_self_adjoint(H);
  if (backend == EigenBackend::lapack) {
    Matrix<Scalar> A = H;
    return lapack_evd(A, false);
  }
  return ql_values(H);
}

template <class Scalar>
Eigenpair<Scalar> select(const Matrix<Scalar>& H, std::size_t index, EigenBackend backend) {
  check_self_adjoint(H);
  if (index < 1 || index > static_cast<std::size_t>(H.rows())) {
    throw std::out_of_range("eig_select: index outside [1, N]");
  }
  if (backend == EigenBackend::lapack) {
    return lapack_select(H, static_cast<int>(index));
  }
  const auto spec = decompose(H, backend);
  const auto col = static_cast<Eigen::Index>(index - 1);
  return {index, spec.lambdas[col], spec.vectors.col(col)};
}

}  // namespace

RealSpectrum eig_sym(const RealMatrix& H, EigenBackend backend) {
  return decompose(H, backend);
}
ComplexSpectrum eig_sym(const ComplexMatrix& H, EigenBackend backend) {
  return decompose(H, backend);
}
RealVector eigenvalues(const RealMatrix& H, EigenBackend backend) { return values(H, backend); }
RealVector eigenvalues(const ComplexMatrix& H, EigenBackend backend) {
  return values(H, backend);
}
Eigenpair<double> eig_select(const RealMatrix& H, std::size_t index, EigenBackend backend) {
  return select(H, index, backend);
}
Eigenpair<Complex> eig_select(const ComplexMatrix& H, std::size_t index,
                              EigenBackend backend) {
  return select(H, index, backend);
}

EdgeSpec parse_edge_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("edge spec must look like bottom:K or top:K, got '" +
                                std::string(text) + "'");
  }
  const auto side = text.substr(0, colon);
  const auto num = text.substr(colon + 1);
  EdgeSpec spec;
  if (side == "bottom") {
    spec.side = EdgeSpec::Side::bottom;
  } else if (side == "top") {
    spec.side = EdgeSpec::Side::top;
  } else {
    throw std::invalid_argument("edge spec side must be bottom or top, got '" +
                                std::string(side) + "'");
  }
  const auto res = std::from_chars(num.data(), num.data() + num.size(), spec.k);
  if (res.ec != std::errc() || res.ptr != num.data() + num.size()) {
    throw std::invalid_argument("edge spec index is not an integer: '" + std::string(num) + "'");
  }
  return spec;
}

std::string to_string(const EdgeSpec& spec) {
  return (spec.side == EdgeSpec::Side::bottom ? "bottom:" : "top:") + std::to_string(spec.k);
}

EdgeIndex edge_index_resolve(const EdgeSpec& spec, std::size_t N, double tau) {
  if (spec.k < 1 || spec.k > N) {
    throw std::out_of_range("edge index " + std::to_string(spec.k) + " outside [1, " +
                            std::to_string(N) + "]");
  }
  EdgeIndex out;
  out.ell = spec.side == EdgeSpec::Side::bottom ? spec.k : N + 1 - spec.k;
  const double reach = std::pow(static_cast<double>(N), 1.0 - tau);
  const double ell = static_cast<double>(out.ell);
  out.edge_regime = ell <= reach || ell >= static_cast<double>(N) - reach;
  return out;
}

}  // namespace rmtlab
