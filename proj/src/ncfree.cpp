#include "rmtlab/ncfree.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rmtlab/resolvent.hpp"
#include "rmtlab/semicircle.hpp"

namespace rmtlab {
namespace {

constexpr std::size_t kMaxK = 10;
constexpr std::size_t kMaxDense = 6;

// Restricted growth strings enumerate each set partition once.
std::vector<NCPartition> build_nc(std::size_t k) {
  std::vector<NCPartition> out;
  std::vector<std::size_t> rgs(k, 0);
  std::vector<std::size_t> prefix_max(k, 0);
  while (true) {
    NCPartition pi;
    pi.k = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (rgs[i] == pi.blocks.size()) pi.blocks.emplace_back();
      pi.blocks[rgs[i]].push_back(i + 1);
    }
    if (is_noncrossing(pi)) out.push_back(std::move(pi));
    // Next string: bump the last position that can grow.
    std::size_t i = k;
    while (i-- > 1) {
      if (rgs[i] <= prefix_max[i - 1]) break;
    }
    if (i == 0) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < k; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SubsetMask mask_of(const std::vector<std::size_t>& block) {
  SubsetMask m = 0;
  for (std::size_t i : block) m |= SubsetMask{1} << (i - 1);
  return m;
}

// Relabel a partition of [|B|] onto the elements of B in increasing order.
SubsetMask mapped_mask(const std::vector<std::size_t>& block,
                       const std::vector<std::size_t>& elements) {
  SubsetMask m = 0;
  for (std::size_t i : block) m |= SubsetMask{1} << (elements[i - 1] - 1);
  return m;
}

std::vector<std::size_t> elements_of(SubsetMask B) {
  std::vector<std::size_t> e;
  for (std::size_t i = 0; i < 32; ++i) {
    if (B & (SubsetMask{1} << i)) e.push_back(i + 1);
  }
  return e;
}

void check_parameter(Complex z) {
  if (z.imag() == 0.0) throw std::invalid_argument("spectral parameter on the real axis");
}

std::size_t infer_dim(const std::vector<ComplexMatrix>& As, std::size_t N) {
  if (As.empty()) {
    if (N == 0) throw std::invalid_argument("matrix dimension required when no matrices given");
    return N;
  }
  const auto n = static_cast<std::size_t>(As.front().rows());
  for (const auto& A : As) {
    if (static_cast<std::size_t>(A.rows()) != n || static_cast<std::size_t>(A.cols()) != n) {
      throw std::invalid_argument("matrices must be square of a common size");
    }
  }
  if (N != 0 && N != n) throw std::invalid_argument("dimension mismatch");
  return n;
}

// Ordered products prod_{j in S} A_j over subsets S of [k-1], with their
// normalized traces.
struct ProductCache {
  std::vector<ComplexMatrix> prod;
  std::vector<Complex> ntrace;

  ProductCache(const std::vector<ComplexMatrix>& As, std::size_t N) {
    const std::size_t count = std::size_t{1} << As.size();
    prod.resize(count);
    ntrace.resize(count);
    const auto n = static_cast<Eigen::Index>(N);
    prod[0] = ComplexMatrix::Identity(n, n);
    ntrace[0] = 1.0;
    for (std::size_t S = 1; S < count; ++S) {
      std::size_t top = 0;
      while ((S >> (top + 1)) != 0) ++top;
      const std::size_t rest = S & ~(std::size_t{1} << top);
      prod[S] = rest == 0 ? As[top] : ComplexMatrix(prod[rest] * As[top]);
      ntrace[S] = prod[S].trace() / static_cast<double>(N);
    }
  }
};

// pTr_pi as scalar * prod(mask of B(k) without k).
std::pair<Complex, std::size_t> partial_trace_parts(const NCPartition& pi,
                                                     const ProductCache& cache) {
  Complex scalar = 1.0;
  std::size_t open = 0;
  const std::size_t bk = pi.block_of(pi.k);
  for (std::size_t b = 0; b < pi.blocks.size(); ++b) {
    std::size_t S = 0;
    for (std::size_t j : pi.blocks[b]) {
      if (j != pi.k) S |= std::size_t{1} << (j - 1);
    }
    if (b == bk) {
      open = S;
    } else {
      scalar *= cache.ntrace[S];
    }
  }
  return {scalar, open};
}

template <class Scalar>
double residual_impl(const Spectrum<Scalar>& s, const std::vector<Complex>& zs,
                     const std::vector<ComplexMatrix>& As, ResidualMode mode, std::size_t m,
                     const std::optional<ComplexVector>& x,
                     const std::optional<ComplexVector>& y) {
  const Eigen::Index n = s.lambdas.size();
  const auto N = static_cast<std::size_t>(n);
  if (zs.empty()) throw std::invalid_argument("at least one spectral parameter required");
  for (Complex z : zs) check_parameter(z);
  infer_dim(As, N);
  if (m > As.size()) throw std::invalid_argument("traceless count exceeds number of matrices");
  double eta = std::abs(zs.front().imag());
  for (Complex z : zs) eta = std::min(eta, std::abs(z.imag()));

  auto diag = [&](Complex z) {
    ComplexVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = 1.0 / (s.lambdas[i] - z);
    return d;
  };
  std::vector<ComplexMatrix> At;
  At.reserve(As.size());
  for (const auto& A : As) At.push_back(eigen_conjugate(s, A));

  const double k = static_cast<double>(As.size());
  const double half_m = static_cast<double>(m) / 2.0;
  if (mode == ResidualMode::avg) {
    if (As.size() != zs.size()) throw std::invalid_argument("avg mode needs k matrices for k parameters");
    // Tr(XY) = sum_ij X_ij Y_ji saves the last product.
    auto trace_of_product = [](const ComplexMatrix& X, const ComplexMatrix& Y) {
      return X.cwiseProduct(Y.transpose()).sum();
    };
    ComplexMatrix P = diag(zs[0]).asDiagonal() * At[0];
    for (std::size_t j = 1; j + 1 < zs.size(); ++j) {
      const ComplexMatrix next = diag(zs[j]).asDiagonal() * At[j];
      P = P * next;
    }
    Complex chain;
    if (zs.size() == 1) {
      chain = P.trace();
    } else {
      const ComplexMatrix last = diag(zs.back()).asDiagonal() * At.back();
      chain = trace_of_product(P, last);
    }
    const std::vector<ComplexMatrix> head(As.begin(), As.end() - 1);
    const auto M = M_det(zs, head, N).M;
    const Complex diff = chain - trace_of_product(M, As.back());
    return std::abs(diff) * std::pow(eta, k - half_m);
  }
  if (As.size() + 1 != zs.size()) throw std::invalid_argument("iso mode needs k matrices for k+1 parameters");
  if (!x || !y) throw std::invalid_argument("iso mode needs vectors x and y");
  if (x->size() != n || y->size() != n) throw std::invalid_argument("vector dimension mismatch");
  const ComplexVector a = eigen_coords(s, *x);
  ComplexVector v = diag(zs.back()).cwiseProduct(eigen_coords(s, *y));
  for (std::size_t j = As.size(); j-- > 0;) v = diag(zs[j]).cwiseProduct(At[j] * v);
  const Complex chain = a.dot(v);
  const auto M = M_det(zs, As, N).M;
  const Complex diff = chain - x->dot(M * *y);
  return std::abs(diff) * std::sqrt(static_cast<double>(N)) * std::pow(eta, k - half_m + 0.5);
}

}  // namespace

std::size_t NCPartition::block_of(std::size_t i) const {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (std::binary_search(blocks[b].begin(), blocks[b].end(), i)) return b;
  }
  throw std::out_of_range("label not in partition");
}

NCPartition make_partition(std::size_t k, std::vector<std::vector<std::size_t>> blocks) {
  std::vector<int> seen(k + 1, 0);
  for (auto& b : blocks) {
    if (b.empty()) throw std::invalid_argument("empty block");
    std::sort(b.begin(), b.end());
    for (std::size_t i : b) {
      if (i < 1 || i > k) throw std::invalid_argument("label outside [k]");
      if (seen[i]++) throw std::invalid_argument("label repeated");
    }
  }
  for (std::size_t i = 1; i <= k; ++i) {
    if (!seen[i]) throw std::invalid_argument("blocks do not cover [k]");
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return NCPartition{k, std::move(blocks)};
}

bool is_noncrossing(const NCPartition& pi) {
  std::vector<std::size_t> owner(pi.k + 1);
  for (std::size_t b = 0; b < pi.blocks.size(); ++b) {
    for (std::size_t i : pi.blocks[b]) owner[i] = b;
  }
  std::vector<std::size_t> stack;
  for (std::size_t i = 1; i <= pi.k; ++i) {
    const auto& block = pi.blocks[owner[i]];
    if (i == block.front()) {
      if (block.size() > 1) stack.push_back(owner[i]);
      continue;
    }
    if (stack.empty() || stack.back() != owner[i]) return false;
    if (i == block.back()) stack.pop_back();
  }
  return true;
}

const std::vector<NCPartition>& enumerate_nc(std::size_t k) {
  if (k < 1 || k > kMaxK) throw std::invalid_argument("enumerate_nc: k must lie in [1, 10]");
  static const std::array<std::vector<NCPartition>, kMaxK + 1> table = [] {
    std::array<std::vector<NCPartition>, kMaxK + 1> t;
    for (std::size_t j = 1; j <= kMaxK; ++j) t[j] = build_nc(j);
    return t;
  }();
  return table[k];
}

NCPartition kreweras(const NCPartition& pi) {
  if (!is_noncrossing(pi)) throw std::invalid_argument("kreweras: crossing partition");
  const std::size_t k = pi.k;
  // separated(i, j): some block meets both {i+1..j} and its complement.
  auto separated = [&pi](std::size_t i, std::size_t j) {
    for (const auto& b : pi.blocks) {
      bool in = false;
      bool out = false;
      for (std::size_t e : b) (e > i && e <= j ? in : out) = true;
      if (in && out) return true;
    }
    return false;
  };
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<bool> used(k + 1, false);
  for (std::size_t i = 1; i <= k; ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> block{i};
    used[i] = true;
    for (std::size_t j = i + 1; j <= k; ++j) {
      if (!used[j] && !separated(i, j)) {
        block.push_back(j);
        used[j] = true;
      }
    }
    blocks.push_back(std::move(block));
  }
  return make_partition(k, std::move(blocks));
}

std::string to_string(const NCPartition& pi) {
  std::ostringstream os;
  os << '{';
  for (std::size_t b = 0; b < pi.blocks.size(); ++b) {
    if (b) os << ',';
    os << '{';
    for (std::size_t j = 0; j < pi.blocks[b].size(); ++j) {
      if (j) os << ',';
      os << pi.blocks[b][j];
    }
    os << '}';
  }
  os << '}';
  return os.str();
}

ComplexMatrix partial_trace(const NCPartition& pi, const std::vector<ComplexMatrix>& As,
                            std::size_t N) {
  if (pi.k == 0 || As.size() + 1 != pi.k) {
    throw std::invalid_argument("partial_trace: need k-1 matrices");
  }
  const std::size_t n = infer_dim(As, N);
  const ProductCache cache(As, n);
  const auto [scalar, open] = partial_trace_parts(pi, cache);
  return scalar * cache.prod[open];
}

Complex nc_moment(const CumulantTable& t, SubsetMask B) {
  const auto elems = elements_of(B);
  Complex sum = 0.0;
  for (const auto& pi : enumerate_nc(elems.size())) {
    Complex term = 1.0;
    for (const auto& b : pi.blocks) term *= t.mcirc(mapped_mask(b, elems));
    sum += term;
  }
  return sum;
}

CumulantTable free_cumulants(const std::vector<Complex>& zs) {
  const std::size_t k = zs.size();
  if (k < 1 || k > kMaxK) throw std::invalid_argument("free_cumulants: need 1..10 parameters");
  for (Complex z : zs) check_parameter(z);
  CumulantTable t;
  t.zs = zs;
  const std::size_t count = std::size_t{1} << k;
  t.m_values.assign(count, 0.0);
  t.mcirc_values.assign(count, 0.0);
  std::vector<SubsetMask> order;
  for (std::size_t B = 1; B < count; ++B) order.push_back(static_cast<SubsetMask>(B));
  std::stable_sort(order.begin(), order.end(), [](SubsetMask a, SubsetMask b) {
    return std::popcount(a) < std::popcount(b);
  });
  for (SubsetMask B : order) {
    const auto elems = elements_of(B);
    std::vector<Complex> pts;
    for (std::size_t i : elems) pts.push_back(zs[i - 1]);
    t.m_values[B] = m_divided(pts).value;
    Complex rest = 0.0;
    for (const auto& pi : enumerate_nc(elems.size())) {
      if (pi.size() == 1) continue;
      Complex term = 1.0;
      for (const auto& b : pi.blocks) term *= t.mcirc_values[mapped_mask(b, elems)];
      rest += term;
    }
    t.mcirc_values[B] = t.m_values[B] - rest;
  }
  return t;
}

DeterministicApprox M_det(const std::vector<Complex>& zs, const std::vector<ComplexMatrix>& As,
                          std::size_t N) {
  const std::size_t k = zs.size();
  if (k < 1 || k > kMaxDense) throw std::invalid_argument("M_det: need 1..6 parameters");
  if (As.size() + 1 != k) throw std::invalid_argument("M_det: need k-1 matrices");
  const std::size_t n = infer_dim(As, N);
  const CumulantTable t = free_cumulants(zs);
  const ProductCache cache(As, n);
  std::vector<Complex> coeff(cache.prod.size(), 0.0);
  for (const auto& pi : enumerate_nc(k)) {
    Complex weight = 1.0;
    for (const auto& b : pi.blocks) weight *= t.mcirc(mask_of(b));
    const auto [scalar, open] = partial_trace_parts(kreweras(pi), cache);
    coeff[open] += scalar * weight;
  }
  const auto dim = static_cast<Eigen::Index>(n);
  DeterministicApprox out{zs, As, ComplexMatrix::Zero(dim, dim)};
  for (std::size_t S = 0; S < coeff.size(); ++S) {
    if (coeff[S] != Complex(0.0)) out.M += coeff[S] * cache.prod[S];
  }
  return out;
}

double multiresolvent_residual(const RealSpectrum& s, const std::vector<Complex>& zs,
                               const std::vector<ComplexMatrix>& As, ResidualMode mode,
                               std::size_t traceless_count,
                               const std::optional<ComplexVector>& x,
                               const std::optional<ComplexVector>& y) {
  return residual_impl(s, zs, As, mode, traceless_count, x, y);
}

double multiresolvent_residual(const ComplexSpectrum& s, const std::vector<Complex>& zs,
                               const std::vector<ComplexMatrix>& As, ResidualMode mode,
                               std::size_t traceless_count,
                               const std::optional<ComplexVector>& x,
                               const std::optional<ComplexVector>& y) {
  return residual_impl(s, zs, As, mode, traceless_count, x, y);
}

}  // namespace rmtlab
