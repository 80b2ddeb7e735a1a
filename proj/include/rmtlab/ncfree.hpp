#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmtlab/eigensolve.hpp"
#include "rmtlab/types.hpp"

namespace rmtlab {

/// A set partition of [k] = {1, ..., k}. Labels are 1-based. Each block is
/// sorted and blocks are ordered by their minimum.
struct NCPartition {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> blocks;

  std::size_t size() const { return blocks.size(); }
  /// Index into blocks of the block holding label i.
  std::size_t block_of(std::size_t i) const;

  friend bool operator==(const NCPartition&, const NCPartition&) = default;
  friend auto operator<=>(const NCPartition&, const NCPartition&) = default;
};

/// Sorts blocks and checks that they partition [k].
NCPartition make_partition(std::size_t k, std::vector<std::vector<std::size_t>> blocks);

/// Stack scan: a block may only resume while it is the innermost open block.
bool is_noncrossing(const NCPartition& pi);

/// All of NC[k] for 1 <= k <= 10, ordered lexicographically by block list.
/// Computed once per k; the reference stays valid for the program lifetime.
const std::vector<NCPartition>& enumerate_nc(std::size_t k);

/// Kreweras complement. Primed points i' sit between i and i+1; i' and j'
/// (i < j) share a block iff no block of pi meets both {i+1..j} and its
/// complement. Throws std::invalid_argument for a crossing partition.
NCPartition kreweras(const NCPartition& pi);

std::string to_string(const NCPartition& pi);

/// pTr_pi(A_1..A_{k-1}) = prod_{B != B(k)} <prod_{j in B} A_j> *
/// prod_{j in B(k), j != k} A_j with <X> = Tr X / N. N is taken from As; it
/// must be given when As is empty (k = 1).
ComplexMatrix partial_trace(const NCPartition& pi, const std::vector<ComplexMatrix>& As,
                            std::size_t N = 0);

/// Subsets of [k] as bitmasks, bit i-1 for label i.
using SubsetMask = std::uint32_t;

struct CumulantTable {
  std::vector<Complex> zs;
  /// Indexed by SubsetMask; entry 0 unused.
  std::vector<Complex> m_values;
  std::vector<Complex> mcirc_values;

  std::size_t k() const { return zs.size(); }
  Complex m(SubsetMask B) const { return m_values.at(B); }
  Complex mcirc(SubsetMask B) const { return mcirc_values.at(B); }
};

/// Sum over pi in NC(B) of prod_{B' in pi} m_o[B'], B relabelled in order.
Complex nc_moment(const CumulantTable& t, SubsetMask B);

/// m[B] for every subset via m_divided, then m_o by inverting the
/// moment-cumulant relation in increasing subset size. k <= 10.
CumulantTable free_cumulants(const std::vector<Complex>& zs);

struct DeterministicApprox {
  std::vector<Complex> zs;
  std::vector<ComplexMatrix> As;
  ComplexMatrix M;
};

/// M(z_1, A_1, ..., A_{k-1}, z_k) = sum_{pi in NC[k]} pTr_{K(pi)}(A) prod m_o[B].
/// Requires 1 <= k <= 6. N must be given when As is empty.
DeterministicApprox M_det(const std::vector<Complex>& zs, const std::vector<ComplexMatrix>& As,
                          std::size_t N = 0);

enum class ResidualMode { avg, iso };

/// avg: |Tr(G_1 A_1 ... G_k A_k - M(z_1..z_k) A_k)| * eta^{k - m/2} with As of
/// size k. iso: |<x, (G_1 A_1 ... G_k A_k G_{k+1} - M(z_1..z_{k+1})) y>| *
/// sqrt(N) * eta^{k - m/2 + 1/2} with As of size k = zs.size() - 1.
/// eta = min_j |Im z_j|; traceless_count is m.
double multiresolvent_residual(const RealSpectrum& s, const std::vector<Complex>& zs,
                               const std::vector<ComplexMatrix>& As, ResidualMode mode,
                               std::size_t traceless_count,
                               const std::optional<ComplexVector>& x = std::nullopt,
                               const std::optional<ComplexVector>& y = std::nullopt);
double multiresolvent_residual(const ComplexSpectrum& s, const std::vector<Complex>& zs,
                               const std::vector<ComplexMatrix>& As, ResidualMode mode,
                               std::size_t traceless_count,
                               const std::optional<ComplexVector>& x = std::nullopt,
                               const std::optional<ComplexVector>& y = std::nullopt);

}  // namespace rmtlab
