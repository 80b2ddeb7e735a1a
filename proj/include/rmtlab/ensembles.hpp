#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rmtlab/rng.hpp"
#include "rmtlab/types.hpp"

namespace rmtlab {

enum class EntryLaw { gaussian, rademacher, uniform, custom };

std::string_view to_string(EntryLaw law);
/// Throws std::invalid_argument for an unknown name.
EntryLaw parse_entry_law(std::string_view name);

/// Law of the normalized entry sqrt(N) h_ij: mean 0, variance 1.
///
/// The custom law is a finitely supported symmetric law given by atoms and
/// probabilities; it is rescaled to unit variance on construction.
class EntryDistribution {
 public:
  EntryDistribution() = default;
  explicit EntryDistribution(EntryLaw law);
  EntryDistribution(std::vector<double> atoms, std::vector<double> probs);

  EntryLaw law() const { return law_; }
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }

  double draw(Engine& engine) const;
  /// E[X^p] in closed form.
  double moment(int p) const;

 private:
  EntryLaw law_ = EntryLaw::gaussian;
  std::vector<double> atoms_;
  std::vector<double> probs_;
};

struct EnsembleSpec {
  std::size_t N = 2;
  int beta = 1;
  EntryDistribution entries;
  std::uint64_t seed = 0;
  /// Diagonal variance is diag_variance_factor/N; defaults to 2 (beta=1) or 1
  /// (beta=2).
  std::optional<double> diag_variance_factor;

  double diag_factor() const;
  /// Throws std::invalid_argument when N < 2, beta not in {1,2}, or the
  /// diagonal factor is not positive.
  void validate() const;
};

using WignerMatrix = std::variant<RealMatrix, ComplexMatrix>;

struct WignerSample {
  WignerMatrix matrix;
  EnsembleSpec spec;
  std::uint64_t trial = 0;

  const RealMatrix& real() const { return std::get<RealMatrix>(matrix); }
  const ComplexMatrix& complex() const { return std::get<ComplexMatrix>(matrix); }
};

/// Draws the trial-th matrix of the ensemble from stream (seed, trial).
/// Mirrored entries are copies, so the result is exactly self-adjoint.
WignerSample sample_wigner(const EnsembleSpec& spec, std::uint64_t trial);

/// Cumulants kappa_1..kappa_r of sqrt(N) h_ij, from closed-form moments via
/// the moment-to-cumulant recursion. r <= 12.
std::vector<double> entry_cumulants(const EntryDistribution& law, int r);

/// kappa_1..kappa_n from raw moments m_1..m_n.
std::vector<double> moments_to_cumulants(const std::vector<double>& moments);

}  // namespace rmtlab
