#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmtlab/eigensolve.hpp"
#include "rmtlab/types.hpp"

namespace rmtlab {

/// Index sets are 0-based positions into the basis (column indices of the
/// basis matrix, or coordinates for the standard basis).
using IndexSet = std::vector<std::size_t>;

/// {0, 1, ..., size-1}.
IndexSet leading_indices(std::size_t size);

/// Self-overlaps p_k = sum_{a in I} |<q_a, u_k>|^2 - |I|/N and their CLT
/// normalization p_hat_k = sqrt(beta N^3 / (2 |I| (N - |I|))) p_k.
struct OverlapSet {
  IndexSet index_set;
  /// Columns q_a; empty optional means the standard basis.
  std::optional<RealMatrix> basis;
  int beta = 1;
  RealVector p;
  /// Empty when the normalization was not requested.
  RealVector p_hat;

  bool standard_basis() const { return !basis.has_value(); }
};

/// sqrt(beta N^3 / (2 |I| (N - |I|))). Throws for |I| in {0, N}.
double overlap_prefactor(std::size_t N, std::size_t index_size, int beta);

OverlapSet overlaps(const RealSpectrum& s, const IndexSet& index_set,
                    const std::optional<RealMatrix>& basis = std::nullopt, int beta = 1,
                    bool normalize = true);
OverlapSet overlaps(const ComplexSpectrum& s, const IndexSet& index_set,
                    const std::optional<RealMatrix>& basis = std::nullopt, int beta = 2,
                    bool normalize = true);

/// p and p_hat of a single eigenvector.
struct SingleOverlap {
  double p = 0.0;
  double p_hat = 0.0;
};
SingleOverlap self_overlap(const RealVector& u, const IndexSet& index_set,
                           const std::optional<RealMatrix>& basis, int beta);
SingleOverlap self_overlap(const ComplexVector& u, const IndexSet& index_set,
                           const std::optional<RealMatrix>& basis, int beta);

/// A = sum_{a in I} (1 - |I|/N) q_a q_a^T - sum_{a not in I} (|I|/N) q_a q_a^T.
struct TracelessProjector {
  RealMatrix A;
  IndexSet index_set;
};
TracelessProjector traceless_projector(const IndexSet& index_set, std::size_t N,
                                       const std::optional<RealMatrix>& basis = std::nullopt);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// diagonal of R made positive.
RealMatrix haar_orthogonal(std::size_t N, std::uint64_t seed);

/// C^2 smoothed indicator of [E1, E2] with quintic smoothstep ramps of width
/// eta on both sides.
class SmoothBump {
 public:
  SmoothBump(double E1, double E2, double eta);

  double operator()(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  double E1() const { return E1_; }
  double E2() const { return E2_; }
  double eta() const { return eta_; }

 private:
  double E1_;
  double E2_;
  double eta_;
};

SmoothBump smooth_bump(double E1, double E2, double eta);

enum class Profile { paper, practical };
std::string to_string(Profile p);
Profile parse_profile(const std::string& s);

/// Exponents of the practical profile.
inline constexpr std::array<double, 5> kPracticalDelta{0.7, 0.4, 0.3, 0.9, 1.5};

struct RegularizationParams {
  std::size_t ell = 1;
  std::size_t N = 0;
  double tau = 0.2;
  double epsilon0 = 0.1;
  double C0 = 1.0;
  double epsilon1 = 0.0;
  std::array<double, 5> delta{};
  Profile profile = Profile::practical;

  // Derived scales.
  double gamma_ell = 0.0;
  double Delta_ell = 0.0;
  double eta_ell = 0.0;
  double I_lo = 0.0;
  double I_hi = 0.0;
  /// E^+ = E + shift.
  double shift = 0.0;
  /// Ramp width of f_E.
  double bump_width = 0.0;
  double eta_tilde = 0.0;
  double kappa = 0.0;
};

/// Fills the derived scales from ell, N and delta. Throws unless every
/// exponent and derived scale is positive.
RegularizationParams derive_scales(RegularizationParams p);

/// Paper profile: epsilon1 = min(epsilon0/2, tau/10000), delta = (2e1,
/// e1/max(C0+1, 100), e1/2, 6e1, 8e1). Practical profile: kPracticalDelta.
/// Delta_ell uses the mirrored index min(ell, N+1-ell), as does kappa.
RegularizationParams default_params(std::size_t ell, std::size_t N, double tau,
                                    Profile profile, double epsilon0 = 0.1, double C0 = 1.0);

/// f_E = f_{-3, E^+, bump_width}.
SmoothBump f_E(const RegularizationParams& p, double E);
/// f_tilde = f_{-kappa/2, kappa/2, kappa/2}.
SmoothBump f_tilde(const RegularizationParams& p);
/// q = f_{ell-1/3, ell+1/3, 1/3}.
SmoothBump q_bump(const RegularizationParams& p);

/// (eta_ell/pi) sum_i p_hat_i / ((lambda_i - E)^2 + eta_ell^2).
double x_of_E(const RealVector& lambdas, const OverlapSet& o, const RegularizationParams& p,
              double E);
/// Same quantity from a dense resolvent solve at E + i eta_ell:
/// (eta/pi) c [sum_{a in I} (1-|I|/N) (G Gbar)_{aa} - sum_{a not in I} (|I|/N) (G Gbar)_{aa}].
double x_of_E_resolvent(const RealMatrix& H, const OverlapSet& o, const RegularizationParams& p,
                        double E);

/// Tr f_E(H) = sum_i f_E(lambda_i).
double trace_f_E(const RealVector& lambdas, const RegularizationParams& p, double E);

/// Tensor-product Gauss-Legendre settings for the Helffer-Sjostrand integrals.
struct HSQuadrature {
  /// Nodes per panel in e and sigma.
  std::size_t e_nodes = 10;
  std::size_t sigma_nodes = 6;
  /// Geometric ratio of consecutive sigma panels above eta_tilde.
  double sigma_ratio = 4.0;
  /// Panels per ramp of f_E (before splitting at eigenvalues).
  std::size_t ramp_panels = 2;
  /// When set, the grid is doubled until two successive values agree to tol.
  bool check = false;
  double tol = 1e-6;
  int max_refinements = 4;
};

/// y_E: the Helffer-Sjostrand representation of Tr f_E(H) with the f''
/// term cut to |sigma| > eta_tilde, Tr G from the spectrum. Evaluated as
/// (1/pi) Re of the sigma > 0 half. Pieces that do not depend on E are
/// computed once per instance.
class HSEvaluator {
 public:
  HSEvaluator(const RealVector& lambdas, const RegularizationParams& p, HSQuadrature q = {});

  double operator()(double E) const;
  const HSQuadrature& quadrature() const { return q_; }

 private:
  double evaluate(double E, const HSQuadrature& q, Complex left) const;
  Complex left_ramp_terms(const HSQuadrature& q) const;

  RealVector lambdas_;
  RegularizationParams p_;
  HSQuadrature q_;
  Complex left_;
  Complex left_fine_;
};

double y_of_E(const RealVector& lambdas, const RegularizationParams& p, double E,
              HSQuadrature q = {});

/// Upper bound on |y_E - Tr f_E(H)|. Per eigenvalue and ramp of f_E the
/// dropped sigma < eta_tilde part is (1/pi) int f''(e) g(|lambda - e|) de with
/// g(d) = d atan(eta_tilde/d); since int f'' = 0 over a ramp this is at most
/// (1/pi) int|f''| min(eta_tilde, (w/2) sup g') with g'(d) <= (2/3)(eta_tilde/d)^3.
double hs_truncation_bound(const RealVector& lambdas, const RegularizationParams& p, double E);

struct VEllOptions {
  std::size_t gauss_nodes = 8;
  std::size_t min_nodes = 200;
  /// Geometric grading of panels around each eigenvalue, in units of eta_ell.
  std::vector<double> grading{1.0, 4.0, 16.0};
  /// Panels across each window where the ramp of f_E crosses an eigenvalue.
  std::size_t transition_panels = 3;
  bool check = true;
  double tol = 1e-4;
  int max_refinements = 3;
  /// Skip the HS evaluation where Tr f_E(H) and hs_truncation_bound already
  /// place y_E inside a region where q is constant.
  bool screen = true;
  HSQuadrature hs{};
};

struct VEllResult {
  double v = 0.0;
  std::size_t nodes = 0;
  /// |v(refined) - v(base)| of the last refinement step, 0 without check.
  double refinement_change = 0.0;
  /// Nodes of the final grid where y_E was evaluated by quadrature.
  std::size_t hs_evaluations = 0;
};

/// v_ell = int_{I_ell} x(E) q(y_E) dE.
VEllResult v_ell(const RealVector& lambdas, const OverlapSet& o, const RegularizationParams& p,
                 const VEllOptions& opt = {});

}  // namespace rmtlab
