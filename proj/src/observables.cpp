#include "rmtlab/observables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rmtlab/quadrature.hpp"
#include "rmtlab/resolvent.hpp"
#include "rmtlab/rng.hpp"
#include "rmtlab/semicircle.hpp"

namespace rmtlab {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kHaarPurpose = 0x48414152;  // "HAAR"

void check_index_set(const IndexSet& I, std::size_t N) {
  std::vector<bool> seen(N, false);
  for (std::size_t a : I) {
    if (a >= N) throw std::out_of_range("index set entry outside [0, N)");
    if (seen[a]) throw std::invalid_argument("index set has a repeated entry");
    seen[a] = true;
  }
}

void check_basis(const RealMatrix& Q, std::size_t N) {
  const auto n = static_cast<Eigen::Index>(N);
  if (Q.rows() != n || Q.cols() != n) throw std::invalid_argument("basis must be N x N");
  const RealMatrix gram = Q.transpose() * Q - RealMatrix::Identity(n, n);
  if (gram.cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("basis is not orthonormal");
}

// Smoothstep s(t) = 6t^5 - 15t^4 + 10t^3 and its derivatives on [0, 1].
double step(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }
double step1(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
double step2(double t) { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }

template <class Scalar>
OverlapSet overlaps_impl(const Spectrum<Scalar>& s, const IndexSet& I,
                         const std::optional<RealMatrix>& basis, int beta, bool normalize) {
  const Eigen::Index n = s.vectors.rows();
  const auto N = static_cast<std::size_t>(n);
  check_index_set(I, N);
  if (basis) check_basis(*basis, N);
  OverlapSet out;
  out.index_set = I;
  out.basis = basis;
  out.beta = beta;
  const double mean = static_cast<double>(I.size()) / static_cast<double>(N);
  out.p = RealVector::Constant(n, -mean);
  // Full index set: the mass of a unit vector is 1, so p vanishes exactly.
  if (I.size() == N) out.p.setZero();
  for (std::size_t i = 0; i < I.size() && I.size() < N; ++i) {
    const auto ia = static_cast<Eigen::Index>(I[i]);
    if (basis) {
      const Matrix<Scalar> q = basis->col(ia).template cast<Scalar>();
      out.p += (q.adjoint() * s.vectors).cwiseAbs2().transpose();
    } else {
      out.p += s.vectors.row(ia).cwiseAbs2().transpose();
    }
  }
  if (normalize) out.p_hat = overlap_prefactor(N, I.size(), beta) * out.p;
  return out;
}

template <class Scalar>
SingleOverlap self_overlap_impl(const Vector<Scalar>& u, const IndexSet& I,
                                const std::optional<RealMatrix>& basis, int beta) {
  const auto N = static_cast<std::size_t>(u.size());
  check_index_set(I, N);
  if (basis) check_basis(*basis, N);
  double mass = 0.0;
  for (std::size_t a : I) {
    const auto ia = static_cast<Eigen::Index>(a);
    if (basis) {
      mass += std::norm(Complex(basis->col(ia).template cast<Scalar>().dot(u)));
    } else {
      mass += std::norm(Complex(u[ia]));
    }
  }
  SingleOverlap out;
  out.p = mass - static_cast<double>(I.size()) / static_cast<double>(N);
  out.p_hat = overlap_prefactor(N, I.size(), beta) * out.p;
  return out;
}

// Gauss-Legendre nodes of a panel list, appended to (x, w).
void push_panel(double a, double b, std::size_t n, std::vector<double>& x,
                std::vector<double>& w) {
  if (!(b > a)) return;
  const GaussRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    x.push_back(mid + half * rule.nodes[i]);
    w.push_back(half * rule.weights[i]);
  }
}

std::vector<double> sorted_unique(std::vector<double> v, double lo, double hi) {
  for (double& x : v) x = std::clamp(x, lo, hi);
  v.push_back(lo);
  v.push_back(hi);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > 1e-14 * std::max(1.0, std::abs(x))) out.push_back(x);
  }
  return out;
}

// Ramp [a, b] split into equal panels and at the eigenvalues inside.
void ramp_nodes(const RealVector& lambdas, double a, double b, const HSQuadrature& q,
                std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> br;
  for (std::size_t j = 1; j < q.ramp_panels; ++j) {
    br.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(q.ramp_panels));
  }
  const double* first = std::lower_bound(lambdas.data(), lambdas.data() + lambdas.size(), a);
  for (const double* l = first; l != lambdas.data() + lambdas.size() && *l < b; ++l) {
    br.push_back(*l);
  }
  const auto pts = sorted_unique(br, a, b);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) push_panel(pts[i], pts[i + 1], q.e_nodes, x, w);
}

struct SigmaGrid {
  std::vector<double> x;
  std::vector<double> w;
};

// Geometric panels from eta_tilde to kappa/2, then the ramp [kappa/2, kappa].
SigmaGrid sigma_grid(const RegularizationParams& p, const HSQuadrature& q) {
  SigmaGrid g;
  const double lo = p.eta_tilde;
  const double half = 0.5 * p.kappa;
  std::vector<double> br{lo};
  for (double s = lo * q.sigma_ratio; s < half; s *= q.sigma_ratio) br.push_back(s);
  if (half > lo) br.push_back(half);
  br.push_back(p.kappa);
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    push_panel(br[i], br[i + 1], q.sigma_nodes, g.x, g.w);
  }
  return g;
}

Complex trace_G(const RealVector& lambdas, double e, double sigma) {
  Complex sum = 0.0;
  const Complex z(e, sigma);
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) sum += 1.0 / (lambdas[k] - z);
  return sum;
}

// Ramp contributions of the f'' term (all sigma > eta_tilde) and of the
// f and f' terms (sigma in the ramp of f_tilde).
Complex ramp_terms(const RealVector& lambdas, const SmoothBump& f, const SmoothBump& ft,
                   const SigmaGrid& sg, const std::vector<double>& ex,
                   const std::vector<double>& ew) {
  const Complex I(0.0, 1.0);
  Complex total = 0.0;
  for (std::size_t m = 0; m < sg.x.size(); ++m) {
    const double s = sg.x[m];
    const double fts = ft(s);
    const double dfts = ft.d1(s);
    Complex a = 0.0;
    Complex b = 0.0;
    Complex c = 0.0;
    for (std::size_t j = 0; j < ex.size(); ++j) {
      const Complex tg = trace_G(lambdas, ex[j], s);
      a += ew[j] * f.d2(ex[j]) * tg;
      b += ew[j] * f(ex[j]) * tg;
      c += ew[j] * f.d1(ex[j]) * tg;
    }
    total += sg.w[m] * (I * s * fts * a + dfts * (I * b - s * c));
  }
  return total;
}

HSQuadrature refined(HSQuadrature q) {
  q.ramp_panels *= 2;
  q.sigma_ratio = std::sqrt(q.sigma_ratio);
  return q;
}

}  // namespace

IndexSet leading_indices(std::size_t size) {
  IndexSet I(size);
  for (std::size_t i = 0; i < size; ++i) I[i] = i;
  return I;
}

double overlap_prefactor(std::size_t N, std::size_t index_size, int beta) {
  if (index_size == 0 || index_size >= N) {
    throw std::invalid_argument("normalized overlap needs 0 < |I| < N");
  }
  if (beta != 1 && beta != 2) throw std::invalid_argument("beta must be 1 or 2");
  const double n = static_cast<double>(N);
  const double m = static_cast<double>(index_size);
  return std::sqrt(beta * n * n * n / (2.0 * m * (n - m)));
}

OverlapSet overlaps(const RealSpectrum& s, const IndexSet& index_set,
                    const std::optional<RealMatrix>& basis, int beta, bool normalize) {
  return overlaps_impl(s, index_set, basis, beta, normalize);
}

OverlapSet overlaps(const ComplexSpectrum& s, const IndexSet& index_set,
                    const std::optional<RealMatrix>& basis, int beta, bool normalize) {
  return overlaps_impl(s, index_set, basis, beta, normalize);
}

SingleOverlap self_overlap(const RealVector& u, const IndexSet& index_set,
                           const std::optional<RealMatrix>& basis, int beta) {
  return self_overlap_impl(u, index_set, basis, beta);
}

SingleOverlap self_overlap(const ComplexVector& u, const IndexSet& index_set,
                           const std::optional<RealMatrix>& basis, int beta) {
  return self_overlap_impl(u, index_set, basis, beta);
}

TracelessProjector traceless_projector(const IndexSet& index_set, std::size_t N,
                                       const std::optional<RealMatrix>& basis) {
  check_index_set(index_set, N);
  if (basis) check_basis(*basis, N);
  const auto n = static_cast<Eigen::Index>(N);
  const double frac = static_cast<double>(index_set.size()) / static_cast<double>(N);
  RealVector d = RealVector::Constant(n, -frac);
  for (std::size_t a : index_set) d[static_cast<Eigen::Index>(a)] = 1.0 - frac;
  TracelessProjector out;
  out.index_set = index_set;
  if (basis) {
    out.A = *basis * d.asDiagonal() * basis->transpose();
    out.A = 0.5 * (out.A + out.A.transpose()).eval();
  } else {
    out.A = d.asDiagonal();
  }
  return out;
}

RealMatrix haar_orthogonal(std::size_t N, std::uint64_t seed) {
  Engine engine = trial_stream(seed, 0, kHaarPurpose);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(N);
  RealMatrix X(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(engine);
  }
  const Eigen::HouseholderQR<RealMatrix> qr(X);
  RealMatrix Q = qr.householderQ();
  const RealMatrix& R = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

SmoothBump::SmoothBump(double E1, double E2, double eta) : E1_(E1), E2_(E2), eta_(eta) {
  if (!(E1 < E2)) throw std::invalid_argument("smooth_bump: need E1 < E2");
  if (!(eta > 0.0)) throw std::invalid_argument("smooth_bump: need eta > 0");
}

double SmoothBump::operator()(double x) const {
  if (x <= E1_ - eta_ || x >= E2_ + eta_) return 0.0;
  if (x < E1_) return step((x - (E1_ - eta_)) / eta_);
  if (x > E2_) return step((E2_ + eta_ - x) / eta_);
  return 1.0;
}

double SmoothBump::d1(double x) const {
  if (x <= E1_ - eta_ || x >= E2_ + eta_) return 0.0;
  if (x < E1_) return step1((x - (E1_ - eta_)) / eta_) / eta_;
  if (x > E2_) return -step1((E2_ + eta_ - x) / eta_) / eta_;
  return 0.0;
}

double SmoothBump::d2(double x) const {
  if (x <= E1_ - eta_ || x >= E2_ + eta_) return 0.0;
  if (x < E1_) return step2((x - (E1_ - eta_)) / eta_) / (eta_ * eta_);
  if (x > E2_) return step2((E2_ + eta_ - x) / eta_) / (eta_ * eta_);
  return 0.0;
}

SmoothBump smooth_bump(double E1, double E2, double eta) { return SmoothBump(E1, E2, eta); }

std::string to_string(Profile p) { return p == Profile::paper ? "paper" : "practical"; }

Profile parse_profile(const std::string& s) {
  if (s == "paper") return Profile::paper;
  if (s == "practical") return Profile::practical;
  throw std::invalid_argument("unknown profile '" + s + "' (expected paper or practical)");
}

RegularizationParams derive_scales(RegularizationParams p) {
  if (p.N == 0 || p.ell < 1 || p.ell > p.N) throw std::out_of_range("edge index outside [1, N]");
  for (double d : p.delta) {
    if (!(d > 0.0)) throw std::invalid_argument("regularization exponents must be positive");
  }
  const double N = static_cast<double>(p.N);
  const auto mirrored = std::min(p.ell, p.N + 1 - p.ell);
  p.gamma_ell = gamma_quantile(p.ell, p.N);
  p.Delta_ell = gap_scale(p.ell, p.N);
  p.eta_ell = p.Delta_ell * std::pow(N, -p.delta[0]);
  const double half_width = p.Delta_ell * std::pow(N, p.delta[1]);
  p.I_lo = p.gamma_ell - half_width;
  p.I_hi = p.gamma_ell + half_width;
  p.shift = p.Delta_ell * std::pow(N, -p.delta[2]);
  p.bump_width = p.Delta_ell * std::pow(N, -p.delta[3]);
  p.eta_tilde = p.Delta_ell * std::pow(N, -p.delta[4]);
  p.kappa = std::pow(static_cast<double>(mirrored) / N, 2.0 / 3.0);
  for (double v : {p.eta_ell, p.shift, p.bump_width, p.eta_tilde, p.kappa}) {
    if (!(v > 0.0)) throw std::invalid_argument("derived regularization scale is not positive");
  }
  return p;
}

RegularizationParams default_params(std::size_t ell, std::size_t N, double tau, Profile profile,
                                    double epsilon0, double C0) {
  RegularizationParams p;
  p.ell = ell;
  p.N = N;
  p.tau = tau;
  p.epsilon0 = epsilon0;
  p.C0 = C0;
  p.profile = profile;
  p.epsilon1 = std::min(epsilon0 / 2.0, tau / 10000.0);
  if (profile == Profile::paper) {
    const double e1 = p.epsilon1;
    p.delta = {2.0 * e1, e1 / std::max(C0 + 1.0, 100.0), e1 / 2.0, 6.0 * e1, 8.0 * e1};
  } else {
    p.delta = kPracticalDelta;
  }
  return derive_scales(p);
}

SmoothBump f_E(const RegularizationParams& p, double E) {
  return SmoothBump(-3.0, E + p.shift, p.bump_width);
}

SmoothBump f_tilde(const RegularizationParams& p) {
  return SmoothBump(-0.5 * p.kappa, 0.5 * p.kappa, 0.5 * p.kappa);
}

SmoothBump q_bump(const RegularizationParams& p) {
  const double l = static_cast<double>(p.ell);
  return SmoothBump(l - 1.0 / 3.0, l + 1.0 / 3.0, 1.0 / 3.0);
}

double x_of_E(const RealVector& lambdas, const OverlapSet& o, const RegularizationParams& p,
              double E) {
  if (o.p_hat.size() != lambdas.size()) throw std::invalid_argument("x_of_E: p_hat missing");
  const double eta = p.eta_ell;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const double d = lambdas[i] - E;
    sum += o.p_hat[i] / (d * d + eta * eta);
  }
  return eta / kPi * sum;
}

double x_of_E_resolvent(const RealMatrix& H, const OverlapSet& o, const RegularizationParams& p,
                        double E) {
  const auto N = static_cast<std::size_t>(H.rows());
  const double eta = p.eta_ell;
  const ComplexMatrix G = resolvent(H, SpectralPoint(E, eta)).G;
  // (G Gbar)_{qq} = |G q|^2 since Gbar = G^*.
  const double frac = static_cast<double>(o.index_set.size()) / static_cast<double>(N);
  std::vector<bool> inside(N, false);
  for (std::size_t a : o.index_set) inside[a] = true;
  double sum = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    const double ggbar = o.basis ? (G * o.basis->col(ia).cast<Complex>()).squaredNorm()
                                 : G.col(ia).squaredNorm();
    sum += inside[a] ? (1.0 - frac) * ggbar : -frac * ggbar;
  }
  return eta / kPi * overlap_prefactor(N, o.index_set.size(), o.beta) * sum;
}

double trace_f_E(const RealVector& lambdas, const RegularizationParams& p, double E) {
  const SmoothBump f = f_E(p, E);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) sum += f(lambdas[i]);
  return sum;
}

HSEvaluator::HSEvaluator(const RealVector& lambdas, const RegularizationParams& p, HSQuadrature q)
    : lambdas_(lambdas), p_(p), q_(q) {
  std::sort(lambdas_.data(), lambdas_.data() + lambdas_.size());
  left_ = left_ramp_terms(q_);
  if (q_.check) left_fine_ = left_ramp_terms(refined(q_));
}

Complex HSEvaluator::left_ramp_terms(const HSQuadrature& q) const {
  // f_E on the left ramp [-3 - w, -3] does not depend on E.
  const SmoothBump f = f_E(p_, 0.0);
  const SigmaGrid sg = sigma_grid(p_, q);
  std::vector<double> ex;
  std::vector<double> ew;
  ramp_nodes(lambdas_, -3.0 - p_.bump_width, -3.0, q, ex, ew);
  return ramp_terms(lambdas_, f, f_tilde(p_), sg, ex, ew);
}

double HSEvaluator::evaluate(double E, const HSQuadrature& q, Complex left) const {
  const SmoothBump f = f_E(p_, E);
  const SmoothBump ft = f_tilde(p_);
  const SigmaGrid sg = sigma_grid(p_, q);
  const double Eplus = E + p_.shift;
  std::vector<double> ex;
  std::vector<double> ew;
  ramp_nodes(lambdas_, Eplus, Eplus + p_.bump_width, q, ex, ew);
  Complex total = left + ramp_terms(lambdas_, f, ft, sg, ex, ew);
  // Plateau [-3, E^+] of the f term: int de / (lambda - e - i s) in closed form.
  const Complex I(0.0, 1.0);
  for (std::size_t m = 0; m < sg.x.size(); ++m) {
    const double s = sg.x[m];
    const double dfts = ft.d1(s);
    if (dfts == 0.0) continue;
    Complex plateau = 0.0;
    for (Eigen::Index k = 0; k < lambdas_.size(); ++k) {
      plateau += std::log(Complex(lambdas_[k] + 3.0, -s)) - std::log(Complex(lambdas_[k] - Eplus, -s));
    }
    total += sg.w[m] * dfts * I * plateau;
  }
  return total.real() / kPi;
}

double HSEvaluator::operator()(double E) const {
  const double base = evaluate(E, q_, left_);
  if (!q_.check) return base;
  HSQuadrature q = refined(q_);
  double prev = base;
  double next = evaluate(E, q, left_fine_);
  for (int r = 1; std::abs(next - prev) > q_.tol; ++r) {
    if (r >= q_.max_refinements) {
      throw QuadratureError("y_E: grid refinement did not converge");
    }
    q = refined(q);
    prev = next;
    next = evaluate(E, q, left_ramp_terms(q));
  }
  return next;
}

double y_of_E(const RealVector& lambdas, const RegularizationParams& p, double E,
              HSQuadrature q) {
  return HSEvaluator(lambdas, p, q)(E);
}

double hs_truncation_bound(const RealVector& lambdas, const RegularizationParams& p, double E) {
  const double w = p.bump_width;
  const double et = p.eta_tilde;
  // int |f''| over one quintic ramp is 2 max|f'| = 3.75 / w.
  const double scale = 3.75 / (kPi * w);
  const double Eplus = E + p.shift;
  const std::array<std::pair<double, double>, 2> ramps{
      std::pair{-3.0 - w, -3.0}, std::pair{Eplus, Eplus + w}};
  double total = 0.0;
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    for (const auto& [a, b] : ramps) {
      const double d = std::max({a - lambdas[k], lambdas[k] - b, 0.0});
      const double slope = d > 0.0 ? std::min(kPi / 2.0, (2.0 / 3.0) * std::pow(et / d, 3)) : kPi / 2.0;
      total += scale * std::min(et, 0.5 * w * slope);
    }
  }
  return total;
}

VEllResult v_ell(const RealVector& lambdas_in, const OverlapSet& o, const RegularizationParams& p,
                 const VEllOptions& opt) {
  RealVector lambdas = lambdas_in;
  std::sort(lambdas.data(), lambdas.data() + lambdas.size());
  const HSEvaluator y(lambdas, p, opt.hs);
  const SmoothBump q = q_bump(p);
  const double l = static_cast<double>(p.ell);
  std::size_t hs_calls = 0;
  // q of y_E when it is fixed by the bound, NaN otherwise.
  auto screened = [&](double E) {
    if (!opt.screen) return std::numeric_limits<double>::quiet_NaN();
    const double t = trace_f_E(lambdas, p, E);
    const double b = hs_truncation_bound(lambdas, p, E) + 1e-6;
    if (t + b <= l - 2.0 / 3.0 || t - b >= l + 2.0 / 3.0) return 0.0;
    if (t - b >= l - 1.0 / 3.0 && t + b <= l + 1.0 / 3.0) return 1.0;
    return std::numeric_limits<double>::quiet_NaN();
  };
  auto integrand = [&](double E) {
    double qv = screened(E);
    if (std::isnan(qv)) {
      qv = q(y(E));
      ++hs_calls;
    }
    return qv == 0.0 ? 0.0 : x_of_E(lambdas_in, o, p, E) * qv;
  };

  std::vector<double> br;
  const double reach = opt.grading.empty() ? 0.0 : opt.grading.back() * p.eta_ell;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas[i];
    if (l > p.I_lo - reach && l < p.I_hi + reach) {
      br.push_back(l);
      for (double g : opt.grading) {
        br.push_back(l - g * p.eta_ell);
        br.push_back(l + g * p.eta_ell);
      }
    }
    // E where the right ramp of f_E covers lambda: [l - shift - w, l - shift].
    const double hi = l - p.shift;
    const double lo = hi - p.bump_width;
    if (hi > p.I_lo && lo < p.I_hi) {
      for (std::size_t j = 0; j <= opt.transition_panels; ++j) {
        br.push_back(lo + (hi - lo) * static_cast<double>(j) /
                              static_cast<double>(std::max<std::size_t>(opt.transition_panels, 1)));
      }
    }
  }
  std::vector<double> panels = sorted_unique(br, p.I_lo, p.I_hi);
  // Split the widest panels until the node budget is met.
  while ((panels.size() - 1) * opt.gauss_nodes < opt.min_nodes) {
    std::size_t widest = 0;
    for (std::size_t i = 1; i + 1 < panels.size(); ++i) {
      if (panels[i + 1] - panels[i] > panels[widest + 1] - panels[widest]) widest = i;
    }
    panels.insert(panels.begin() + static_cast<std::ptrdiff_t>(widest) + 1,
                  0.5 * (panels[widest] + panels[widest + 1]));
  }

  auto integrate = [&](const std::vector<double>& pts) {
    std::vector<double> x;
    std::vector<double> w;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) push_panel(pts[i], pts[i + 1], opt.gauss_nodes, x, w);
    double sum = 0.0;
    hs_calls = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * integrand(x[i]);
    return std::pair{sum, x.size()};
  };
  auto halve = [](const std::vector<double>& pts) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      out.push_back(pts[i]);
      out.push_back(0.5 * (pts[i] + pts[i + 1]));
    }
    out.push_back(pts.back());
    return out;
  };

  VEllResult res;
  auto [v, nodes] = integrate(panels);
  res.v = v;
  res.nodes = nodes;
  res.hs_evaluations = hs_calls;
  if (!opt.check) return res;
  for (int r = 0;; ++r) {
    panels = halve(panels);
    const auto [vf, nf] = integrate(panels);
    res.refinement_change = std::abs(vf - res.v);
    res.v = vf;
    res.nodes = nf;
    res.hs_evaluations = hs_calls;
    if (res.refinement_change <= opt.tol) return res;
    if (r + 1 >= opt.max_refinements) throw QuadratureError("v_ell: refinement did not converge");
  }
}

}  // namespace rmtlab
