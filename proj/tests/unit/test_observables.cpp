#include "doctest.h"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "rmtlab/eigensolve.hpp"
#include "rmtlab/ensembles.hpp"
#include "rmtlab/observables.hpp"
#include "rmtlab/semicircle.hpp"

using namespace rmtlab;
using std::numbers::pi;

namespace {

using boost::math::quadrature::gauss_kronrod;

RealSpectrum goe_spectrum(std::size_t N, std::uint64_t seed, std::uint64_t trial) {
  EnsembleSpec s;
  s.N = N;
  s.seed = seed;
  return eig_sym(sample_wigner(s, trial).real(), EigenBackend::lapack);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Piecewise Gauss-Kronrod over [a, b] with breakpoints.
template <class F>
double integrate_pieces(F f, std::vector<double> br, double a, double b) {
  br.push_back(a);
  br.push_back(b);
  std::sort(br.begin(), br.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double lo = std::clamp(br[i], a, b);
    const double hi = std::clamp(br[i + 1], a, b);
    if (hi > lo) sum += gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, 1e-11);
  }
  return sum;
}

// Exact Tr f_E minus the sigma < eta_tilde part of the f'' term:
// sum_lambda [f_E(lambda) - (1/pi) int f_E''(e) |lambda-e| atan(eta_tilde/|lambda-e|) de].
double y_oracle(const RealVector& lambdas, const RegularizationParams& p, double E) {
  const SmoothBump f = f_E(p, E);
  const double et = p.eta_tilde;
  double total = 0.0;
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const double lam = lambdas[k];
    total += f(lam);
    auto T = [&](double e) {
      const double d = std::abs(lam - e);
      return d == 0.0 ? 0.0 : f.d2(e) * d * std::atan(et / d);
    };
    for (auto [a, b] : {std::pair{-3.0 - p.bump_width, -3.0},
                        std::pair{f.E2(), f.E2() + p.bump_width}}) {
      total -= integrate_pieces(T, {lam}, a, b) / pi;
    }
  }
  return total;
}

RealVector quantile_spectrum(std::size_t N) {
  RealVector g(static_cast<Eigen::Index>(N));
  for (std::size_t i = 1; i <= N; ++i) g[static_cast<Eigen::Index>(i - 1)] = gamma_quantile(i, N);
  return g;
}

}  // namespace

TEST_CASE("overlaps: completeness, full index set, two-by-two example") {
  const RealSpectrum s = goe_spectrum(60, 4, 0);
  for (std::size_t size : {1u, 17u, 30u, 59u}) {
    const OverlapSet o = overlaps(s, leading_indices(size));
    CHECK(std::abs(o.p.sum()) <= 1e-10);
    CHECK(o.p_hat.isApprox(overlap_prefactor(60, size, 1) * o.p));
  }
  const OverlapSet full = overlaps(s, leading_indices(60), std::nullopt, 1, false);
  CHECK(full.p.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(full.p_hat.size() == 0);
  CHECK_THROWS_AS(overlaps(s, leading_indices(60)), std::invalid_argument);
  CHECK_THROWS_AS(overlaps(s, IndexSet{}), std::invalid_argument);
  CHECK_THROWS_AS(overlaps(s, IndexSet{3, 3}), std::invalid_argument);
  CHECK_THROWS_AS(overlaps(s, IndexSet{60}), std::out_of_range);

  RealSpectrum two;
  two.lambdas = RealVector::LinSpaced(2, -1.0, 1.0);
  two.vectors = RealMatrix::Identity(2, 2);
  const OverlapSet o2 = overlaps(two, IndexSet{0});
  CHECK(o2.p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(o2.p[1] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(o2.p_hat[0] == doctest::Approx(std::sqrt(8.0 / 2.0) * 0.5));
}

TEST_CASE("overlaps in a Haar basis: completeness and agreement with self_overlap") {
  const RealSpectrum s = goe_spectrum(40, 5, 0);
  const RealMatrix Q = haar_orthogonal(40, 77);
  CHECK((Q.transpose() * Q - RealMatrix::Identity(40, 40)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(haar_orthogonal(40, 77) == Q);
  const IndexSet I{2, 5, 11, 30};
  const OverlapSet o = overlaps(s, I, Q);
  CHECK(std::abs(o.p.sum()) <= 1e-10);
  const SingleOverlap one = self_overlap(RealVector(s.vectors.col(7)), I, Q, 1);
  CHECK(one.p == doctest::Approx(o.p[7]).epsilon(1e-12));
  CHECK(one.p_hat == doctest::Approx(o.p_hat[7]).epsilon(1e-12));

  RealMatrix bad = Q;
  bad(0, 0) += 1e-6;
  CHECK_THROWS_AS(overlaps(s, I, bad), std::invalid_argument);

  // The standard-basis path and an explicit identity basis agree.
  const OverlapSet e1 = overlaps(s, I);
  const OverlapSet e2 = overlaps(s, I, RealMatrix(RealMatrix::Identity(40, 40)));
  CHECK((e1.p - e2.p).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("complex spectrum overlaps use beta = 2") {
  EnsembleSpec spec;
  spec.N = 50;
  spec.beta = 2;
  spec.seed = 8;
  const ComplexSpectrum s = eig_sym(sample_wigner(spec, 0).complex(), EigenBackend::lapack);
  const OverlapSet o = overlaps(s, leading_indices(20));
  CHECK(o.beta == 2);
  CHECK(std::abs(o.p.sum()) <= 1e-10);
  CHECK(o.p_hat[3] == doctest::Approx(overlap_prefactor(50, 20, 2) * o.p[3]));
  CHECK(overlap_prefactor(50, 20, 2) == doctest::Approx(std::sqrt(2.0) * overlap_prefactor(50, 20, 1)));
}

TEST_CASE("edge overlap moments at N=300: mean over 2000 trials, variance at two index sizes") {
  const std::size_t N = 300;
  EnsembleSpec spec;
  spec.N = N;
  spec.seed = 2024;
  const IndexSet half = leading_indices(N / 2);
  const auto n09 = static_cast<std::size_t>(std::lround(std::pow(300.0, 0.9)));
  const IndexSet big = leading_indices(n09);
  std::vector<double> a, b;
  for (std::uint64_t t = 0; t < 4000; ++t) {
    const auto pair = eig_select(sample_wigner(spec, t).real(), 1, EigenBackend::lapack);
    a.push_back(self_overlap(pair.vector, half, std::nullopt, 1).p_hat);
    b.push_back(self_overlap(pair.vector, big, std::nullopt, 1).p_hat);
  }
  const std::vector<double> first(a.begin(), a.begin() + 2000);
  const double m = mean(first);
  double var = 0.0;
  for (double x : first) var += (x - m) * (x - m);
  const double se = std::sqrt(var / 1999.0 / 2000.0);
  CHECK(std::abs(m) <= 3.0 * se);
  for (const auto* v : {&a, &b}) {
    double second = 0.0;
    for (double x : *v) second += x * x;
    second /= static_cast<double>(v->size());
    CHECK(std::abs(second - 1.0) <= 0.1);
  }
}

TEST_CASE("QUE proxy: max overlap deviation at N=500 over 100 trials" * doctest::may_fail()) {
  const std::size_t N = 500;
  const IndexSet I = leading_indices(250);
  std::vector<double> stat;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const OverlapSet o = overlaps(goe_spectrum(N, 31, t), I, std::nullopt, 1, false);
    stat.push_back(o.p.cwiseAbs().maxCoeff() * double(N) / std::sqrt(250.0));
  }
  const auto within = std::count_if(stat.begin(), stat.end(),
                                    [&](double x) { return x <= std::pow(double(N), 0.2); });
  CHECK(within >= 95);
}

TEST_CASE("max overlap deviation follows the Gaussian extreme-value law") {
  // p_k N / sqrt|I| is close to a standard normal for |I| = N/2, nearly
  // independent over k: P(max <= x) ~ (2 Phi(x) - 1)^N.
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  for (std::size_t N : {250u, 500u}) {
    const IndexSet I = leading_indices(N / 2);
    std::vector<double> stat;
    for (std::uint64_t t = 0; t < 60; ++t) {
      const OverlapSet o = overlaps(goe_spectrum(N, 32, t), I, std::nullopt, 1, false);
      stat.push_back(o.p.cwiseAbs().maxCoeff() * double(N) / std::sqrt(double(N / 2)));
    }
    double lo = 0.0, hi = 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::pow(2.0 * phi(mid) - 1.0, double(N)) < 0.5 ? lo : hi) = mid;
    }
    CHECK(median(stat) == doctest::Approx(lo).epsilon(0.06));
  }
}

TEST_CASE("traceless projector: diagonal form, trace and norm") {
  const IndexSet I{0, 3, 4};
  const TracelessProjector P = traceless_projector(I, 8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    const bool in = i == 0 || i == 3 || i == 4;
    CHECK(P.A(i, i) == doctest::Approx(in ? 1.0 - 3.0 / 8.0 : -3.0 / 8.0));
  }
  CHECK(std::abs(P.A.trace()) <= 1e-15);

  const RealMatrix Q = haar_orthogonal(30, 3);
  for (std::size_t size : {1u, 10u, 15u, 27u}) {
    const TracelessProjector R = traceless_projector(leading_indices(size), 30, Q);
    CHECK(std::abs(R.A.trace()) <= 1e-12);
    CHECK(R.A == R.A.transpose());
    const double f = double(size) / 30.0;
    const RealVector ev = Eigen::SelfAdjointEigenSolver<RealMatrix>(R.A).eigenvalues();
    CHECK(ev.cwiseAbs().maxCoeff() == doctest::Approx(std::max(1.0 - f, f)).epsilon(1e-10));
  }
}

TEST_CASE("smooth bump: plateau, support, derivative bounds") {
  const SmoothBump f = smooth_bump(-1.0, 0.5, 0.2);
  CHECK(f(-0.25) == 1.0);
  CHECK(f(-1.0) == 1.0);
  CHECK(f(0.5) == 1.0);
  CHECK(f(0.5 + 0.4) == 0.0);
  CHECK(f(-1.2) == 0.0);
  CHECK(f(-1.1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(smooth_bump(1.0, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(smooth_bump(0.0, 1.0, 0.0), std::invalid_argument);

  const double eta = 0.2;
  const double h = 1e-4;
  double max1 = 0.0, max2 = 0.0;
  for (double x = -1.5; x <= 1.0; x += 1e-4) {
    const double fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    max1 = std::max(max1, std::abs(fd1));
    max2 = std::max(max2, std::abs(fd2));
    CHECK(f.d1(x) == doctest::Approx(fd1).epsilon(1e-5).scale(1.0 / eta));
    CHECK(f.d2(x) == doctest::Approx(fd2).epsilon(1e-2).scale(1.0 / (eta * eta)));
  }
  CHECK(max1 * eta <= 10.0);
  CHECK(max2 * eta * eta <= 10.0);
}

TEST_CASE("regularization parameters: paper and practical profiles") {
  const RegularizationParams pp = default_params(1, 1000, 0.2, Profile::paper);
  CHECK(pp.epsilon1 == doctest::Approx(2e-5));
  CHECK(pp.delta[0] == doctest::Approx(4e-5));
  CHECK(pp.delta[1] == doctest::Approx(2e-5 / 100.0));
  CHECK(pp.delta[2] == doctest::Approx(1e-5));
  CHECK(pp.delta[3] == doctest::Approx(12e-5));
  CHECK(pp.delta[4] == doctest::Approx(16e-5));
  CHECK(pp.eta_ell > 0.0);

  const RegularizationParams p = default_params(1, 200, 0.2, Profile::practical);
  const double N = 200.0;
  CHECK(p.eta_ell / p.Delta_ell == doctest::Approx(std::pow(N, -p.delta[0])));
  CHECK((p.I_hi - p.I_lo) / p.Delta_ell == doctest::Approx(2.0 * std::pow(N, p.delta[1])));
  CHECK(p.Delta_ell == doctest::Approx(gap_scale(1, 200)));
  CHECK(p.gamma_ell == doctest::Approx(gamma_quantile(1, 200)));
  CHECK(p.kappa == doctest::Approx(std::pow(1.0 / N, 2.0 / 3.0)));
  // eta_tilde << bump width << eta << shift << Delta << |I|.
  CHECK(p.eta_tilde < p.bump_width);
  CHECK(p.bump_width < p.eta_ell);
  CHECK(p.eta_ell < p.shift);
  CHECK(p.shift < p.Delta_ell);
  CHECK(p.Delta_ell < p.I_hi - p.I_lo);

  const RegularizationParams top = default_params(200, 200, 0.2, Profile::practical);
  CHECK(top.kappa == doctest::Approx(p.kappa));
  CHECK(top.Delta_ell == doctest::Approx(p.Delta_ell));

  CHECK(parse_profile("paper") == Profile::paper);
  CHECK(to_string(Profile::practical) == "practical");
  CHECK_THROWS_AS(parse_profile("fast"), std::invalid_argument);
  CHECK_THROWS_AS(default_params(0, 10, 0.2, Profile::paper), std::out_of_range);
  RegularizationParams bad = p;
  bad.delta[2] = 0.0;
  CHECK_THROWS_AS(derive_scales(bad), std::invalid_argument);

  const SmoothBump q = q_bump(default_params(3, 50, 0.2, Profile::practical));
  CHECK(q(3.0) == 1.0);
  CHECK(q(3.0 - 2.0 / 3.0) <= 1e-40);
  CHECK(q(2.3) == 0.0);
  CHECK(q(1.0) == 0.0);
}

TEST_CASE("x(E): one-term sum, Poisson mass, spectral and resolvent paths") {
  const RegularizationParams p = default_params(1, 100, 0.2, Profile::practical);
  RealSpectrum s;
  s.lambdas = quantile_spectrum(100);
  OverlapSet single;
  single.p_hat = RealVector::Zero(100);
  single.p_hat[0] = 1.7;
  CHECK(x_of_E(s.lambdas, single, p, s.lambdas[0]) ==
        doctest::Approx(1.7 / (pi * p.eta_ell)).epsilon(1e-12));

  // The Poisson kernel has unit mass.
  auto kernel = [&](double t) { return p.eta_ell / pi / (t * t + p.eta_ell * p.eta_ell); };
  boost::math::quadrature::exp_sinh<double> es;
  CHECK(std::abs(2.0 * es.integrate(kernel) - 1.0) <= 1e-8);

  // Total mass of x is sum p_hat for arbitrary weights.
  OverlapSet weights;
  weights.p_hat = RealVector::LinSpaced(100, -1.0, 2.0);
  auto x = [&](double E) { return x_of_E(s.lambdas, weights, p, E); };
  std::vector<double> br(s.lambdas.data(), s.lambdas.data() + s.lambdas.size());
  const double inner = integrate_pieces(x, br, -3.0, 3.0);
  auto tail = [&](double t) { return x(3.0 + t) + x(-3.0 - t); };
  const double mass = inner + es.integrate(tail);
  CHECK(mass == doctest::Approx(weights.p_hat.sum()).epsilon(1e-8));

  EnsembleSpec spec;
  spec.N = 100;
  spec.seed = 6;
  const RealMatrix H = sample_wigner(spec, 0).real();
  const RealSpectrum hs = eig_sym(H, EigenBackend::lapack);
  for (const auto& basis : {std::optional<RealMatrix>{}, std::optional<RealMatrix>{haar_orthogonal(100, 2)}}) {
    const OverlapSet o = overlaps(hs, leading_indices(40), basis);
    for (double E : {hs.lambdas[0], hs.lambdas[0] + 0.003, -1.9, 0.0, hs.lambdas[1]}) {
      const double a = x_of_E(hs.lambdas, o, p, E);
      const double b = x_of_E_resolvent(H, o, p, E);
      CHECK(std::abs(a - b) <= 1e-6 * std::abs(a));
    }
  }
}

TEST_CASE("y_E against the exact truncated trace, Tr f_E and refinement") {
  const std::size_t N = 50;
  const RealVector lambdas = goe_spectrum(N, 12, 0).lambdas;
  const RegularizationParams p = default_params(1, N, 0.2, Profile::practical);
  HSQuadrature fine;
  fine.check = true;
  fine.tol = 1e-9;
  const HSEvaluator y(lambdas, p, fine);
  const HSEvaluator coarse(lambdas, p);
  HSQuadrature doubled;
  doubled.ramp_panels = 4;
  doubled.sigma_ratio = 2.0;
  doubled.sigma_nodes = 12;
  const HSEvaluator twice(lambdas, p, doubled);
  for (int i = 0; i <= 40; ++i) {
    const double E = p.I_lo + (p.I_hi - p.I_lo) * i / 40.0;
    const double v = y(E);
    const double oracle = y_oracle(lambdas, p, E);
    const double tr = trace_f_E(lambdas, p, E);
    CHECK(std::abs(v - oracle) <= 1e-6);
    CHECK(std::abs(v - tr) <= 0.05);
    CHECK(std::abs(oracle - tr) <= hs_truncation_bound(lambdas, p, E));
    CHECK(std::abs(twice(E) - coarse(E)) < 1e-3);
  }
  CHECK(y_of_E(lambdas, p, p.gamma_ell) == doctest::Approx(coarse(p.gamma_ell)));
}

TEST_CASE("y_E on the quantile spectrum counts quantiles below E^+") {
  const std::size_t N = 200;
  const RealVector g = quantile_spectrum(N);
  for (std::size_t ell : {1u, 3u}) {
    const RegularizationParams p = default_params(ell, N, 0.2, Profile::practical);
    const HSEvaluator y(g, p);
    for (int i = 0; i <= 30; ++i) {
      const double E = p.I_lo + (p.I_hi - p.I_lo) * i / 30.0;
      const double count = double(std::count_if(g.data(), g.data() + g.size(),
                                                 [&](double l) { return l <= E + p.shift; }));
      CHECK(std::abs(y(E) - count) <= 1.0);
    }
  }
}

TEST_CASE("v_ell on the quantile spectrum with one unit overlap") {
  const std::size_t N = 200;
  const RealVector g = quantile_spectrum(N);
  const RegularizationParams p = default_params(1, N, 0.2, Profile::practical);
  OverlapSet o;
  o.p_hat = RealVector::Zero(Eigen::Index(N));
  o.p_hat[0] = 1.0;
  const VEllResult r = v_ell(g, o, p);
  CHECK(r.nodes >= 200);
  CHECK(r.refinement_change <= 1e-4);
  // q(y_E) = 1 while gamma_1 <= E^+ < gamma_2, up to the ramp width of f_E.
  const double a = std::max(p.I_lo, g[0] - p.shift - 0.5 * p.bump_width);
  const double b = std::min(p.I_hi, g[1] - p.shift - 0.5 * p.bump_width);
  const double window = (std::atan((b - g[0]) / p.eta_ell) - std::atan((a - g[0]) / p.eta_ell)) / pi;
  CHECK(r.v == doctest::Approx(window).epsilon(1e-3));
  const double full = 2.0 / pi * std::atan(p.Delta_ell * std::pow(double(N), p.delta[1]) / p.eta_ell);
  CHECK(r.v >= 0.9);
  CHECK(r.v <= full);

  VEllOptions plain;
  plain.screen = false;
  const VEllResult u = v_ell(g, o, p, plain);
  CHECK(u.v == doctest::Approx(r.v).epsilon(1e-9));
  CHECK(u.hs_evaluations > r.hs_evaluations);
}

TEST_CASE("v_ell tracks p_hat_ell for GOE N=200 over 200 trials") {
  const std::size_t N = 200;
  const RegularizationParams p = default_params(1, N, 0.2, Profile::practical);
  const IndexSet I = leading_indices(N / 2);
  std::vector<double> v, ph, absx;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const RealSpectrum s = goe_spectrum(N, 99, t);
    const OverlapSet o = overlaps(s, I);
    v.push_back(v_ell(s.lambdas, o, p).v);
    ph.push_back(o.p_hat[0]);
    if (t < 40) {
      auto ax = [&](double E) { return std::abs(x_of_E(s.lambdas, o, p, E)); };
      std::vector<double> br;
      for (Eigen::Index i = 0; i < s.lambdas.size(); ++i) {
        for (double d : {-p.eta_ell, 0.0, p.eta_ell}) br.push_back(s.lambdas[i] + d);
      }
      absx.push_back(integrate_pieces(ax, br, p.I_lo, p.I_hi));
    }
  }
  CHECK(pearson(v, ph) >= 0.9);
  double v2 = 0.0, p2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v2 += v[i] * v[i];
    p2 += ph[i] * ph[i];
  }
  CHECK(std::abs(v2 - p2) / double(v.size()) <= 0.15);
  CHECK(median(absx) <= std::pow(double(N), p.delta[1] + 0.2));
}
