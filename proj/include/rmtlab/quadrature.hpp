#pragma once

#include <cmath>
#include <string>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rmtlab {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Returns the n-point rule; rules are cached per n and safe to share.
const GaussRule& gauss_legendre(std::size_t n);

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed rule mapped onto [a, b].
template <class F>
auto integrate_fixed(const GaussRule& rule, F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  using R = decltype(f(mid));
  R sum{};
  for (std::size_t i = 0; i < rule.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return sum * half;
}

namespace detail {

template <class F, class R>
R adaptive_step(const GaussRule& rule, F& f, double a, double b, R whole,
                double rel_tol, double abs_tol, int depth, int max_depth) {
  const double m = 0.5 * (a + b);
  const R left = integrate_fixed(rule, f, a, m);
  const R right = integrate_fixed(rule, f, m, b);
  const R both = left + right;
  const double change = std::abs(both - whole);
  if (change <= abs_tol || change <= rel_tol * std::abs(both)) {
    return both;
  }
  if (depth >= max_depth) {
    throw QuadratureError("adaptive quadrature did not converge on [" +
                          std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return adaptive_step(rule, f, a, m, left, rel_tol, 0.5 * abs_tol, depth + 1,
                       max_depth) +
         adaptive_step(rule, f, m, b, right, rel_tol, 0.5 * abs_tol, depth + 1,
                       max_depth);
}

}  // namespace detail

/// Adaptive bisection with a 20-point Gauss-Legendre rule. A panel is
/// accepted once splitting it changes the estimate by less than rel_tol
/// (relative) or abs_tol (absolute).
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10,
                        double abs_tol = 1e-300, int max_depth = 48) {
  const GaussRule& rule = gauss_legendre(20);
  const auto whole = integrate_fixed(rule, f, a, b);
  return detail::adaptive_step(rule, f, a, b, whole, rel_tol, abs_tol, 0,
                               max_depth);
}

/// Adaptive integration over consecutive panels given by sorted breakpoints.
template <class F>
auto integrate_piecewise(F&& f, const std::vector<double>& breaks,
                         double rel_tol = 1e-10, double abs_tol = 1e-300) {
  using R = decltype(f(0.0));
  R sum{};
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) {
      sum += integrate_adaptive(f, breaks[i], breaks[i + 1], rel_tol, abs_tol);
    }
  }
  return sum;
}

}  // namespace rmtlab
