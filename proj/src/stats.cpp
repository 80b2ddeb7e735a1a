#include "rmtlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rmtlab {
namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

void MomentAccumulator::add(double x) {
  MomentAccumulator one;
  one.n_ = 1;
  one.mean_ = x;
  merge(one);
}

void MomentAccumulator::merge(const MomentAccumulator& b) {
  if (b.n_ == 0) return;
  if (n_ == 0) {
    *this = b;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(b.n_);
  const double n = na + nb;
  const double delta = b.mean_ - mean_;
  std::array<double, kMaxOrder + 1> sa = s_;
  std::array<double, kMaxOrder + 1> sb = b.s_;
  sa[0] = na;
  sb[0] = nb;
  std::array<double, kMaxOrder + 1> out{};
  for (int p = 2; p <= kMaxOrder; ++p) {
    double s = sa[p] + sb[p];
    for (int k = 1; k <= p - 2; ++k) {
      s += binomial(p, k) * std::pow(delta, k) *
           (std::pow(-nb / n, k) * sa[p - k] + std::pow(na / n, k) * sb[p - k]);
    }
    s += std::pow(na * nb * delta / n, p) *
         (1.0 / std::pow(nb, p - 1) - std::pow(-1.0 / na, p - 1));
    out[p] = s;
  }
  s_ = out;
  mean_ += delta * nb / n;
  n_ += b.n_;
}

double MomentAccumulator::central_moment(int p) const {
  if (p < 2 || p > kMaxOrder) throw std::out_of_range("central moment order must be in [2, 8]");
  return n_ == 0 ? 0.0 : s_[p] / static_cast<double>(n_);
}

double MomentAccumulator::raw_moment(int k) const {
  if (k < 1 || k > kMaxOrder) throw std::out_of_range("raw moment order must be in [1, 8]");
  if (n_ == 0) return 0.0;
  double r = std::pow(mean_, k);
  for (int j = 2; j <= k; ++j) r += binomial(k, j) * std::pow(mean_, k - j) * central_moment(j);
  return r;
}

double MomentAccumulator::variance() const {
  return n_ < 2 ? 0.0 : s_[2] / static_cast<double>(n_ - 1);
}

MomentSummary moment_summary(const std::vector<double>& values) {
  MomentSummary out;
  out.count = values.size();
  if (values.empty()) return out;
  const std::size_t n = values.size();
  const auto B = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
  out.batches = B;
  MomentAccumulator total;
  std::vector<MomentAccumulator> batch(B);
  for (std::size_t i = 0; i < n; ++i) {
    batch[i * B / n].add(values[i]);
  }
  for (const auto& b : batch) total.merge(b);
  for (int k = 1; k <= 8; ++k) {
    out.raw[k - 1] = total.raw_moment(k);
    if (B < 2) continue;
    MomentAccumulator spread;
    for (const auto& b : batch) spread.add(b.raw_moment(k));
    out.se[k - 1] = std::sqrt(spread.variance() / static_cast<double>(B));
  }
  for (int p = 2; p <= 8; ++p) out.central[p - 2] = total.central_moment(p);
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  const double pi = std::numbers::pi;
  if (t < 1.0) {
    // P(K <= t) = sqrt(2 pi)/t sum_j exp(-(2j-1)^2 pi^2 / (8 t^2)).
    double cdf = 0.0;
    for (int j = 1; j <= 100; ++j) {
      const double m = 2.0 * j - 1.0;
      cdf += std::exp(-m * m * pi * pi / (8.0 * t * t));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / t * cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    q += (j % 2 ? 2.0 : -2.0) * std::exp(-2.0 * j * j * t * t);
  }
  return std::clamp(q, 0.0, 1.0);
}

KSResult ks_statistic(std::vector<double> samples) {
  if (samples.size() < 100) throw std::invalid_argument("KS test needs at least 100 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double D = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = normal_cdf(samples[i]);
    D = std::max({D, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  KSResult out;
  out.n = samples.size();
  out.D = D;
  out.p_value = kolmogorov_survival(std::sqrt(n) * D);
  return out;
}

void Histogram::add(double x) {
  if (!std::isfinite(x)) {
    ++nonfinite;
  } else if (x < lo) {
    ++underflow;
  } else if (x >= hi) {
    ++overflow;
  } else {
    const auto i = static_cast<std::size_t>((x - lo) / bin_width());
    ++counts[std::min(i, counts.size() - 1)];
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (pos - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("correlation needs paired samples");
  MomentAccumulator ma, mb;
  for (double x : a) ma.add(x);
  for (double x : b) mb.add(x);
  double sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sab += (a[i] - ma.mean()) * (b[i] - mb.mean());
  return sab / std::sqrt(ma.central_moment(2) * mb.central_moment(2)) / static_cast<double>(a.size());
}

}  // namespace rmtlab
