#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace rmtlab {

/// Streaming count, mean and central power sums S_p = sum (x - mean)^p for
/// p = 2..8. Updates and merges use the pairwise formulas of Pebay, so
/// accumulators built on disjoint pieces can be combined in any order.
class MomentAccumulator {
 public:
  static constexpr int kMaxOrder = 8;

  void add(double x);
  void merge(const MomentAccumulator& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// S_p / n, 2 <= p <= 8.
  double central_moment(int p) const;
  /// (1/n) sum x^k, 1 <= k <= 8.
  double raw_moment(int k) const;
  /// Unbiased variance S_2 / (n - 1).
  double variance() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  /// S_[p] for p = 0..8; S_[0] and S_[1] unused.
  std::array<double, kMaxOrder + 1> s_{};
};

/// Raw moments 1..8 with batch-means standard errors: the ordered sample is
/// cut into floor(sqrt(n)) contiguous batches and the spread of per-batch
/// estimates gives the error.
struct MomentSummary {
  std::uint64_t count = 0;
  std::size_t batches = 0;
  /// raw[k-1] = (1/n) sum x^k.
  std::array<double, 8> raw{};
  std::array<double, 8> se{};
  /// central[p-2] for p = 2..8.
  std::array<double, 7> central{};
};

MomentSummary moment_summary(const std::vector<double>& values);

double normal_cdf(double x);

struct KSResult {
  std::size_t n = 0;
  /// sup |F_n - Phi|.
  double D = 0.0;
  /// Asymptotic P(sqrt(n) D_n > observed) from the Kolmogorov series.
  double p_value = 1.0;
};

/// One-sample KS test against the standard normal. Throws
/// std::invalid_argument for fewer than 100 samples.
KSResult ks_statistic(std::vector<double> samples);

/// Kolmogorov survival function Q(t) = P(K > t), each representation
/// truncated at 100 terms.
double kolmogorov_survival(double t);

/// Fixed-bin histogram; values outside [lo, hi) go to underflow/overflow.
struct Histogram {
  double lo = -5.0;
  double hi = 5.0;
  std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(60, 0);
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;
  std::uint64_t nonfinite = 0;

  void add(double x);
  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_lo(std::size_t i) const { return lo + bin_width() * static_cast<double>(i); }
};

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rmtlab
