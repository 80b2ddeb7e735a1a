#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rmtlab/eigensolve.hpp"
#include "rmtlab/ensembles.hpp"
#include "rmtlab/observables.hpp"
#include "rmtlab/semicircle.hpp"

namespace rmtlab {

/// Version of the results.csv / summary.json / config.echo.json layout.
inline constexpr int kSchemaVersion = 1;

enum class BasisKind { standard, haar };
std::string to_string(BasisKind b);
BasisKind parse_basis_kind(const std::string& s);

/// |I| as an explicit count or as a fraction of N (count wins when set).
struct IndexSetSpec {
  std::optional<std::size_t> count;
  double fraction = 0.5;

  std::size_t resolve(std::size_t N) const;
};

struct Thresholds {
  double se_factor = 3.0;
  double variance_tol = 0.1;
  double fourth_tol = 0.4;
  double ks_max = 0.05;
  double que_exponent = 0.2;
  double rigidity_exponent = 0.15;
  double local_law_exponent = 0.15;
  double min_correlation = 0.9;
  double second_moment_tol = 0.15;
};

struct ExperimentConfig {
  EnsembleSpec ensemble;
  std::size_t trials = 100;
  EdgeSpec edge;
  IndexSetSpec index_set;
  BasisKind basis = BasisKind::standard;
  std::uint64_t basis_seed = 1;
  Profile profile = Profile::practical;
  double tau = 0.2;
  double epsilon0 = 0.1;
  double C0 = 1.0;
  /// Extra matrix sizes of an N-sweep. Thresholds are judged at ensemble.N,
  /// trends across sweep_sizes().
  std::vector<std::size_t> sizes;
  /// Local-law grid; empty means default_z_grid(N, tau) for each N.
  std::vector<SpectralPoint> z_grid;
  std::size_t edge_window_points = 5;
  std::vector<double> repulsion_eps{0.05, 0.1, 0.2};
  Thresholds thresholds;
  /// Worker threads; 0 means std::thread::hardware_concurrency().
  std::size_t workers = 0;

  /// sizes together with ensemble.N, ascending and without repeats.
  std::vector<std::size_t> sweep_sizes() const;
  std::size_t worker_count() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);

/// CSV cell. NaN marks a value a skipped trial did not produce.
using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct RunResult {
  std::string command;
  Table results;
  nlohmann::json summary;
  bool passed = true;
  std::size_t skipped = 0;
};

/// Runs fn(trial) for trial in [0, n) on `workers` threads and returns the
/// results in trial order. Each trial draws its own random stream, so the
/// output does not depend on the worker count. The first exception thrown by
/// fn is rethrown after all workers stop.
template <class F>
auto parallel_trials(std::size_t n, std::size_t workers, F fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::atomic_flag error_set = ATOMIC_FLAG_INIT;
  auto work = [&] {
    for (std::size_t t = next++; t < n && !failed; t = next++) {
      try {
        slots[t].emplace(fn(t));
      } catch (...) {
        if (!error_set.test_and_set()) error = std::current_exception();
        failed = true;
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// 12 points of the spectral domain: E in {-1.9, -1, 0, 1} times
/// eta in {2 N^{-1+tau/10}, 0.05, 0.5}.
std::vector<SpectralPoint> default_z_grid(std::size_t N, double tau);

/// `count` evenly spaced energies across I_ell (endpoints included).
std::vector<double> edge_window(const RegularizationParams& p, std::size_t count);

RegularizationParams regularization_for(const ExperimentConfig& c, std::size_t N);

/// Edge CLT: p_hat_ell per trial, raw moments 1..8 with batch-means errors,
/// KS distance to the standard normal, 60-bin histogram on [-5, 5].
RunResult run_clt(const ExperimentConfig& c);

/// max_k |p_k| N / sqrt|I| per trial and size; quantiles per size.
RunResult run_que_check(const ExperimentConfig& c);

/// max_i |lambda_i - gamma_i| / Delta_i per trial and the frequency of
/// lambda_{ell+1} - lambda_ell < N^{-2/3-eps} ell^{-1/3} (bottom edge; the
/// mirrored gap at the top edge).
RunResult run_rigidity_and_repulsion(const ExperimentConfig& c);

/// Rigidity ratio of a given ascending spectrum.
double rigidity_ratio(const RealVector& lambdas);

/// Normalized residuals of the isotropic law (/Psi), the two-resolvent laws
/// (GG and G Gbar, /(N Psi^2)) on the grid and edge window, and of the
/// traceless two- and three-resolvent laws (/(N^{1/2} Psi), /(N^{3/2}
/// Psi^{9/4})) on the edge window E in I_ell, eta = eta_ell.
RunResult run_local_law_sweep(const ExperimentConfig& c);

/// Joint (p_hat_ell, v_ell) per trial; correlation and moment differences.
RunResult run_regularization_fidelity(const ExperimentConfig& c);

/// Smooth scalar test function with derivatives: F(r, y) = F^{(r)}(y).
struct TestFunction {
  std::string name;
  std::function<double(int, double)> derivative;
  /// sup_y |F^{(r)}(y)| for the remainder shape.
  std::function<double(int)> sup;
};
TestFunction test_function(const std::string& name);

struct CumulantCheck {
  int T = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  /// E|Y|^{T+2} sup|F^{(T+1)}|.
  double bound_shape = 0.0;
};

/// E[Y F(Y)] against sum_{r<=T} kappa_{r+1}(Y)/r! E[F^{(r)}(Y)] for
/// Y = X / sqrt(N) with X drawn from `law`. Discrete laws are summed
/// exactly, continuous ones integrated by quadrature.
CumulantCheck cumulant_expansion_validate(const EntryDistribution& law, const TestFunction& F,
                                          int T, double N = 1.0);

/// Cumulant checks for T = 1..max_T over the configured entry law with sin
/// and cos test functions.
RunResult run_cumulant(const ExperimentConfig& c, int max_T = 8);

}  // namespace rmtlab
