#include "rmtlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "rmtlab/quadrature.hpp"
#include "rmtlab/resolvent.hpp"
#include "rmtlab/rng.hpp"
#include "rmtlab/stats.hpp"

namespace rmtlab {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kProbePurpose = 0x50524f42;  // "PROB"

Cell integer(std::size_t v) { return static_cast<std::int64_t>(v); }

json verdict(double value, double bound, bool pass) {
  return {{"value", value}, {"bound", bound}, {"pass", pass}};
}

json base_summary(const std::string& command, const ExperimentConfig& c, std::size_t skipped) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"trials", c.trials},
          {"skipped", skipped},
          {"reported", c.trials - std::min(skipped, c.trials)}};
}

std::optional<RealMatrix> basis_for(const ExperimentConfig& c, std::size_t N) {
  if (c.basis == BasisKind::standard) return std::nullopt;
  return haar_orthogonal(N, c.basis_seed);
}

EnsembleSpec ensemble_at(const ExperimentConfig& c, std::size_t N) {
  EnsembleSpec e = c.ensemble;
  e.N = N;
  return e;
}

double median_of(const std::vector<double>& v) { return quantile(v, 0.5); }

// Full decomposition of trial t; the real and complex cases share the
// downstream code through eigen-coordinates.
struct TrialSpectrum {
  RealVector lambdas;
  std::optional<RealSpectrum> real;
  std::optional<ComplexSpectrum> complex;

  OverlapSet overlaps(const IndexSet& I, const std::optional<RealMatrix>& Q, bool normalize) const {
    return real ? rmtlab::overlaps(*real, I, Q, 1, normalize)
                : rmtlab::overlaps(*complex, I, Q, 2, normalize);
  }
  ComplexVector coords(const ComplexVector& x) const {
    return real ? eigen_coords(*real, x) : eigen_coords(*complex, x);
  }
  ComplexMatrix conjugate(const ComplexMatrix& A) const {
    return real ? eigen_conjugate(*real, A) : eigen_conjugate(*complex, A);
  }
};

TrialSpectrum decompose(const EnsembleSpec& e, std::size_t t) {
  const WignerSample s = sample_wigner(e, t);
  TrialSpectrum out;
  if (e.beta == 1) {
    out.real = eig_sym(s.real(), EigenBackend::lapack);
    out.lambdas = out.real->lambdas;
  } else {
    out.complex = eig_sym(s.complex(), EigenBackend::lapack);
    out.lambdas = out.complex->lambdas;
  }
  return out;
}

ComplexVector basis_vector(std::size_t N, std::size_t i) {
  ComplexVector e = ComplexVector::Zero(static_cast<Eigen::Index>(N));
  e[static_cast<Eigen::Index>(i)] = 1.0;
  return e;
}

ComplexVector random_unit(std::size_t N, std::uint64_t seed) {
  Engine engine = trial_stream(seed, 0, kProbePurpose);
  std::normal_distribution<double> normal;
  ComplexVector v(static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(engine);
  return v / v.norm();
}

}  // namespace

std::string to_string(BasisKind b) { return b == BasisKind::standard ? "standard" : "haar"; }

BasisKind parse_basis_kind(const std::string& s) {
  if (s == "standard") return BasisKind::standard;
  if (s == "haar") return BasisKind::haar;
  throw std::invalid_argument("unknown basis '" + s + "' (expected standard or haar)");
}

std::size_t IndexSetSpec::resolve(std::size_t N) const {
  if (count) return std::min(*count, N);
  return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(N)));
}

std::vector<std::size_t> ExperimentConfig::sweep_sizes() const {
  std::set<std::size_t> s(sizes.begin(), sizes.end());
  s.insert(ensemble.N);
  return {s.begin(), s.end()};
}

std::size_t ExperimentConfig::worker_count() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentConfig::validate() const {
  ensemble.validate();
  if (trials < 1) throw std::invalid_argument("experiment.trials must be at least 1");
  for (std::size_t N : sizes) {
    if (N < 2) throw std::invalid_argument("experiment.sizes entries must be at least 2");
  }
  if (edge.k < 1 || edge.k > ensemble.N) {
    throw std::invalid_argument("experiment.edge index must be in [1, N]");
  }
  if (!index_set.count && !(index_set.fraction >= 0.0 && index_set.fraction <= 1.0)) {
    throw std::invalid_argument("experiment.index_set.fraction must be in [0, 1]");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("regularization.tau must be in (0, 1)");
  if (!(epsilon0 > 0.0)) throw std::invalid_argument("regularization.epsilon0 must be positive");
  for (double e : repulsion_eps) {
    if (!(e > 0.0)) throw std::invalid_argument("experiment.repulsion_eps entries must be positive");
  }
  if (edge_window_points < 1) {
    throw std::invalid_argument("experiment.edge_window_points must be at least 1");
  }
}

json to_json(const ExperimentConfig& c) {
  json grid = json::array();
  for (const auto& z : c.z_grid) grid.push_back({z.E(), z.eta()});
  json ens = {{"N", c.ensemble.N},
              {"beta", c.ensemble.beta},
              {"law", std::string(to_string(c.ensemble.entries.law()))},
              {"seed", c.ensemble.seed},
              {"diag_factor", c.ensemble.diag_factor()}};
  if (c.ensemble.entries.law() == EntryLaw::custom) {
    ens["atoms"] = c.ensemble.entries.atoms();
    ens["probs"] = c.ensemble.entries.probs();
  }
  json index = {{"fraction", c.index_set.fraction}};
  if (c.index_set.count) index["count"] = *c.index_set.count;
  const Thresholds& t = c.thresholds;
  return {{"schema_version", kSchemaVersion},
          {"ensemble", ens},
          {"experiment",
           {{"trials", c.trials},
            {"edge", to_string(c.edge)},
            {"index_set", index},
            {"basis", to_string(c.basis)},
            {"basis_seed", c.basis_seed},
            {"sizes", c.sizes},
            {"z_grid", grid},
            {"edge_window_points", c.edge_window_points},
            {"repulsion_eps", c.repulsion_eps}}},
          {"regularization",
           {{"profile", to_string(c.profile)},
            {"tau", c.tau},
            {"epsilon0", c.epsilon0},
            {"C0", c.C0}}},
          {"thresholds",
           {{"se_factor", t.se_factor},
            {"variance_tol", t.variance_tol},
            {"fourth_tol", t.fourth_tol},
            {"ks_max", t.ks_max},
            {"que_exponent", t.que_exponent},
            {"rigidity_exponent", t.rigidity_exponent},
            {"local_law_exponent", t.local_law_exponent},
            {"min_correlation", t.min_correlation},
            {"second_moment_tol", t.second_moment_tol}}}};
}

std::vector<SpectralPoint> default_z_grid(std::size_t N, double tau) {
  const double floor = 2.0 * std::pow(static_cast<double>(N), -1.0 + tau / 10.0);
  std::vector<SpectralPoint> grid;
  for (double E : {-1.9, -1.0, 0.0, 1.0}) {
    for (double eta : {floor, 0.05, 0.5}) grid.emplace_back(E, eta);
  }
  return grid;
}

std::vector<double> edge_window(const RegularizationParams& p, std::size_t count) {
  if (count == 1) return {p.gamma_ell};
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(p.I_lo + (p.I_hi - p.I_lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

RegularizationParams regularization_for(const ExperimentConfig& c, std::size_t N) {
  const std::size_t ell = edge_index_resolve(c.edge, N, c.tau).ell;
  return default_params(ell, N, c.tau, c.profile, c.epsilon0, c.C0);
}

RunResult run_clt(const ExperimentConfig& c) {
  c.validate();
  const std::size_t N = c.ensemble.N;
  const std::size_t ell = edge_index_resolve(c.edge, N, c.tau).ell;
  const std::size_t size = c.index_set.resolve(N);
  if (size == 0 || size >= N) throw std::invalid_argument("clt needs 0 < |I| < N");
  const IndexSet I = leading_indices(size);
  const auto Q = basis_for(c, N);
  struct Row {
    bool ok = false;
    double lambda = kNaN;
    double p_hat = kNaN;
  };
  const auto rows = parallel_trials(c.trials, c.worker_count(), [&](std::size_t t) {
    Row r;
    try {
      const WignerSample s = sample_wigner(c.ensemble, t);
      if (c.ensemble.beta == 1) {
        const auto pair = eig_select(s.real(), ell, EigenBackend::lapack);
        r.lambda = pair.lambda;
        r.p_hat = self_overlap(pair.vector, I, Q, 1).p_hat;
      } else {
        const auto pair = eig_select(s.complex(), ell, EigenBackend::lapack);
        r.lambda = pair.lambda;
        r.p_hat = self_overlap(pair.vector, I, Q, 2).p_hat;
      }
      r.ok = true;
    } catch (const ConvergenceError&) {
    }
    return r;
  });

  RunResult out;
  out.command = "clt";
  out.results.columns = {"trial", "status", "lambda_ell", "p_hat_ell"};
  std::vector<double> values;
  Histogram hist;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Row& r = rows[t];
    out.results.rows.push_back({integer(t), std::string(r.ok ? "ok" : "skipped"), r.lambda, r.p_hat});
    if (!r.ok) {
      ++out.skipped;
      continue;
    }
    values.push_back(r.p_hat);
    hist.add(r.p_hat);
  }
  json s = base_summary("clt", c, out.skipped);
  s["N"] = N;
  s["ell"] = ell;
  s["index_size"] = size;
  s["beta"] = c.ensemble.beta;
  s["law"] = std::string(to_string(c.ensemble.entries.law()));
  if (values.size() < 100) {
    s["error"] = "fewer than 100 completed trials";
    s["passed"] = false;
    out.passed = false;
    out.summary = s;
    return out;
  }
  const MomentSummary m = moment_summary(values);
  const KSResult ks = ks_statistic(values);
  s["moments"] = {{"order", {1, 2, 3, 4, 5, 6, 7, 8}},
                  {"raw", m.raw},
                  {"se", m.se},
                  {"central", m.central},
                  {"batches", m.batches}};
  s["ks"] = {{"D", ks.D}, {"p_value", ks.p_value}, {"n", ks.n}};
  s["histogram"] = {{"lo", hist.lo},
                    {"hi", hist.hi},
                    {"bins", hist.counts.size()},
                    {"counts", hist.counts},
                    {"underflow", hist.underflow},
                    {"overflow", hist.overflow}};
  const Thresholds& th = c.thresholds;
  const double k = th.se_factor;
  const double b2 = std::max(th.variance_tol, k * m.se[1]);
  const double b4 = std::max(th.fourth_tol, k * m.se[3]);
  json v = {{"mean", verdict(std::abs(m.raw[0]), k * m.se[0], std::abs(m.raw[0]) <= k * m.se[0])},
            {"second", verdict(std::abs(m.raw[1] - 1.0), b2, std::abs(m.raw[1] - 1.0) <= b2)},
            {"third", verdict(std::abs(m.raw[2]), k * m.se[2], std::abs(m.raw[2]) <= k * m.se[2])},
            {"fourth", verdict(std::abs(m.raw[3] - 3.0), b4, std::abs(m.raw[3] - 3.0) <= b4)},
            {"ks", verdict(ks.D, th.ks_max, ks.D <= th.ks_max)}};
  for (const auto& [key, val] : v.items()) out.passed = out.passed && val["pass"].get<bool>();
  s["verdicts"] = v;
  s["passed"] = out.passed;
  out.summary = s;
  return out;
}

RunResult run_que_check(const ExperimentConfig& c) {
  c.validate();
  RunResult out;
  out.command = "que";
  out.results.columns = {"N", "trial", "status", "index_size", "statistic"};
  json per_size = json::array();
  std::vector<double> medians;
  double judged_p95 = kNaN;
  for (std::size_t N : c.sweep_sizes()) {
    const std::size_t size = c.index_set.resolve(N);
    if (size == 0) throw std::invalid_argument("que needs |I| >= 1");
    const IndexSet I = leading_indices(size);
    const auto Q = basis_for(c, N);
    const EnsembleSpec e = ensemble_at(c, N);
    const auto stats = parallel_trials(c.trials, c.worker_count(), [&](std::size_t t) {
      try {
        const OverlapSet o = decompose(e, t).overlaps(I, Q, false);
        return o.p.cwiseAbs().maxCoeff() * static_cast<double>(N) / std::sqrt(static_cast<double>(size));
      } catch (const ConvergenceError&) {
        return kNaN;
      }
    });
    std::vector<double> ok;
    for (std::size_t t = 0; t < stats.size(); ++t) {
      const bool good = !std::isnan(stats[t]);
      out.results.rows.push_back({integer(N), integer(t), std::string(good ? "ok" : "skipped"),
                                  integer(size), stats[t]});
      if (good) ok.push_back(stats[t]);
      else ++out.skipped;
    }
    if (ok.empty()) throw std::runtime_error("que: every trial was skipped");
    const double bound = std::pow(static_cast<double>(N), c.thresholds.que_exponent);
    const auto within = std::count_if(ok.begin(), ok.end(), [&](double x) { return x <= bound; });
    per_size.push_back({{"N", N},
                        {"index_size", size},
                        {"median", median_of(ok)},
                        {"p95", quantile(ok, 0.95)},
                        {"max", *std::max_element(ok.begin(), ok.end())},
                        {"bound", bound},
                        {"fraction_within", static_cast<double>(within) / static_cast<double>(ok.size())}});
    medians.push_back(median_of(ok));
    if (N == c.ensemble.N) judged_p95 = quantile(ok, 0.95);
  }
  json s = base_summary("que", c, out.skipped);
  s["sizes"] = per_size;
  const double bound = std::pow(static_cast<double>(c.ensemble.N), c.thresholds.que_exponent);
  bool decreasing = true;
  for (std::size_t i = 1; i < medians.size(); ++i) decreasing = decreasing && medians[i] < medians[i - 1];
  s["verdicts"] = {{"p95_bound", verdict(judged_p95, bound, judged_p95 <= bound)},
                   {"median_decreasing", {{"medians", medians}, {"pass", decreasing}}}};
  out.passed = judged_p95 <= bound && decreasing;
  s["passed"] = out.passed;
  out.summary = s;
  return out;
}

double rigidity_ratio(const RealVector& lambdas) {
  const auto N = static_cast<std::size_t>(lambdas.size());
  const QuantileTable q = quantile_table(N);
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    worst = std::max(worst, std::abs(lambdas[static_cast<Eigen::Index>(i)] - q.gamma[i]) / q.delta[i]);
  }
  return worst;
}

RunResult run_rigidity_and_repulsion(const ExperimentConfig& c) {
  c.validate();
  const std::size_t N = c.ensemble.N;
  const std::size_t ell = edge_index_resolve(c.edge, N, c.tau).ell;
  const bool top = c.edge.side == EdgeSpec::Side::top;
  if ((top && ell < 2) || (!top && ell >= N)) throw std::invalid_argument("rigidity: edge gap needs a neighbour");
  const double mirrored = static_cast<double>(std::min(ell, N + 1 - ell));
  // Gap in units of N^{-2/3} ell'^{-1/3}.
  const double unit = std::pow(static_cast<double>(N), -2.0 / 3.0) * std::pow(mirrored, -1.0 / 3.0);
  struct Row {
    bool ok = false;
    double rigidity = kNaN;
    double gap = kNaN;
  };
  const auto rows = parallel_trials(c.trials, c.worker_count(), [&](std::size_t t) {
    Row r;
    try {
      const WignerSample s = sample_wigner(c.ensemble, t);
      const RealVector l = c.ensemble.beta == 1 ? eigenvalues(s.real(), EigenBackend::lapack)
                                                : eigenvalues(s.complex(), EigenBackend::lapack);
      r.rigidity = rigidity_ratio(l);
      const auto i = static_cast<Eigen::Index>(ell - 1);
      r.gap = top ? l[i] - l[i - 1] : l[i + 1] - l[i];
      r.ok = true;
    } catch (const ConvergenceError&) {
    }
    return r;
  });
  RunResult out;
  out.command = "rigidity";
  out.results.columns = {"trial", "status", "rigidity_ratio", "gap", "gap_scaled"};
  std::vector<double> rig, gaps;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Row& r = rows[t];
    out.results.rows.push_back({integer(t), std::string(r.ok ? "ok" : "skipped"), r.rigidity, r.gap,
                                r.gap / unit});
    if (!r.ok) {
      ++out.skipped;
      continue;
    }
    rig.push_back(r.rigidity);
    gaps.push_back(r.gap / unit);
  }
  if (rig.empty()) throw std::runtime_error("rigidity: every trial was skipped");
  std::vector<double> eps = c.repulsion_eps;
  std::sort(eps.begin(), eps.end());
  json rep = json::array();
  std::vector<double> freq;
  for (double e : eps) {
    const double cut = std::pow(static_cast<double>(N), -e);
    const auto hits = std::count_if(gaps.begin(), gaps.end(), [&](double g) { return g < cut; });
    freq.push_back(static_cast<double>(hits) / static_cast<double>(gaps.size()));
    rep.push_back({{"eps", e}, {"threshold_scaled", cut}, {"frequency", freq.back()}});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < freq.size(); ++i) monotone = monotone && freq[i] <= freq[i - 1];
  const double bound = std::pow(static_cast<double>(N), c.thresholds.rigidity_exponent);
  const double p95 = quantile(rig, 0.95);
  json s = base_summary("rigidity", c, out.skipped);
  s["N"] = N;
  s["ell"] = ell;
  s["rigidity"] = {{"median", median_of(rig)}, {"p95", p95}, {"max", *std::max_element(rig.begin(), rig.end())}};
  s["repulsion"] = rep;
  s["verdicts"] = {{"rigidity_p95", verdict(p95, bound, p95 <= bound)},
                   {"repulsion_monotone", {{"frequencies", freq}, {"pass", monotone}}}};
  out.passed = p95 <= bound && monotone;
  s["passed"] = out.passed;
  out.summary = s;
  return out;
}

RunResult run_local_law_sweep(const ExperimentConfig& c) {
  c.validate();
  enum Law { iso = 0, two = 1, traceless2 = 2, traceless3 = 3 };
  const std::array<std::string, 4> names{"isotropic", "two_resolvent", "traceless_two", "traceless_three"};
  struct Entry {
    std::size_t point;
    int law;
    std::size_t probe;
    double value;
  };
  RunResult out;
  out.command = "locallaw";
  out.results.columns = {"N", "trial", "point", "E", "eta", "window", "law", "probe", "residual"};
  json table = json::array();
  json per_size = json::array();
  std::vector<std::array<double, 4>> medians;
  double worst_p95 = 0.0;
  json worst_at;
  for (std::size_t N : c.sweep_sizes()) {
    const EnsembleSpec e = ensemble_at(c, N);
    const RegularizationParams p = regularization_for(c, N);
    std::vector<SpectralPoint> points = c.z_grid.empty() ? default_z_grid(N, c.tau) : c.z_grid;
    for (const SpectralPoint& z : points) {
      if (!z.in_domain(c.tau, N)) {
        throw std::invalid_argument("local-law grid point E=" + std::to_string(z.E()) + ", eta=" +
                                    std::to_string(z.eta()) + " lies outside the spectral domain at N=" +
                                    std::to_string(N));
      }
    }
    const std::size_t grid_count = points.size();
    for (double E : edge_window(p, c.edge_window_points)) points.emplace_back(E, p.eta_ell);
    const ComplexVector v = random_unit(N, c.basis_seed);
    const std::vector<std::pair<ComplexVector, ComplexVector>> probes{
        {basis_vector(N, 0), basis_vector(N, 0)}, {basis_vector(N, 0), basis_vector(N, 1)}, {v, v}};
    const std::vector<std::size_t> idx{0, 1, N / 2, N - 1};
    const ComplexMatrix A = traceless_projector(leading_indices(N / 2), N).A.cast<Complex>();
    const double n = static_cast<double>(N);

    const auto trials = parallel_trials(c.trials, c.worker_count(), [&](std::size_t t) {
      std::vector<Entry> res;
      const TrialSpectrum s = decompose(e, t);
      std::vector<std::pair<ComplexVector, ComplexVector>> pc;
      for (const auto& [x, y] : probes) pc.emplace_back(s.coords(x), s.coords(y));
      std::vector<ComplexVector> ec;
      for (std::size_t i : idx) ec.push_back(s.coords(basis_vector(N, i)));
      const ComplexMatrix At = s.conjugate(A);
      for (std::size_t k = 0; k < points.size(); ++k) {
        const Complex z = points[k].z();
        const double ps = psi(points[k], N);
        for (std::size_t j = 0; j < probes.size(); ++j) {
          const auto& [a, b] = pc[j];
          const Complex overlap = probes[j].first.dot(probes[j].second);
          res.push_back({k, iso, j, std::abs(chain_G(s.lambdas, a, b, z) - overlap * m_sc(z)) / ps});
          const double gg = std::max(std::abs(chain_GG(s.lambdas, a, b, z)),
                                     std::abs(chain_GGbar(s.lambdas, a, b, z)));
          res.push_back({k, two, j, gg / (n * ps * ps)});
        }
        if (k < grid_count) continue;
        std::size_t probe = 0;
        for (const auto& a : ec) {
          for (const auto& b : ec) {
            res.push_back({k, traceless2, probe,
                           std::abs(chain_GAGbar(s.lambdas, a, At, b, z)) / (std::sqrt(n) * ps)});
            res.push_back({k, traceless3, probe,
                           std::abs(chain_GAGbarG(s.lambdas, a, At, b, z)) /
                               (std::pow(n, 1.5) * std::pow(ps, 2.25))});
            ++probe;
          }
        }
      }
      return res;
    });

    // (point, law) -> values across trials and probes.
    std::vector<std::array<std::vector<double>, 4>> by_point(points.size());
    std::array<std::vector<double>, 4> by_law;
    for (std::size_t t = 0; t < trials.size(); ++t) {
      for (const Entry& en : trials[t]) {
        const SpectralPoint& z = points[en.point];
        out.results.rows.push_back({integer(N), integer(t), integer(en.point), z.E(), z.eta(),
                                    static_cast<std::int64_t>(en.point >= grid_count), names[en.law],
                                    integer(en.probe), en.value});
        by_point[en.point][en.law].push_back(en.value);
        by_law[en.law].push_back(en.value);
      }
    }
    for (std::size_t k = 0; k < points.size(); ++k) {
      for (int law = 0; law < 4; ++law) {
        const auto& vals = by_point[k][law];
        if (vals.empty()) continue;
        const double p95 = quantile(vals, 0.95);
        table.push_back({{"N", N},
                         {"E", points[k].E()},
                         {"eta", points[k].eta()},
                         {"window", k >= grid_count},
                         {"law", names[law]},
                         {"p95", p95},
                         {"median", median_of(vals)}});
        if (N == c.ensemble.N && p95 > worst_p95) {
          worst_p95 = p95;
          worst_at = table.back();
        }
      }
    }
    std::array<double, 4> med{};
    json laws;
    for (int law = 0; law < 4; ++law) {
      med[law] = median_of(by_law[law]);
      laws[names[law]] = {{"median", med[law]}, {"p95", quantile(by_law[law], 0.95)}};
    }
    medians.push_back(med);
    per_size.push_back({{"N", N}, {"eta_ell", p.eta_ell}, {"laws", laws}});
  }
  json s = base_summary("locallaw", c, 0);
  s["sizes"] = per_size;
  s["residual_table"] = table;
  const double bound = std::pow(static_cast<double>(c.ensemble.N), c.thresholds.local_law_exponent);
  json trend;
  bool decreasing = true;
  for (int law = 0; law < 4; ++law) {
    std::vector<double> m;
    for (const auto& row : medians) m.push_back(row[law]);
    const bool d = m.size() < 2 || m.back() < m.front();
    trend[names[law]] = {{"medians", m}, {"pass", d}};
    decreasing = decreasing && d;
  }
  s["verdicts"] = {{"p95_bound", {{"value", worst_p95}, {"bound", bound}, {"pass", worst_p95 <= bound}, {"worst", worst_at}}},
                   {"median_decreasing", {{"laws", trend}, {"pass", decreasing}}}};
  out.passed = worst_p95 <= bound && decreasing;
  s["passed"] = out.passed;
  out.summary = s;
  return out;
}

RunResult run_regularization_fidelity(const ExperimentConfig& c) {
  c.validate();
  const std::size_t N = c.ensemble.N;
  const RegularizationParams p = regularization_for(c, N);
  const std::size_t size = c.index_set.resolve(N);
  if (size == 0 || size >= N) throw std::invalid_argument("regcheck needs 0 < |I| < N");
  const IndexSet I = leading_indices(size);
  const auto Q = basis_for(c, N);
  struct Row {
    bool ok = false;
    double lambda = kNaN, p_hat = kNaN, v = kNaN, change = kNaN;
    std::int64_t nodes = 0, hs = 0;
  };
  const auto rows = parallel_trials(c.trials, c.worker_count(), [&](std::size_t t) {
    Row r;
    try {
      const TrialSpectrum s = decompose(c.ensemble, t);
      const OverlapSet o = s.overlaps(I, Q, true);
      const auto i = static_cast<Eigen::Index>(p.ell - 1);
      r.lambda = s.lambdas[i];
      r.p_hat = o.p_hat[i];
      const VEllResult v = v_ell(s.lambdas, o, p);
      r.v = v.v;
      r.change = v.refinement_change;
      r.nodes = static_cast<std::int64_t>(v.nodes);
      r.hs = static_cast<std::int64_t>(v.hs_evaluations);
      r.ok = true;
    } catch (const ConvergenceError&) {
    } catch (const QuadratureError&) {
    }
    return r;
  });
  RunResult out;
  out.command = "regcheck";
  out.results.columns = {"trial", "status", "lambda_ell", "p_hat_ell", "v_ell", "nodes", "hs_evaluations",
                         "refinement_change"};
  std::vector<double> ph, vv;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Row& r = rows[t];
    out.results.rows.push_back({integer(t), std::string(r.ok ? "ok" : "skipped"), r.lambda, r.p_hat, r.v,
                                r.nodes, r.hs, r.change});
    if (!r.ok) {
      ++out.skipped;
      continue;
    }
    ph.push_back(r.p_hat);
    vv.push_back(r.v);
  }
  if (ph.size() < 2) throw std::runtime_error("regcheck: fewer than two completed trials");
  json s = base_summary("regcheck", c, out.skipped);
  s["N"] = N;
  s["ell"] = p.ell;
  s["index_size"] = size;
  s["params"] = {{"profile", to_string(p.profile)},
                 {"delta", p.delta},
                 {"epsilon1", p.epsilon1},
                 {"gamma_ell", p.gamma_ell},
                 {"Delta_ell", p.Delta_ell},
                 {"eta_ell", p.eta_ell},
                 {"I_ell", {p.I_lo, p.I_hi}},
                 {"shift", p.shift},
                 {"bump_width", p.bump_width},
                 {"eta_tilde", p.eta_tilde},
                 {"kappa", p.kappa}};
  const double corr = pearson_correlation(ph, vv);
  json moments = json::array();
  double diff2 = kNaN;
  for (int k = 1; k <= 4; ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < ph.size(); ++i) {
      a += std::pow(ph[i], k);
      b += std::pow(vv[i], k);
    }
    a /= static_cast<double>(ph.size());
    b /= static_cast<double>(ph.size());
    moments.push_back({{"order", k}, {"p_hat", a}, {"v", b}, {"difference", std::abs(a - b)}});
    if (k == 2) diff2 = std::abs(a - b);
  }
  s["correlation"] = corr;
  s["moments"] = moments;
  const Thresholds& th = c.thresholds;
  s["verdicts"] = {{"correlation", verdict(corr, th.min_correlation, corr >= th.min_correlation)},
                   {"second_moment", verdict(diff2, th.second_moment_tol, diff2 <= th.second_moment_tol)}};
  out.passed = corr >= th.min_correlation && diff2 <= th.second_moment_tol;
  s["passed"] = out.passed;
  out.summary = s;
  return out;
}

TestFunction test_function(const std::string& name) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (name == "sin") {
    return {name, [](int r, double y) { return std::sin(y + r * half_pi); }, [](int) { return 1.0; }};
  }
  if (name == "cos") {
    return {name, [](int r, double y) { return std::cos(y + r * half_pi); }, [](int) { return 1.0; }};
  }
  throw std::invalid_argument("unknown test function '" + name + "' (expected sin or cos)");
}

CumulantCheck cumulant_expansion_validate(const EntryDistribution& law, const TestFunction& F, int T,
                                          double N) {
  if (T < 0 || T > 11) throw std::invalid_argument("cumulant expansion order T must be in [0, 11]");
  if (!(N > 0.0)) throw std::invalid_argument("cumulant expansion scale N must be positive");
  const double scale = 1.0 / std::sqrt(N);
  // E[g(Y)] for Y = X / sqrt(N).
  auto expect = [&](auto g) {
    switch (law.law()) {
      case EntryLaw::rademacher:
        return 0.5 * (g(scale) + g(-scale));
      case EntryLaw::custom: {
        double sum = 0.0;
        for (std::size_t i = 0; i < law.atoms().size(); ++i) sum += law.probs()[i] * g(law.atoms()[i] * scale);
        return sum;
      }
      case EntryLaw::uniform: {
        const double a = std::sqrt(3.0);
        const GaussRule& rule = gauss_legendre(40);
        double sum = 0.0;
        for (int k = 0; k < 16; ++k) {
          const double lo = -a + 2.0 * a * k / 16.0;
          sum += integrate_fixed(rule, [&](double x) { return g(x * scale); }, lo, lo + 2.0 * a / 16.0);
        }
        return sum / (2.0 * a);
      }
      case EntryLaw::gaussian: {
        const GaussRule& rule = gauss_legendre(40);
        const double inv = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        double sum = 0.0;
        for (int k = 0; k < 48; ++k) {
          const double lo = -12.0 + 0.5 * k;
          sum += integrate_fixed(rule, [&](double x) { return g(x * scale) * inv * std::exp(-0.5 * x * x); },
                                 lo, lo + 0.5);
        }
        return sum;
      }
    }
    throw std::invalid_argument("unsupported entry law");
  };
  const std::vector<double> kappa = entry_cumulants(law, T + 1);
  CumulantCheck out;
  out.T = T;
  out.lhs = expect([&](double y) { return y * F.derivative(0, y); });
  double factorial = 1.0;
  for (int r = 0; r <= T; ++r) {
    if (r > 0) factorial *= r;
    const double k = kappa[static_cast<std::size_t>(r)] * std::pow(scale, r + 1);
    if (k != 0.0) out.rhs += k / factorial * expect([&](double y) { return F.derivative(r, y); });
  }
  out.residual = std::abs(out.lhs - out.rhs);
  out.bound_shape = expect([&](double y) { return std::pow(std::abs(y), T + 2); }) * F.sup(T + 1);
  return out;
}

RunResult run_cumulant(const ExperimentConfig& c, int max_T) {
  c.validate();
  RunResult out;
  out.command = "cumulant";
  out.results.columns = {"function", "T", "lhs", "rhs", "residual", "bound_shape"};
  const double N = static_cast<double>(c.ensemble.N);
  json fns = json::array();
  bool within = true;
  for (const std::string name : {"sin", "cos"}) {
    const TestFunction F = test_function(name);
    std::vector<double> residuals;
    for (int T = 1; T <= max_T; ++T) {
      const CumulantCheck r = cumulant_expansion_validate(c.ensemble.entries, F, T, N);
      out.results.rows.push_back({name, static_cast<std::int64_t>(T), r.lhs, r.rhs, r.residual, r.bound_shape});
      residuals.push_back(r.residual);
      within = within && r.residual <= r.bound_shape;
    }
    fns.push_back({{"function", name}, {"residuals", residuals}});
  }
  json s = {{"schema_version", kSchemaVersion},
            {"command", "cumulant"},
            {"law", std::string(to_string(c.ensemble.entries.law()))},
            {"N", c.ensemble.N},
            {"functions", fns},
            {"verdicts", {{"residual_within_shape", {{"pass", within}}}}}};
  out.passed = within;
  s["passed"] = out.passed;
  out.summary = s;
  return out;
}

}  // namespace rmtlab
