#include "doctest.h"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rmtlab/artifacts.hpp"
#include "rmtlab/harness.hpp"
#include "rmtlab/rng.hpp"

using namespace rmtlab;
using std::numbers::pi;

namespace {

ExperimentConfig small_config(std::size_t N, std::size_t trials) {
  ExperimentConfig c;
  c.ensemble.N = N;
  c.ensemble.seed = 5;
  c.trials = trials;
  c.workers = 1;
  return c;
}

RealVector quantile_spectrum(std::size_t N) {
  const QuantileTable q = quantile_table(N);
  RealVector g(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) g[static_cast<Eigen::Index>(i)] = q.gamma[i];
  return g;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config validation and sweep sizes") {
  ExperimentConfig c = small_config(100, 10);
  c.sizes = {50, 100, 25};
  CHECK(c.sweep_sizes() == std::vector<std::size_t>{25, 50, 100});
  CHECK_NOTHROW(c.validate());
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.trials = 1;
  c.tau = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.tau = 0.2;
  c.edge.k = 101;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  IndexSetSpec s;
  CHECK(s.resolve(300) == 150);
  s.count = 270;
  CHECK(s.resolve(300) == 270);
  CHECK(parse_basis_kind("haar") == BasisKind::haar);
  CHECK_THROWS(parse_basis_kind("fourier"));
}

TEST_CASE("parallel_trials keeps trial order and rethrows") {
  const auto v = parallel_trials(50, 4, [](std::size_t t) { return t * t; });
  for (std::size_t t = 0; t < 50; ++t) CHECK(v[t] == t * t);
  CHECK_THROWS_AS(parallel_trials(10, 3,
                                  [](std::size_t t) {
                                    if (t == 7) throw std::runtime_error("trial 7");
                                    return t;
                                  }),
                  std::runtime_error);
}

TEST_CASE("default grid lies in the spectral domain") {
  const auto g = default_z_grid(1000, 0.2);
  CHECK(g.size() == 12);
  for (const auto& z : g) {
    CHECK(z.in_domain(0.2, 1000));
    CHECK(std::abs(z.E()) <= 2.0);
  }
}

TEST_CASE("QUE statistic vanishes for the full index set") {
  ExperimentConfig c = small_config(40, 5);
  c.index_set.fraction = 1.0;
  const RunResult r = run_que_check(c);
  for (const auto& row : r.results.rows) CHECK(std::get<double>(row[4]) == 0.0);
}

TEST_CASE("rigidity ratio of the quantile spectrum is zero") {
  CHECK(rigidity_ratio(quantile_spectrum(300)) == 0.0);
  RealVector g = quantile_spectrum(300);
  const QuantileTable q = quantile_table(300);
  g[5] += 2.0 * q.delta[5];
  CHECK(rigidity_ratio(g) == doctest::Approx(2.0));
}

TEST_CASE("cumulant expansion: Gaussian Stein identity") {
  for (const char* name : {"sin", "cos"}) {
    for (double N : {1.0, 100.0}) {
      const CumulantCheck r =
          cumulant_expansion_validate(EntryDistribution(EntryLaw::gaussian), test_function(name), 1, N);
      CHECK(r.residual < 1e-10);
    }
  }
}

TEST_CASE("cumulant expansion: Rademacher remainder and decay in T") {
  const EntryDistribution rad(EntryLaw::rademacher);
  for (double N : {1.0, 4.0, 100.0}) {
    const CumulantCheck r = cumulant_expansion_validate(rad, test_function("sin"), 8, N);
    // E[Y sin Y] = sin(1/sqrt N)/sqrt N exactly.
    CHECK(r.lhs == doctest::Approx(std::sin(1.0 / std::sqrt(N)) / std::sqrt(N)).epsilon(1e-14));
    CHECK(r.residual <= r.bound_shape);
  }
  for (const EntryDistribution& law : {rad, EntryDistribution(EntryLaw::uniform)}) {
    double prev = INFINITY;
    for (int T : {2, 4, 6, 8}) {
      const double res = cumulant_expansion_validate(law, test_function("sin"), T, 1.0).residual;
      CHECK(res < prev);
      prev = res;
      // Symmetric law and even F: both sides vanish term by term.
      CHECK(cumulant_expansion_validate(law, test_function("cos"), T, 1.0).residual < 1e-15);
    }
  }
  CHECK_THROWS(test_function("exp"));
  CHECK_THROWS(cumulant_expansion_validate(rad, test_function("sin"), 12, 1.0));
}

TEST_CASE("cumulant expansion: custom atoms by exact summation") {
  // Symmetric three-point law with unit variance.
  const EntryDistribution law({-std::sqrt(2.0), 0.0, std::sqrt(2.0)}, {0.25, 0.5, 0.25});
  const CumulantCheck r = cumulant_expansion_validate(law, test_function("sin"), 10, 1.0);
  CHECK(r.lhs == doctest::Approx(0.5 * std::sqrt(2.0) * std::sin(std::sqrt(2.0))).epsilon(1e-14));
  CHECK(r.residual <= r.bound_shape);
}

TEST_CASE("isolated eigenvalue: v_ell within 5% of p_hat_ell") {
  const std::size_t N = 200;
  const RealVector g = quantile_spectrum(N);
  const RegularizationParams p = default_params(1, N, 0.2, Profile::practical);
  Engine e = trial_stream(3, 0);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 8; ++trial) {
    OverlapSet o;
    o.p_hat = RealVector::Zero(Eigen::Index(N));
    // Far eigenvalues carry overlaps; their Cauchy tails inside I_ell are below 1e-3.
    for (Eigen::Index k = 20; k < Eigen::Index(N); ++k) o.p_hat[k] = normal(e);
    o.p_hat[0] = (trial % 2 ? -1.0 : 1.0) * (0.5 + std::abs(normal(e)));
    const double v = v_ell(g, o, p).v;
    CHECK(std::abs(v - o.p_hat[0]) <= 0.05 * std::abs(o.p_hat[0]));
  }
}

TEST_CASE("clt run: skipped accounting and summary fields") {
  ExperimentConfig c = small_config(60, 120);
  const RunResult r = run_clt(c);
  CHECK(r.results.rows.size() == 120);
  CHECK(r.summary["reported"].get<std::size_t>() + r.summary["skipped"].get<std::size_t>() == 120);
  CHECK(r.summary["moments"]["raw"].size() == 8);
  CHECK(r.summary["histogram"]["counts"].size() == 60);
  CHECK(r.summary["verdicts"].contains("ks"));
  c.index_set.fraction = 1.0;
  CHECK_THROWS_AS(run_clt(c), std::invalid_argument);
}

TEST_CASE("GOE self-overlap moments match the exact Beta law") {
  // For GOE the eigenvector is Haar on the sphere, so sum_{a in I} u_a^2 is
  // Beta(|I|/2, (N-|I|)/2) at every N.
  for (std::size_t m : {30u, 54u}) {
    ExperimentConfig c = small_config(60, 4000);
    c.index_set.count = m;
    const RunResult r = run_clt(c);
    const double a = 0.5 * double(m), b = 0.5 * double(60 - m), s = a + b;
    const double c2 = std::pow(overlap_prefactor(60, m, 1), 2);
    const double mu2 = a * b / (s * s * (s + 1));
    const double mu3 = 2 * a * b * (b - a) / (s * s * s * (s + 1) * (s + 2));
    const double mu4 = 3 * a * b * (a * b * (s - 6) + 2 * s * s) / (s * s * s * s * (s + 1) * (s + 2) * (s + 3));
    const std::array<double, 3> exact{c2 * mu2, std::pow(c2, 1.5) * mu3, c2 * c2 * mu4};
    const auto raw = r.summary["moments"]["raw"];
    const auto se = r.summary["moments"]["se"];
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(raw[k + 1].get<double>() - exact[k]) <= 4.0 * se[k + 1].get<double>());
    }
    if (m == 54) CHECK(exact[1] < -0.5);
  }
}

TEST_CASE("one worker and three workers write identical results") {
  ExperimentConfig c = small_config(80, 24);
  c.sizes = {40};
  auto check = [&](auto run) {
    c.workers = 1;
    const RunResult a = run(c);
    c.workers = 3;
    const RunResult b = run(c);
    CHECK(to_csv(a.results) == to_csv(b.results));
    CHECK(a.summary.dump() == b.summary.dump());
  };
  check(run_clt);
  check(run_que_check);
  check(run_rigidity_and_repulsion);
  check([](const ExperimentConfig& x) { return run_local_law_sweep(x); });
  c.trials = 6;
  check(run_regularization_fidelity);
}

TEST_CASE("local law sweep: residual rows and window laws") {
  ExperimentConfig c = small_config(100, 2);
  c.edge_window_points = 3;
  const RunResult r = run_local_law_sweep(c);
  // Per trial: 12 grid points x 3 probes x 2 laws, 3 window points x (6 + 32).
  CHECK(r.results.rows.size() == 2 * (12 * 6 + 3 * (6 + 32)));
  for (const auto& row : r.results.rows) CHECK(std::isfinite(std::get<double>(row[8])));
  CHECK(r.summary["verdicts"]["p95_bound"].contains("pass"));
}

TEST_CASE("artifacts: number formatting, CSV, hash and files") {
  CHECK(format_double(std::nan("")).empty());
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  Table t{{"a", "b", "c"}, {{Cell{std::int64_t{1}}, Cell{2.5}, Cell{std::string("x,y")}}}};
  CHECK(to_csv(t) == "a,b,c\n1,2.5,\"x,y\"\n");
  CHECK(to_csv(Table{{"only"}, {}}) == "only\n");

  const ExperimentConfig c = small_config(60, 3);
  const std::string h = config_hash(to_json(c));
  CHECK(h.size() == 16);
  CHECK(h == config_hash(to_json(c)));
  ExperimentConfig d = c;
  d.ensemble.seed = 6;
  CHECK(h != config_hash(to_json(d)));

  const auto dir = std::filesystem::temp_directory_path() / "rmtlab_test_artifacts";
  std::filesystem::remove_all(dir);
  RunResult r;
  r.command = "x";
  r.results = t;
  r.summary = {{"passed", true}};
  const auto files = write_run_artifacts(dir, r, to_json(c));
  CHECK(files.size() == 3);
  CHECK(read(dir / "results.csv") == to_csv(t));
  CHECK(nlohmann::json::parse(read(dir / "summary.json"))["schema_version"] == kSchemaVersion);
  CHECK(nlohmann::json::parse(read(dir / "config.echo.json"))["ensemble"]["N"] == 60);
  RunManifest m{"x", h, 5, "0.1.0", utc_timestamp(), utc_timestamp(), files};
  write_manifest(dir, m);
  const auto mj = nlohmann::json::parse(read(dir / "manifest.json"));
  CHECK(mj["config_hash"] == h);
  CHECK(mj["files"].size() == 3);
  std::filesystem::remove_all(dir);
}
