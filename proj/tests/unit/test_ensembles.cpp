#include "doctest.h"

#include <cmath>

#include "rmtlab/ensembles.hpp"

using namespace rmtlab;

namespace {

EnsembleSpec make_spec(std::size_t N, int beta, EntryLaw law, std::uint64_t seed) {
  EnsembleSpec spec;
  spec.N = N;
  spec.beta = beta;
  spec.entries = EntryDistribution(law);
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("samples are exactly self-adjoint") {
  for (EntryLaw law : {EntryLaw::gaussian, EntryLaw::rademacher, EntryLaw::uniform}) {
    const auto real = sample_wigner(make_spec(40, 1, law, 3), 0);
    const auto& H = real.real();
    CHECK((H.array() == H.transpose().array()).all());

    const auto cplx = sample_wigner(make_spec(40, 2, law, 3), 0);
    const auto& G = cplx.complex();
    CHECK((G.array() == G.adjoint().array()).all());
    for (Eigen::Index i = 0; i < 40; ++i) CHECK(G(i, i).imag() == 0.0);
  }
}

TEST_CASE("determinism and order independence") {
  const auto spec = make_spec(30, 1, EntryLaw::gaussian, 42);
  const auto a = sample_wigner(spec, 5);
  const auto later = sample_wigner(spec, 9);
  const auto b = sample_wigner(spec, 5);
  CHECK((a.real().array() == b.real().array()).all());
  CHECK_FALSE((a.real().array() == later.real().array()).all());
  auto other_seed = spec;
  other_seed.seed = 43;
  CHECK_FALSE((sample_wigner(other_seed, 5).real().array() == a.real().array()).all());
}

TEST_CASE("pooled off-diagonal variance, GOE N=2000") {
  const std::size_t N = 2000;
  const auto spec = make_spec(N, 1, EntryLaw::gaussian, 11);
  double sum2 = 0.0;
  double diag2 = 0.0;
  std::size_t count = 0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto H = sample_wigner(spec, t).real();
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      diag2 += H(j, j) * H(j, j);
      for (Eigen::Index i = j + 1; i < H.rows(); ++i) sum2 += H(i, j) * H(i, j);
    }
    count += N * (N - 1) / 2;
  }
  const double var = sum2 / double(count);
  CHECK(var * N > 0.9);
  CHECK(var * N < 1.1);
  const double dvar = diag2 / double(50 * N);
  CHECK(dvar * N == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("complex entries: E|h|^2 = 1/N with independent parts") {
  const std::size_t N = 300;
  const auto spec = make_spec(N, 2, EntryLaw::gaussian, 5);
  double re2 = 0.0;
  double im2 = 0.0;
  double cross = 0.0;
  std::size_t count = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto H = sample_wigner(spec, t).complex();
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      for (Eigen::Index i = j + 1; i < H.rows(); ++i) {
        re2 += H(i, j).real() * H(i, j).real();
        im2 += H(i, j).imag() * H(i, j).imag();
        cross += H(i, j).real() * H(i, j).imag();
        ++count;
      }
    }
  }
  CHECK((re2 + im2) / double(count) * N == doctest::Approx(1.0).epsilon(0.03));
  CHECK(re2 / im2 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(cross / double(count) * N) < 0.02);
}

TEST_CASE("third moment of normalized entries within 3 standard errors") {
  for (EntryLaw law : {EntryLaw::gaussian, EntryLaw::rademacher, EntryLaw::uniform}) {
    const std::size_t N = 200;
    const auto spec = make_spec(N, 1, law, 17);
    const EntryDistribution dist(law);
    double s1 = 0.0;
    double s2 = 0.0;
    std::size_t n = 0;
    for (std::uint64_t t = 0; t < 10; ++t) {
      const auto H = sample_wigner(spec, t).real();
      for (Eigen::Index j = 0; j < H.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < H.rows(); ++i) {
          const double x = std::sqrt(double(N)) * H(i, j);
          s1 += x * x * x;
          s2 += x * x * x * x * x * x;
          ++n;
        }
      }
    }
    const double mean = s1 / double(n);
    const double se = std::sqrt((s2 / double(n) - mean * mean) / double(n));
    CHECK(std::abs(mean - dist.moment(3)) <= 3.0 * se);
  }
}

TEST_CASE("entry cumulants") {
  const auto g = entry_cumulants(EntryDistribution(EntryLaw::gaussian), 8);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(1.0));
  for (int r = 3; r <= 8; ++r) CHECK(std::abs(g[r - 1]) < 1e-9);

  const auto rad = entry_cumulants(EntryDistribution(EntryLaw::rademacher), 6);
  CHECK(rad[0] == 0.0);
  CHECK(rad[1] == doctest::Approx(1.0));
  CHECK(rad[2] == 0.0);
  CHECK(rad[3] == doctest::Approx(-2.0));
  CHECK(rad[5] == doctest::Approx(16.0));

  const auto uni = entry_cumulants(EntryDistribution(EntryLaw::uniform), 4);
  CHECK(uni[3] == doctest::Approx(-1.2));

  CHECK_THROWS_AS(entry_cumulants(EntryDistribution(EntryLaw::gaussian), 13),
                  std::invalid_argument);
}

TEST_CASE("custom symmetric laws") {
  // Three-point law on {-2, 0, 2}; rescaled to unit variance.
  const EntryDistribution law({-2.0, 0.0, 2.0}, {0.25, 0.5, 0.25});
  CHECK(law.moment(2) == doctest::Approx(1.0));
  CHECK(law.moment(1) == doctest::Approx(0.0));
  // Atoms become +-sqrt(2): m4 = 2, so kappa_4 = 2 - 3 = -1.
  CHECK(entry_cumulants(law, 4)[3] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(EntryDistribution({-1.0, 2.0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(EntryDistribution({-1.0, 1.0}, {0.4, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(EntryDistribution(EntryLaw::custom), std::invalid_argument);

  EnsembleSpec spec;
  spec.N = 20;
  spec.entries = law;
  const auto H = sample_wigner(spec, 0).real();
  const double a = std::sqrt(2.0) / std::sqrt(20.0);
  for (Eigen::Index j = 0; j < 20; ++j) {
    for (Eigen::Index i = j + 1; i < 20; ++i) {
      const double v = std::abs(H(i, j));
      CHECK((v == 0.0 || std::abs(v - a) < 1e-15));
    }
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(sample_wigner(make_spec(1, 1, EntryLaw::gaussian, 0), 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_wigner(make_spec(10, 3, EntryLaw::gaussian, 0), 0), std::invalid_argument);
  CHECK_THROWS_AS(parse_entry_law("cauchy"), std::invalid_argument);
  CHECK(parse_entry_law("rademacher") == EntryLaw::rademacher);
}

TEST_CASE("moment-to-cumulant recursion on a hand case") {
  // Moments of Poisson(1): 1, 2, 5, 15 -> all cumulants 1.
  const auto k = moments_to_cumulants({1.0, 2.0, 5.0, 15.0});
  for (double v : k) CHECK(v == doctest::Approx(1.0));
}
