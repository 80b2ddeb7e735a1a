#include "rmtlab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rmtlab {

Engine trial_stream(std::uint64_t seed, std::uint64_t trial,
                    std::uint64_t purpose) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(purpose));
  const std::uint64_t b = splitmix64(a ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Engine(seq);
}

std::string_view to_string(EntryLaw law) {
  switch (law) {
    case EntryLaw::gaussian: return "gaussian";
    case EntryLaw::rademacher: return "rademacher";
    case EntryLaw::uniform: return "uniform";
    case EntryLaw::custom: return "custom";
  }
  return "unknown";
}

EntryLaw parse_entry_law(std::string_view name) {
  if (name == "gaussian") return EntryLaw::gaussian;
  if (name == "rademacher") return EntryLaw::rademacher;
  if (name == "uniform") return EntryLaw::uniform;
  if (name == "custom") return EntryLaw::custom;
  throw std::invalid_argument("unknown entry law '" + std::string(name) + "'");
}

EntryDistribution::EntryDistribution(EntryLaw law) : law_(law) {
  if (law == EntryLaw::custom) {
    throw std::invalid_argument("custom entry law needs atoms and probabilities");
  }
}

EntryDistribution::EntryDistribution(std::vector<double> atoms,
                                     std::vector<double> probs)
    : law_(EntryLaw::custom), atoms_(std::move(atoms)), probs_(std::move(probs)) {
  if (atoms_.empty() || atoms_.size() != probs_.size()) {
    throw std::invalid_argument("custom law: atoms and probabilities must match");
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12 ||
      std::any_of(probs_.begin(), probs_.end(), [](double p) { return p < 0.0; })) {
    throw std::invalid_argument("custom law: probabilities must be a distribution");
  }
  // Symmetric: every atom a has a partner -a with the same probability.
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    double mirrored = 0.0;
    double own = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      if (atoms_[j] == -atoms_[i]) mirrored += probs_[j];
      if (atoms_[j] == atoms_[i]) own += probs_[j];
    }
    if (std::abs(mirrored - own) > 1e-12) {
      throw std::invalid_argument("custom law must be symmetric about 0");
    }
  }
  double var = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) var += probs_[i] * atoms_[i] * atoms_[i];
  if (!(var > 0.0)) throw std::invalid_argument("custom law has zero variance");
  const double s = 1.0 / std::sqrt(var);
  for (double& a : atoms_) a *= s;
}

double EntryDistribution::draw(Engine& engine) const {
  switch (law_) {
    case EntryLaw::gaussian: {
      std::normal_distribution<double> normal;
      return normal(engine);
    }
    case EntryLaw::rademacher:
      return (engine() >> 63) ? 1.0 : -1.0;
    case EntryLaw::uniform: {
      std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
      return u(engine);
    }
    case EntryLaw::custom: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double r = u(engine);
      double acc = 0.0;
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        acc += probs_[i];
        if (r < acc) return atoms_[i];
      }
      return atoms_.back();
    }
  }
  return 0.0;
}

double EntryDistribution::moment(int p) const {
  if (p < 0) throw std::invalid_argument("moment order must be non-negative");
  if (p == 0) return 1.0;
  switch (law_) {
    case EntryLaw::gaussian: {
      if (p % 2) return 0.0;
      double m = 1.0;
      for (int k = p - 1; k > 0; k -= 2) m *= k;
      return m;
    }
    case EntryLaw::rademacher:
      return p % 2 ? 0.0 : 1.0;
    case EntryLaw::uniform:
      return p % 2 ? 0.0 : std::pow(3.0, 0.5 * p) / (p + 1);
    case EntryLaw::custom: {
      double m = 0.0;
      for (std::size_t i = 0; i < atoms_.size(); ++i) m += probs_[i] * std::pow(atoms_[i], p);
      return m;
    }
  }
  return 0.0;
}

double EnsembleSpec::diag_factor() const {
  if (diag_variance_factor) return *diag_variance_factor;
  return beta == 1 ? 2.0 : 1.0;
}

void EnsembleSpec::validate() const {
  if (N < 2) throw std::invalid_argument("ensemble: N must be at least 2");
  if (beta != 1 && beta != 2) throw std::invalid_argument("ensemble: beta must be 1 or 2");
  if (!(diag_factor() > 0.0)) {
    throw std::invalid_argument("ensemble: diag_variance_factor must be positive");
  }
}

namespace {

template <class Draw>
WignerMatrix fill_matrix(const EnsembleSpec& spec, Draw&& draw) {
  const double nd = static_cast<double>(spec.N);
  const double off = 1.0 / std::sqrt(nd);
  const double diag = std::sqrt(spec.diag_factor() / nd);
  const auto N = static_cast<Eigen::Index>(spec.N);
  if (spec.beta == 1) {
    RealMatrix H(N, N);
    for (Eigen::Index j = 0; j < N; ++j) {
      H(j, j) = diag * draw();
      for (Eigen::Index i = j + 1; i < N; ++i) {
        const double h = off * draw();
        H(i, j) = h;
        H(j, i) = h;
      }
    }
    return H;
  }
  ComplexMatrix H(N, N);
  const double half = off / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < N; ++j) {
    H(j, j) = Complex(diag * draw(), 0.0);
    for (Eigen::Index i = j + 1; i < N; ++i) {
      const double re = draw();
      const double im = draw();
      const Complex h(half * re, half * im);
      H(i, j) = h;
      H(j, i) = std::conj(h);
    }
  }
  return H;
}

}  // namespace

WignerSample sample_wigner(const EnsembleSpec& spec, std::uint64_t trial) {
  spec.validate();
  Engine engine = trial_stream(spec.seed, trial);
  WignerSample sample{RealMatrix(), spec, trial};
  if (spec.entries.law() == EntryLaw::gaussian) {
    std::normal_distribution<double> normal;
    sample.matrix = fill_matrix(spec, [&] { return normal(engine); });
  } else {
    sample.matrix = fill_matrix(spec, [&] { return spec.entries.draw(engine); });
  }
  return sample;
}

std::vector<double> moments_to_cumulants(const std::vector<double>& moments) {
  const std::size_t n = moments.size();
  std::vector<double> kappa(n, 0.0);
  // binom(m-1, j-1) for the recursion kappa_m = m_m - sum_j C(m-1,j-1) kappa_j m_{m-j}.
  for (std::size_t m = 1; m <= n; ++m) {
    double value = moments[m - 1];
    double binom = 1.0;  // C(m-1, 0)
    for (std::size_t j = 1; j < m; ++j) {
      value -= binom * kappa[j - 1] * moments[m - j - 1];
      binom = binom * static_cast<double>(m - 1 - j + 1) / static_cast<double>(j);
    }
    kappa[m - 1] = value;
  }
  return kappa;
}

std::vector<double> entry_cumulants(const EntryDistribution& law, int r) {
  if (r < 1 || r > 12) throw std::invalid_argument("entry_cumulants: order must be in [1, 12]");
  std::vector<double> moments(static_cast<std::size_t>(r));
  for (int p = 1; p <= r; ++p) moments[static_cast<std::size_t>(p - 1)] = law.moment(p);
  return moments_to_cumulants(moments);
}

}  // namespace rmtlab
