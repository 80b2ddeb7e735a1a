#include "cli.hpp"

#include <yaml-cpp/yaml.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "rmtlab/artifacts.hpp"
#include "rmtlab/ncfree.hpp"
#include "rmtlab/semicircle.hpp"

#ifndef RMTLAB_VERSION
#define RMTLAB_VERSION "0.0.0"
#endif

namespace rmtlab::cli {
namespace {

using nlohmann::json;

// Configuration file reading.

std::string where(const YAML::Node& n, const std::string& source) {
  const YAML::Mark m = n.Mark();
  if (m.line < 0) return source;
  return source + ":" + std::to_string(m.line + 1);
}

template <class T>
T scalar(const YAML::Node& n, const std::string& path, const std::string& source, const char* expected) {
  if (!n.IsScalar()) throw ConfigError(where(n, source) + ": field '" + path + "' must be " + expected);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(n, source) + ": field '" + path + "' must be " + expected + ", got '" +
                      n.Scalar() + "'");
  }
}

std::size_t count_value(const YAML::Node& n, const std::string& path, const std::string& source) {
  const auto v = scalar<long long>(n, path, source, "a non-negative integer");
  if (v < 0) throw ConfigError(where(n, source) + ": field '" + path + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

double real_value(const YAML::Node& n, const std::string& path, const std::string& source) {
  return scalar<double>(n, path, source, "a number");
}

std::string text_value(const YAML::Node& n, const std::string& path, const std::string& source) {
  return scalar<std::string>(n, path, source, "a string");
}

template <class F>
auto list_value(const YAML::Node& n, const std::string& path, const std::string& source, F item) {
  if (!n.IsSequence()) throw ConfigError(where(n, source) + ": field '" + path + "' must be a list");
  std::vector<decltype(item(n, path, source))> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(item(n[i], path + "[" + std::to_string(i) + "]", source));
  return out;
}

void check_keys(const YAML::Node& n, const std::string& path, const std::string& source,
                const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError(where(n, source) + ": section '" + path + "' must be a mapping");
  for (const auto& kv : n) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ConfigError(where(kv.first, source) + ": unknown key '" + (path.empty() ? "" : path + ".") + key + "'");
    }
  }
}

template <class T, class F>
T wrap(const YAML::Node& n, const std::string& path, const std::string& source, F parse) {
  try {
    return parse();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where(n, source) + ": field '" + path + "': " + e.what());
  }
}

std::vector<SpectralPoint> parse_grid_text(const std::string& text) {
  if (text == "default") return {};
  std::vector<SpectralPoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("grid point '" + item + "' is not E:eta");
    try {
      out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw std::invalid_argument("grid point '" + item + "' is not E:eta");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

void apply_threshold(Thresholds& t, const std::string& name, double v) {
  const std::map<std::string, double Thresholds::*> fields{
      {"se_factor", &Thresholds::se_factor},
      {"variance_tol", &Thresholds::variance_tol},
      {"fourth_tol", &Thresholds::fourth_tol},
      {"ks_max", &Thresholds::ks_max},
      {"que_exponent", &Thresholds::que_exponent},
      {"rigidity_exponent", &Thresholds::rigidity_exponent},
      {"local_law_exponent", &Thresholds::local_law_exponent},
      {"min_correlation", &Thresholds::min_correlation},
      {"second_moment_tol", &Thresholds::second_moment_tol}};
  const auto it = fields.find(name);
  if (it == fields.end()) throw std::invalid_argument("unknown threshold '" + name + "'");
  t.*(it->second) = v;
}

// Command-line flags; unset optionals leave the file value alone.
struct Flags {
  std::optional<std::string> config_file, preset, law, edge, basis, grid, profile, out;
  std::optional<std::size_t> N, trials, index_count, window_points, workers;
  std::optional<int> beta, max_T;
  std::optional<std::uint64_t> seed, basis_seed;
  std::optional<double> diag_factor, index_fraction, tau, epsilon0, C0;
  std::vector<std::size_t> sizes;
  std::vector<double> repulsion_eps, atoms, probs;
  std::vector<std::string> thresholds;
  bool dry_run = false;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_file, "YAML configuration file")->check(CLI::ExistingFile);
  app->add_option("--preset", f.preset, "Named base configuration (see 'presets')");
  app->add_option("--n", f.N, "Matrix size N");
  app->add_option("--beta", f.beta, "1 (real symmetric) or 2 (complex Hermitian)");
  app->add_option("--law", f.law, "Entry law: gaussian, rademacher, uniform, custom");
  app->add_option("--atoms", f.atoms, "Atoms of a custom entry law");
  app->add_option("--probs", f.probs, "Probabilities of a custom entry law");
  app->add_option("--seed", f.seed, "Ensemble seed");
  app->add_option("--diag-factor", f.diag_factor, "Diagonal variance factor (variance factor/N)");
  app->add_option("--trials", f.trials, "Monte Carlo trials");
  app->add_option("--edge", f.edge, "Edge index as bottom:K or top:K");
  app->add_option("--index-count", f.index_count, "|I| as a count");
  app->add_option("--index-fraction", f.index_fraction, "|I| as a fraction of N");
  app->add_option("--basis", f.basis, "standard or haar");
  app->add_option("--basis-seed", f.basis_seed, "Seed of the Haar basis and probe vectors");
  app->add_option("--sizes", f.sizes, "Extra matrix sizes of an N-sweep");
  app->add_option("--grid", f.grid, "Local-law grid: default or E:eta,E:eta,...");
  app->add_option("--window-points", f.window_points, "Energies across the edge window");
  app->add_option("--repulsion-eps", f.repulsion_eps, "Level-repulsion exponents");
  app->add_option("--profile", f.profile, "Regularization profile: practical or paper");
  app->add_option("--tau", f.tau, "Edge exponent tau");
  app->add_option("--epsilon0", f.epsilon0, "Level-repulsion exponent epsilon0");
  app->add_option("--C0", f.C0, "Growth constant C0");
  app->add_option("--threshold", f.thresholds, "Acceptance threshold as name=value (repeatable)");
  app->add_option("--workers", f.workers, "Worker threads (default: available cores)");
  app->add_option("--out", f.out, std::string("Output directory (default: output.dir, $") + kOutputDirEnv + ")");
  app->add_flag("--dry-run", f.dry_run, "Validate and print the configuration without running");
}

Resolved resolve(const Flags& f, const std::string& command) {
  Resolved r;
  r.output_dir = std::filesystem::path("rmtlab-out") / command;
  bool have_N = false;
  if (f.preset) {
    const auto it = presets().find(*f.preset);
    if (it == presets().end()) throw ConfigError("unknown preset '" + *f.preset + "'");
    r = apply_yaml(it->second, "preset " + *f.preset, r, true);
    have_N = true;
  }
  if (f.config_file) {
    std::ifstream in(*f.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r = apply_yaml(ss.str(), *f.config_file, r, !f.preset);
    have_N = true;
  }
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) r.output_dir = env;

  ExperimentConfig& c = r.config;
  if (f.N) {
    c.ensemble.N = *f.N;
    have_N = true;
  }
  if (!have_N) throw ConfigError("missing key 'ensemble.N' (give --n, --preset or --config)");
  if (f.beta) c.ensemble.beta = *f.beta;
  if (!f.atoms.empty() || !f.probs.empty()) {
    c.ensemble.entries = EntryDistribution(f.atoms, f.probs);
  } else if (f.law) {
    if (parse_entry_law(*f.law) == EntryLaw::custom) throw ConfigError("--law custom needs --atoms and --probs");
    c.ensemble.entries = EntryDistribution(parse_entry_law(*f.law));
  }
  if (f.seed) c.ensemble.seed = *f.seed;
  if (f.diag_factor) c.ensemble.diag_variance_factor = *f.diag_factor;
  if (f.trials) c.trials = *f.trials;
  if (f.edge) c.edge = parse_edge_spec(*f.edge);
  if (f.index_count) c.index_set.count = *f.index_count;
  if (f.index_fraction) {
    c.index_set.count.reset();
    c.index_set.fraction = *f.index_fraction;
  }
  if (f.basis) c.basis = parse_basis_kind(*f.basis);
  if (f.basis_seed) c.basis_seed = *f.basis_seed;
  if (!f.sizes.empty()) c.sizes = f.sizes;
  if (f.grid) c.z_grid = parse_grid_text(*f.grid);
  if (f.window_points) c.edge_window_points = *f.window_points;
  if (!f.repulsion_eps.empty()) c.repulsion_eps = f.repulsion_eps;
  if (f.profile) c.profile = parse_profile(*f.profile);
  if (f.tau) c.tau = *f.tau;
  if (f.epsilon0) c.epsilon0 = *f.epsilon0;
  if (f.C0) c.C0 = *f.C0;
  for (const std::string& t : f.thresholds) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("--threshold expects name=value, got '" + t + "'");
    double v = 0.0;
    try {
      v = std::stod(t.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("--threshold " + t + ": value is not a number");
    }
    apply_threshold(c.thresholds, t.substr(0, eq), v);
  }
  if (f.workers) c.workers = *f.workers;
  if (f.max_T) r.max_T = *f.max_T;
  if (f.out) r.output_dir = *f.out;
  c.validate();
  if (r.max_T < 1 || r.max_T > 11) throw ConfigError("experiment.max_T must be in [1, 11]");
  return r;
}

json config_echo(const Resolved& r, const std::string& command) {
  json j = to_json(r.config);
  j["command"] = command;
  if (command == "cumulant") j["experiment"]["max_T"] = r.max_T;
  return j;
}

RunResult dispatch(const std::string& command, const Resolved& r) {
  if (command == "clt") return run_clt(r.config);
  if (command == "que") return run_que_check(r.config);
  if (command == "rigidity") return run_rigidity_and_repulsion(r.config);
  if (command == "locallaw") return run_local_law_sweep(r.config);
  if (command == "regcheck") return run_regularization_fidelity(r.config);
  if (command == "cumulant") return run_cumulant(r.config, r.max_T);
  throw std::logic_error("no driver for " + command);
}

int run_experiment(const std::string& command, const Flags& f, std::ostream& out) {
  const Resolved r = resolve(f, command);
  const json echo = config_echo(r, command);
  if (f.dry_run) {
    out << echo.dump(2) << "\n";
    out << "dry run: configuration valid; output would go to " << r.output_dir.string() << "\n";
    return 0;
  }
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash(echo);
  m.seed = r.config.ensemble.seed;
  m.tool_version = RMTLAB_VERSION;
  m.start_time = utc_timestamp();
  const RunResult result = dispatch(command, r);
  m.files = write_run_artifacts(r.output_dir, result, echo);
  m.end_time = utc_timestamp();
  m.files.push_back("manifest.json");
  write_manifest(r.output_dir, m);
  out << command << ": " << (result.passed ? "thresholds met" : "thresholds NOT met") << " ("
      << r.config.trials << " trials, " << result.skipped << " skipped) -> " << r.output_dir.string() << "\n";
  return result.passed ? 0 : 2;
}

int run_nc(std::size_t k, const std::optional<std::string>& z_text, const std::optional<std::string>& file,
           std::ostream& out) {
  if (k < 1 || k > 10) throw ConfigError("nc: k must be in [1, 10], got " + std::to_string(k));
  std::vector<Complex> zs;
  if (z_text) {
    for (const auto& p : parse_grid_text(*z_text)) zs.push_back(p.z());
    if (zs.size() != k) throw ConfigError("nc: --z needs exactly k points");
  } else {
    for (std::size_t j = 0; j < k; ++j) zs.emplace_back(-0.5 + 0.25 * static_cast<double>(j), 1.0);
  }
  auto blocks = [](const NCPartition& p) { return json(p.blocks); };
  json parts = json::array();
  for (const NCPartition& p : enumerate_nc(k)) {
    const NCPartition K = kreweras(p);
    parts.push_back({{"blocks", blocks(p)}, {"kreweras", blocks(K)}, {"size", p.size()}, {"kreweras_size", K.size()}});
  }
  const CumulantTable t = free_cumulants(zs);
  json table = json::array();
  for (SubsetMask B = 1; B < (SubsetMask{1} << k); ++B) {
    json labels = json::array();
    for (std::size_t i = 0; i < k; ++i) {
      if (B & (SubsetMask{1} << i)) labels.push_back(i + 1);
    }
    table.push_back({{"subset", labels},
                     {"m", {t.m(B).real(), t.m(B).imag()}},
                     {"m_free", {t.mcirc(B).real(), t.mcirc(B).imag()}}});
  }
  json z = json::array();
  for (const Complex& c : zs) z.push_back({c.real(), c.imag()});
  const json j = {{"schema_version", kSchemaVersion}, {"k", k},           {"count", parts.size()},
                  {"partitions", parts},              {"z", z},           {"cumulants", table}};
  if (file) {
    write_text(*file, j.dump(2) + "\n");
  } else {
    out << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p{
      {"goe-n300-edge",
       "ensemble: {N: 300, beta: 1, law: gaussian, seed: 7}\n"
       "experiment: {trials: 4000, edge: 'bottom:1', index_set: {count: 150}}\n"},
      {"rademacher-n300-edge",
       "ensemble: {N: 300, beta: 1, law: rademacher, seed: 7}\n"
       "experiment: {trials: 4000, edge: 'bottom:1', index_set: {count: 150}}\n"},
      {"goe-n300-top",
       "ensemble: {N: 300, beta: 1, law: gaussian, seed: 7}\n"
       "experiment: {trials: 4000, edge: 'top:1', index_set: {count: 150}}\n"},
      {"goe-n300-large-index",
       "ensemble: {N: 300, beta: 1, law: gaussian, seed: 7}\n"
       "experiment: {trials: 4000, edge: 'bottom:1', index_set: {count: 270}}\n"},
      {"goe-n500-que",
       "ensemble: {N: 500, beta: 1, law: gaussian, seed: 11}\n"
       "experiment: {trials: 100, index_set: {fraction: 0.5}, sizes: [250, 1000]}\n"},
      {"goe-n1000-rigidity",
       "ensemble: {N: 1000, beta: 1, law: gaussian, seed: 13}\n"
       "experiment: {trials: 50, edge: 'bottom:1'}\n"},
      {"goe-n1000-locallaw",
       "ensemble: {N: 1000, beta: 1, law: gaussian, seed: 17}\n"
       "experiment: {trials: 20, edge: 'bottom:1', sizes: [250], grid: default, window_points: 5}\n"
       "regularization: {profile: practical}\n"},
      {"goe-n200-regcheck",
       "ensemble: {N: 200, beta: 1, law: gaussian, seed: 19}\n"
       "experiment: {trials: 200, edge: 'bottom:1', index_set: {fraction: 0.5}}\n"
       "regularization: {profile: practical}\n"},
      {"rademacher-cumulant",
       "ensemble: {N: 4, beta: 1, law: rademacher, seed: 0}\n"
       "experiment: {trials: 1, max_T: 8}\n"},
  };
  return p;
}

Resolved apply_yaml(const std::string& text, const std::string& source, Resolved base, bool require_ensemble) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "", source, {"ensemble", "experiment", "regularization", "output"});
  ExperimentConfig& c = base.config;

  const YAML::Node ens = root["ensemble"];
  if (!ens) {
    if (require_ensemble) throw ConfigError(source + ": missing key 'ensemble'");
  } else {
    check_keys(ens, "ensemble", source, {"N", "beta", "law", "atoms", "probs", "seed", "diag_factor"});
    if (ens["N"]) {
      c.ensemble.N = count_value(ens["N"], "ensemble.N", source);
    } else if (require_ensemble) {
      throw ConfigError(where(ens, source) + ": missing key 'ensemble.N'");
    }
    if (ens["beta"]) c.ensemble.beta = static_cast<int>(count_value(ens["beta"], "ensemble.beta", source));
    if (ens["atoms"] || ens["probs"]) {
      if (!ens["atoms"] || !ens["probs"]) throw ConfigError(where(ens, source) + ": custom law needs both 'ensemble.atoms' and 'ensemble.probs'");
      const auto atoms = list_value(ens["atoms"], "ensemble.atoms", source, real_value);
      const auto probs = list_value(ens["probs"], "ensemble.probs", source, real_value);
      c.ensemble.entries = wrap<EntryDistribution>(ens, "ensemble.atoms", source,
                                                   [&] { return EntryDistribution(atoms, probs); });
    } else if (ens["law"]) {
      const std::string law = text_value(ens["law"], "ensemble.law", source);
      const EntryLaw l = wrap<EntryLaw>(ens["law"], "ensemble.law", source, [&] { return parse_entry_law(law); });
      if (l == EntryLaw::custom) throw ConfigError(where(ens["law"], source) + ": custom law needs 'ensemble.atoms' and 'ensemble.probs'");
      c.ensemble.entries = EntryDistribution(l);
    }
    if (ens["seed"]) c.ensemble.seed = count_value(ens["seed"], "ensemble.seed", source);
    if (ens["diag_factor"]) c.ensemble.diag_variance_factor = real_value(ens["diag_factor"], "ensemble.diag_factor", source);
  }

  if (const YAML::Node ex = root["experiment"]) {
    check_keys(ex, "experiment", source,
               {"trials", "edge", "index_set", "basis", "basis_seed", "sizes", "grid", "window_points",
                "repulsion_eps", "workers", "max_T", "thresholds"});
    if (ex["trials"]) c.trials = count_value(ex["trials"], "experiment.trials", source);
    if (ex["edge"]) {
      const std::string e = text_value(ex["edge"], "experiment.edge", source);
      c.edge = wrap<EdgeSpec>(ex["edge"], "experiment.edge", source, [&] { return parse_edge_spec(e); });
    }
    if (const YAML::Node is = ex["index_set"]) {
      check_keys(is, "experiment.index_set", source, {"count", "fraction"});
      if (is["count"] && is["fraction"]) throw ConfigError(where(is, source) + ": give either 'count' or 'fraction' in 'experiment.index_set'");
      if (is["count"]) c.index_set.count = count_value(is["count"], "experiment.index_set.count", source);
      if (is["fraction"]) {
        c.index_set.count.reset();
        c.index_set.fraction = real_value(is["fraction"], "experiment.index_set.fraction", source);
      }
    }
    if (ex["basis"]) {
      const std::string b = text_value(ex["basis"], "experiment.basis", source);
      c.basis = wrap<BasisKind>(ex["basis"], "experiment.basis", source, [&] { return parse_basis_kind(b); });
    }
    if (ex["basis_seed"]) c.basis_seed = count_value(ex["basis_seed"], "experiment.basis_seed", source);
    if (ex["sizes"]) c.sizes = list_value(ex["sizes"], "experiment.sizes", source, count_value);
    if (const YAML::Node g = ex["grid"]) {
      if (g.IsScalar()) {
        const std::string t = text_value(g, "experiment.grid", source);
        if (t != "default") throw ConfigError(where(g, source) + ": field 'experiment.grid' must be 'default' or a list of [E, eta]");
        c.z_grid.clear();
      } else {
        c.z_grid.clear();
        const auto pts = list_value(g, "experiment.grid", source, [](const YAML::Node& n, const std::string& p, const std::string& s) {
          const auto v = list_value(n, p, s, real_value);
          if (v.size() != 2) throw ConfigError(where(n, s) + ": field '" + p + "' must be [E, eta]");
          return v;
        });
        for (const auto& v : pts) {
          c.z_grid.push_back(wrap<SpectralPoint>(g, "experiment.grid", source, [&] { return SpectralPoint(v[0], v[1]); }));
        }
      }
    }
    if (ex["window_points"]) c.edge_window_points = count_value(ex["window_points"], "experiment.window_points", source);
    if (ex["repulsion_eps"]) c.repulsion_eps = list_value(ex["repulsion_eps"], "experiment.repulsion_eps", source, real_value);
    if (ex["workers"]) c.workers = count_value(ex["workers"], "experiment.workers", source);
    if (ex["max_T"]) base.max_T = static_cast<int>(count_value(ex["max_T"], "experiment.max_T", source));
    if (const YAML::Node th = ex["thresholds"]) {
      if (!th.IsMap()) throw ConfigError(where(th, source) + ": section 'experiment.thresholds' must be a mapping");
      for (const auto& kv : th) {
        const std::string name = kv.first.as<std::string>();
        const std::string path = "experiment.thresholds." + name;
        const double v = real_value(kv.second, path, source);
        wrap<int>(kv.first, path, source, [&] {
          apply_threshold(c.thresholds, name, v);
          return 0;
        });
      }
    }
  }

  if (const YAML::Node reg = root["regularization"]) {
    check_keys(reg, "regularization", source, {"profile", "tau", "epsilon0", "C0"});
    if (reg["profile"]) {
      const std::string p = text_value(reg["profile"], "regularization.profile", source);
      c.profile = wrap<Profile>(reg["profile"], "regularization.profile", source, [&] { return parse_profile(p); });
    }
    if (reg["tau"]) c.tau = real_value(reg["tau"], "regularization.tau", source);
    if (reg["epsilon0"]) c.epsilon0 = real_value(reg["epsilon0"], "regularization.epsilon0", source);
    if (reg["C0"]) c.C0 = real_value(reg["C0"], "regularization.C0", source);
  }

  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", source, {"dir"});
    if (o["dir"]) base.output_dir = text_value(o["dir"], "output.dir", source);
  }
  return base;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random-matrix laboratory: Monte Carlo checks of eigenvector and resolvent statistics", "rmtlab"};
  app.set_version_flag("--version", RMTLAB_VERSION);
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> experiments{
      {"clt", "Edge eigenvector-overlap CLT: moments, KS distance, histogram"},
      {"que", "Scaled maximal overlap deviation across matrix sizes"},
      {"rigidity", "Eigenvalue rigidity and edge level repulsion"},
      {"locallaw", "Normalized local-law residuals over the spectral grid and edge window"},
      {"regcheck", "Regularized edge observable against the self-overlap"},
      {"cumulant", "Cumulant expansion residuals of the entry law"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : experiments) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    if (name == "cumulant") sub->add_option("--max-T", flags.max_T, "Largest expansion order (1..11)");
    subs.push_back(sub);
  }
  std::size_t k = 0;
  std::optional<std::string> z_text, nc_out;
  CLI::App* nc = app.add_subcommand("nc", "Non-crossing partitions, Kreweras complements and free cumulants as JSON");
  nc->add_option("--k", k, "Number of points (1..10)")->required();
  nc->add_option("--z", z_text, "Spectral points as E:eta,... (default -0.5+0.25j + i)");
  nc->add_option("--out", nc_out, "Write the JSON here instead of standard output");
  app.add_subcommand("presets", "List the named configurations");

  if (argc > 1 && argv[1][0] != '-') {
    const std::string name = argv[1];
    const auto known = app.get_subcommands([](const CLI::App*) { return true; });
    if (std::none_of(known.begin(), known.end(), [&](const CLI::App* a) { return a->get_name() == name; })) {
      err << "error: unknown subcommand '" << name << "'\n\n" << app.help();
      return 1;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    for (CLI::App* sub : subs) {
      if (sub->parsed()) return run_experiment(sub->get_name(), flags, out);
    }
    if (nc->parsed()) return run_nc(k, z_text, nc_out, out);
    for (const auto& [name, yaml] : presets()) out << name << "\n" << yaml << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rmtlab::cli
