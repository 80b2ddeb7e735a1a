#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rmtlab/harness.hpp"

namespace rmtlab::cli {

/// Invalid configuration; the message names the file, line and field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Environment variable that overrides output.dir from the config file.
inline constexpr const char* kOutputDirEnv = "RMTLAB_OUTPUT_DIR";

/// Named configurations, as YAML documents.
const std::map<std::string, std::string>& presets();

struct Resolved {
  ExperimentConfig config;
  std::filesystem::path output_dir;
  int max_T = 8;
};

/// Applies a YAML document on top of `base`. `source` names the document in
/// diagnostics. Unknown keys and malformed values throw ConfigError.
Resolved apply_yaml(const std::string& text, const std::string& source, Resolved base,
                    bool require_ensemble);

/// Full command-line entry point. Exit codes: 0 success with thresholds met,
/// 2 run completed with thresholds failed, 1 error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rmtlab::cli
