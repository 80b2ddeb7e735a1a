#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rmtlab/harness.hpp"

namespace rmtlab {

/// Round-trippable decimal: %.17g; NaN becomes an empty cell.
std::string format_double(double x);

/// Header row then one line per row, comma separated, '\n' line ends.
std::string to_csv(const Table& t);

/// FNV-1a 64 of the compact canonical dump (sorted keys), as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string start_time;
  std::string end_time;
  std::vector<std::string> files;
};

nlohmann::json to_json(const RunManifest& m);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Writes results.csv, summary.json and config.echo.json into `dir` (created
/// if needed) and returns the file names written. Timestamps live only in
/// manifest.json, so these three files are identical across reruns.
std::vector<std::string> write_run_artifacts(const std::filesystem::path& dir, const RunResult& r,
                                             const nlohmann::json& config);

void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

/// Writes `text` to `path`, throwing std::runtime_error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rmtlab
