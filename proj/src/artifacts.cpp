#include "rmtlab/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace rmtlab {

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string format_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  if (const std::int64_t* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw std::logic_error("CSV row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += '\n';
  }
  return out;
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"schema_version", kSchemaVersion}, {"command", m.command},       {"config_hash", m.config_hash},
          {"seed", m.seed},                   {"tool_version", m.tool_version}, {"start_time", m.start_time},
          {"end_time", m.end_time},           {"files", m.files}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::string> write_run_artifacts(const std::filesystem::path& dir, const RunResult& r,
                                             const nlohmann::json& config) {
  std::filesystem::create_directories(dir);
  write_text(dir / "results.csv", to_csv(r.results));
  nlohmann::json summary = r.summary;
  summary["schema_version"] = kSchemaVersion;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  nlohmann::json echo = config;
  echo["schema_version"] = kSchemaVersion;
  write_text(dir / "config.echo.json", echo.dump(2) + "\n");
  return {"results.csv", "summary.json", "config.echo.json"};
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::filesystem::create_directories(dir);
  write_text(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

}  // namespace rmtlab
