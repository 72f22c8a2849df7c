#pragma once

// Scenario documents (JSON), run manifests and the fisher | posterior |
// sweep | report subcommands. Commands write to caller-supplied streams so
// they can be driven in-process by tests; run() wires them to files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsense/harness.hpp"

namespace qsense::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "QSENSE_OUTPUT_DIR";

/// Malformed or inconsistent scenario document. what() names the line and
/// column (syntax errors) or the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool no_timestamp = false;
};

/// Parses a scenario document; syntax errors carry "line L, column C".
nlohmann::json parse_config_text(const std::string& text);
nlohmann::json load_config(const std::string& path);

/// Applies --seed and checks that a seed is present.
nlohmann::json apply_overrides(nlohmann::json config, const Options& options);

/// Parses an angle given as a number or as "[-][k*]pi[/d]".
double parse_angle(const nlohmann::json& value, const std::string& field);

harness::ScenarioConfig scenario_from_json(const nlohmann::json& config);

/// SHA-256 (hex) of the canonical serialization (sorted keys, compact).
std::string config_digest(const nlohmann::json& config);
std::string canonical_text(const nlohmann::json& config);

struct RunManifest {
  std::string config_digest;
  std::string artifact_version = kArtifactVersion;
  std::uint64_t master_seed = 0;
  std::optional<std::string> timestamp;
  std::vector<std::string> outputs;
};

RunManifest make_manifest(const nlohmann::json& config, const Options& options,
                          std::vector<std::string> outputs);
nlohmann::json to_json(const RunManifest& manifest);
nlohmann::json to_json(const harness::EstimationReport& report, bool include_trials);
nlohmann::json to_json(const information::ResourceLedger& ledger);
nlohmann::json to_json(const harness::Chi2DemoReport& report);
nlohmann::json to_json(const harness::MatchedSqueezedReport& report);

/// Formats with 17 significant digits (lossless for doubles).
std::string format_number(double value);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

void cmd_fisher(const nlohmann::json& config, const Options& options, std::ostream& csv);
void cmd_posterior(const nlohmann::json& config, const Options& options, std::ostream& csv);
/// Writes the table to csv and returns the summary record.
nlohmann::json cmd_sweep(const std::string& kind, const nlohmann::json& config,
                         const Options& options, std::ostream& csv);
nlohmann::json cmd_report(const nlohmann::json& config, const Options& options);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace qsense::cli
