#pragma once

// Scenario runner behind the command-line tool. Each scenario is a fixed
// pipeline over the library; parameters come from a flat key/value map whose
// defaults are listed by default_params().

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace tmsqz::cli {

using nlohmann::json;

/// Bad command line or configuration; exit status 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kToolVersion = "1.0.0";

struct ScenarioConfig {
  std::string scenario;
  std::uint64_t seed = 1;
  std::size_t n_frames = 5000;
  std::optional<std::filesystem::path> calibration_path;
  std::filesystem::path output_dir = "out";
  json params = json::object();  // overrides of default_params(scenario)
  unsigned threads = 1;           // does not change any output
};

const std::vector<std::string>& scenario_names();

/// Default parameter map of a scenario. Throws UsageError for unknown names.
json default_params(const std::string& scenario);

/// Reads {"scenario", "seed", "n_frames", "calibration", "output_dir", "params"}.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies "key=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(ScenarioConfig& cfg, const std::string& key_value);

/// Defaults merged with overrides, plus scenario, seed, n_frames and the
/// calibration contents. Throws UsageError on unknown keys or type mismatches.
json effective_config(const ScenarioConfig& cfg);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 invariant check failed
  std::vector<Check> checks;
  std::vector<std::string> files;
  json manifest;
};

/// Runs a scenario and writes its artifacts plus manifest.json into
/// cfg.output_dir. Throws UsageError for configuration problems and other
/// exceptions for runtime failures (infeasible program, I/O).
RunResult run(const ScenarioConfig& cfg);

json error_json(const std::string& kind, const std::string& message);

}  // namespace tmsqz::cli
