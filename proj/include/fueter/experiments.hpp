#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace fueter {

inline constexpr const char* kReportSchema = "fueterlab.report/1";

/// Flat `key = value` text with `[section]` headers; keys are stored as "section.key".
/// `#` starts a comment. Repeated keys are an input error.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  /// Positive number; InputError otherwise.
  double positive(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("experiment.seed", 1)); }
  const std::map<std::string, std::string>& values() const { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

/// One pass/fail assertion of an experiment. `criterion` ties it to an acceptance line (0: none).
struct Check {
  std::string name;
  int criterion = 0;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<", "<=", ">=", "==", "in", or a short note
  bool expected_failure = false;
};

struct ExperimentOutput {
  std::string experiment;
  nlohmann::json results = nlohmann::json::object();
  std::vector<Check> checks;
  std::map<std::string, std::string> files;  // extra output files by name (CSV)
  double seconds = 0.0;

  bool passed() const;
  /// The report: schema version, experiment, config echo, checks and results. Deterministic.
  nlohmann::json report(const Config& config) const;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::function<ExperimentOutput(const Config&)> run;
};

/// Registered experiments, sorted by name.
const std::vector<ExperimentInfo>& experiment_registry();
std::string experiment_names();

/// Runs `experiment.name` from the config. Unknown names raise InputError listing the valid ones.
ExperimentOutput run_experiment(const Config& config);

/// Writes report.json, meta.json (timing) and the extra files into `dir`.
void write_outputs(const ExperimentOutput& out, const Config& config, const std::filesystem::path& dir);

/// Output directory: `experiment.output`, relative paths resolved against the working directory.
std::filesystem::path output_directory(const Config& config);

/// Runs a config file and writes its outputs. Exit code 0 (all checks pass), 1 (a check failed), 2 (input error).
int run_config_file(const std::filesystem::path& path, std::ostream& out, std::ostream& err,
                    const std::filesystem::path& output_override = {});

/// Recomputes the tunable constants on the built-in families and returns them as config text.
std::string calibrate_constants(std::ostream& log);

/// JSON text with sorted keys and a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace fueter
