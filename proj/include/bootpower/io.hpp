#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "bootpower/data_model.hpp"
#include "bootpower/power_engine.hpp"

namespace bootpower::io {

// Unreadable, unwritable or malformed data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV schemas, chosen by the header row:
//   survival:   cluster_id,time,event,discharge_time[,covariate...]
//   binary:     cluster_id,outcome
//   continuous: group,value   (exactly two groups; first seen is the reference)
// Clusters keep first-appearance order. Throws DataError naming source:line.
SourceData read_csv(std::istream& in, const std::string& source_name = "<stream>");
SourceData read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const SurvivalDataset& d);
void write_csv(std::ostream& out, const BinaryDataset& d);
void write_csv(std::ostream& out, const LabData& d);
void write_csv_file(const std::string& path, const SourceData& d);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Values gathered from the config file and command-line flags. Unset fields
// fall back to defaults that depend on the data kind (see resolve()).
struct RunSettings {
  std::optional<std::string> design;
  std::optional<std::string> data_path;
  std::optional<std::string> analysis;
  std::optional<std::string> randomizer;
  std::optional<double> baseline_rate;
  std::optional<double> intervention_rate;
  std::optional<std::vector<std::string>> covariates;
  std::optional<bool> include_arm;
  std::optional<bool> include_period;
  std::optional<bool> include_interaction;
  std::optional<std::string> frailty;
  std::optional<double> frailty_variance;
  std::optional<std::string> effect;
  std::optional<std::int64_t> reps;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> failure_policy;
  std::optional<std::string> scenario;
  std::optional<std::string> report_path;

  // Fields set in `overrides` replace ours.
  void merge(const RunSettings& overrides);
};

// Flat YAML (or JSON) mapping with the keys of RunSettings:
//   design, data, analysis, randomizer, baseline_rate, intervention_rate,
//   covariates, arm, period, interaction, frailty, frailty_variance, effect,
//   reps, alpha, seed, threads, failure_policy, scenario, report
// Throws ConfigError on unknown keys or ill-typed values.
RunSettings parse_config(const std::string& text, const std::string& source_name = "<config>");
RunSettings load_config_file(const std::string& path);

// Builds a PowerConfig for `source`. Throws ConfigError.
PowerConfig resolve(const RunSettings& settings, const SourceData& source);

nlohmann::json to_json(const PowerConfig& config);
nlohmann::json to_json(const PowerEstimate& estimate);

struct RunReport {
  std::string scenario;
  PowerConfig config;
  PowerEstimate estimate;
  double wall_seconds = 0.0;
  std::string engine_version;
  std::string timestamp;
};

nlohmann::json to_json(const RunReport& report);

inline constexpr const char* kEngineVersion = "1.0.0";

}  // namespace bootpower::io
