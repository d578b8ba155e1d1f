#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bootpower/analysis.hpp"
#include "bootpower/data_model.hpp"
#include "bootpower/randomizer.hpp"
#include "bootpower/survival_fitter.hpp"

namespace bootpower {

enum class Design { lab, crt };
enum class FailurePolicy { count_as_nonreject, exclude };

Design parse_design(const std::string& name);
const char* to_string(Design design);
FailurePolicy parse_failure_policy(const std::string& name);
const char* to_string(FailurePolicy policy);

struct PowerConfig {
  Design design = Design::crt;
  EffectSpec effect = EventRemoval{};
  AnalysisKind analysis = AnalysisKind::cox_frailty;
  RandomizerKind randomizer = RandomizerKind::matched_pairs;
  // CRT: per-cluster resampling rates for the two periods.
  // Lab: multipliers on the reference and treated group sizes.
  double baseline_rate = 1.0;
  double intervention_rate = 1.0;
  std::int64_t n_reps = 1000;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  FailurePolicy failure_policy = FailurePolicy::count_as_nonreject;
  CoxModelSpec model;  // used by cox_frailty
  int workers = 0;     // 0: OpenMP default
};

// Configuration problems (bad values, effect/analysis incompatible with the data).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// No valid replicate left to form a denominator.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ConfigError when the configuration cannot run against `source`.
void validate_config(const PowerConfig& config, const SourceData& source);

// Seed of replicate `index`: mix_seed(master_seed, index).
std::uint64_t replicate_seed(std::uint64_t master_seed, std::int64_t index);

template <class Record>
struct CrtReplicate {
  TrialDataset<Record> baseline;
  TrialDataset<Record> intervention;  // effect already applied
  ArmAssignment arms;
};

struct LabReplicate {
  std::vector<double> reference;
  std::vector<double> treated;  // effect already applied
};

// Steps before the analysis, exposed so tests can trace a replicate.
CrtReplicate<SurvivalRecord> assemble_crt(const PowerConfig& config, const SurvivalDataset& source,
                                          std::int64_t index);
CrtReplicate<BinaryRecord> assemble_crt(const PowerConfig& config, const BinaryDataset& source,
                                        std::int64_t index);
LabReplicate assemble_lab(const PowerConfig& config, const LabData& source, std::int64_t index);

// One full replicate. Errors raised inside the pipeline come back as a
// non-converged outcome.
AnalysisOutcome run_replicate(const PowerConfig& config, const SourceData& source,
                              std::int64_t index);

// Aggregates per-replicate outcomes (indexed by replicate) into an estimate.
PowerEstimate tally(const PowerConfig& config, std::span<const AnalysisOutcome> outcomes);

// Replicates 0 .. n_reps-1 on an OpenMP team of config.workers threads.
PowerEstimate estimate_power(const PowerConfig& config, const SourceData& source);

// Single-threaded reference; must agree bit for bit with estimate_power.
PowerEstimate estimate_power_serial(const PowerConfig& config, const SourceData& source);

// Outcomes of every replicate (parallel), for callers that need more than counts.
std::vector<AnalysisOutcome> run_replicates(const PowerConfig& config, const SourceData& source);

}  // namespace bootpower
