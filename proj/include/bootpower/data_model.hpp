#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bootpower {

enum class Arm { control, intervention };
enum class Period { baseline, intervention };

const char* to_string(Arm arm);
const char* to_string(Period period);

struct ContinuousRecord {
  std::string group;
  double value = 0.0;

  bool operator==(const ContinuousRecord&) const = default;
};

struct BinaryRecord {
  std::string cluster_id;
  int outcome = 0;

  bool operator==(const BinaryRecord&) const = default;
};

// One subject followed until event or censoring. For censored subjects the
// discharge time is either absent or equal to `time`; `exit_time()` gives the
// value to substitute when an event is converted into a censoring.
struct SurvivalRecord {
  std::string cluster_id;
  double time = 0.0;
  int event = 0;
  std::optional<double> discharge_time;
  std::vector<double> covariates;

  double exit_time() const { return discharge_time.value_or(time); }

  bool operator==(const SurvivalRecord&) const = default;
};

template <class Record>
struct ClusterData {
  std::string cluster_id;
  std::vector<Record> subjects;

  bool operator==(const ClusterData&) const = default;
};

using ArmAssignment = std::map<std::string, Arm>;

// Clusters in file order. `covariate_names` labels SurvivalRecord::covariates
// positionally and is empty for the other record kinds.
template <class Record>
struct TrialDataset {
  std::vector<ClusterData<Record>> clusters;
  Period period = Period::baseline;
  std::optional<ArmAssignment> arm_assignment;
  std::vector<std::string> covariate_names;

  std::size_t subject_count() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.subjects.size();
    return n;
  }

  bool operator==(const TrialDataset&) const = default;
};

using BinaryDataset = TrialDataset<BinaryRecord>;
using SurvivalDataset = TrialDataset<SurvivalRecord>;

// Two-condition laboratory data: `reference` is the comparator group (A) and
// `treated` the group whose resamples carry the effect (B, relabelled C).
struct LabData {
  std::string reference_label = "A";
  std::string treated_label = "B";
  std::vector<ContinuousRecord> reference;
  std::vector<ContinuousRecord> treated;

  bool operator==(const LabData&) const = default;
};

using SourceData = std::variant<LabData, BinaryDataset, SurvivalDataset>;

// ---- effects ---------------------------------------------------------------

struct Shift {
  double delta = 0.0;
};

enum class OddsVariant { reset, additive };

struct OddsMultiplier {
  double theta = 1.0;
  OddsVariant variant = OddsVariant::reset;
};

enum class RemovalMode { discharge_substitution, censor_at_event };
enum class RemovalSelection { bernoulli, exact_count };

struct EventRemoval {
  double fraction = 0.0;
  RemovalMode mode = RemovalMode::discharge_substitution;
  RemovalSelection selection = RemovalSelection::bernoulli;
};

using EffectSpec = std::variant<Shift, OddsMultiplier, EventRemoval>;

// Parses `shift:<delta>`, `odds:<theta>[:reset|additive]` and
// `remove-events:<f>[:discharge|censor][:bernoulli|exact]`.
// Throws std::invalid_argument on malformed text or out-of-range values.
EffectSpec parse_effect(const std::string& text);
std::string format_effect(const EffectSpec& effect);

// ---- results ---------------------------------------------------------------

struct AnalysisOutcome {
  double p_value = 1.0;
  bool reject = false;
  double estimate = 0.0;
  double statistic = 0.0;
  bool converged = true;
  std::string detail;

  static AnalysisOutcome from_p(double p, double alpha, double estimate, double statistic);
  static AnalysisOutcome failed(std::string why, double estimate = 0.0);

  bool operator==(const AnalysisOutcome&) const = default;
};

struct PowerEstimate {
  std::int64_t n_reps = 0;
  std::int64_t n_reject = 0;
  std::int64_t n_failed = 0;
  std::int64_t denominator = 0;
  double power = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;

  bool operator==(const PowerEstimate&) const = default;
};

// ---- validation ------------------------------------------------------------

struct Violation {
  std::string cluster_id;
  std::string field;
  std::string message;

  std::string describe() const;
};

std::vector<Violation> validate_dataset(const SurvivalDataset& d);
std::vector<Violation> validate_dataset(const BinaryDataset& d);
std::vector<Violation> validate_dataset(const LabData& d);
std::vector<Violation> validate_source(const SourceData& d);

}  // namespace bootpower
