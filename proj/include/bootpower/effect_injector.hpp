#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bootpower/data_model.hpp"
#include "bootpower/rng.hpp"

namespace bootpower {

// Adds delta to every value. When `new_group` is given the records are
// relabelled (B -> C); otherwise labels are kept.
std::vector<ContinuousRecord> shift_continuous(
    std::span<const ContinuousRecord> values, double delta,
    const std::optional<std::string>& new_group = std::nullopt);

// Intervention probability implied by multiplying the odds of p_base by theta.
double inflated_probability(double p_base, double theta);

// Multiplies the within-cluster odds of the outcome by theta.
//   reset:    every outcome redrawn as Bernoulli(p_I)
//   additive: ones kept, each zero flips with probability (p_I - p_B) / (1 - p_B)
// A cluster with p_B = 0 is returned unchanged and, if `warning` is given, a
// message is stored there. Additive with p_B = 1 throws std::domain_error.
std::vector<BinaryRecord> inflate_odds_binary(std::span<const BinaryRecord> cluster, double theta,
                                              OddsVariant variant, Stream& rng,
                                              std::string* warning = nullptr);

// Converts a fraction of the event records into censorings. Selected subjects
// get event = 0 and, under discharge substitution, time = discharge time.
std::vector<SurvivalRecord> remove_events_survival(std::span<const SurvivalRecord> subjects,
                                                   double fraction, RemovalMode mode,
                                                   RemovalSelection selection, Stream& rng);

}  // namespace bootpower
