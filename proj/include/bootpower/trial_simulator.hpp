#pragma once

#include <cstdint>

#include "bootpower/data_model.hpp"

namespace bootpower {

// Multi-hospital survival data in the style of the reference SAS demo:
// per-cluster normal frailty on the log mean event time, wards of random size,
// a fair binary covariate x2, exponential event times, a fixed discharge
// offset after the event and x2-dependent censoring.
struct SimParams {
  int n_clusters = 60;
  double frailty_sd = 0.5;
  int n_ward_types = 4;
  double ward_size_base = 33.0;    // ward size = ceil(base + span * U)
  double ward_size_span = 33.0;
  double log_mean_intercept = 1.5;
  double log_mean_x2 = -0.69314718055994530942;  // -log(2)
  double event_probability = 0.1;                 // P(event | x2 = 0)
  double event_probability_x2 = 0.015;            // added when x2 = 1
  double discharge_offset = 2.0;
};

// Throws std::invalid_argument for n_clusters < 2, negative frailty_sd, or
// other out-of-range parameters.
void validate_params(const SimParams& params);

// Covariate columns are "x2" and "wardtype" (1..n_ward_types).
SurvivalDataset simulate(const SimParams& params, std::uint64_t seed);

}  // namespace bootpower
