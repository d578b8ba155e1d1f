#include "bootpower/trial_simulator.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bootpower/rng.hpp"

namespace bootpower {

void validate_params(const SimParams& params) {
  if (params.n_clusters < 2) throw std::invalid_argument("simulate: n_clusters must be >= 2");
  if (!(params.frailty_sd >= 0.0)) throw std::invalid_argument("simulate: frailty_sd must be >= 0");
  if (params.n_ward_types < 1) throw std::invalid_argument("simulate: n_ward_types must be >= 1");
  if (!(params.ward_size_base >= 0.0) || !(params.ward_size_span >= 0.0) ||
      params.ward_size_base + params.ward_size_span < 1.0) {
    throw std::invalid_argument("simulate: ward size law must give at least one subject");
  }
  const double p_hi = params.event_probability + params.event_probability_x2;
  if (!(params.event_probability >= 0.0 && params.event_probability <= 1.0) ||
      !(p_hi >= 0.0 && p_hi <= 1.0)) {
    throw std::invalid_argument("simulate: event probabilities must lie in [0, 1]");
  }
  if (!(params.discharge_offset >= 0.0)) {
    throw std::invalid_argument("simulate: discharge_offset must be >= 0");
  }
}

SurvivalDataset simulate(const SimParams& params, std::uint64_t seed) {
  validate_params(params);
  Stream rng(seed);

  SurvivalDataset out;
  out.period = Period::baseline;
  out.covariate_names = {"x2", "wardtype"};
  const int width = params.n_clusters >= 1000 ? 4 : 3;

  for (int h = 1; h <= params.n_clusters; ++h) {
    char id[32];
    std::snprintf(id, sizeof id, "h%0*d", width, h);
    ClusterData<SurvivalRecord> cluster{id, {}};
    const double frailty = rng.normal() * params.frailty_sd;

    for (int ward = 1; ward <= params.n_ward_types; ++ward) {
      const auto ward_size = static_cast<int>(
          std::ceil(params.ward_size_base + params.ward_size_span * rng.uniform_open()));
      for (int j = 0; j < ward_size; ++j) {
        const double x2 = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double mean =
            std::exp(params.log_mean_intercept + params.log_mean_x2 * x2 + frailty);
        const double event_time = rng.exponential(mean);
        const double discharge = event_time + params.discharge_offset;
        const bool had_event =
            rng.uniform() < params.event_probability + params.event_probability_x2 * x2;

        SurvivalRecord r;
        r.cluster_id = cluster.cluster_id;
        r.event = had_event ? 1 : 0;
        r.time = had_event ? event_time : discharge;
        r.discharge_time = discharge;
        r.covariates = {x2, static_cast<double>(ward)};
        cluster.subjects.push_back(std::move(r));
      }
    }
    out.clusters.push_back(std::move(cluster));
  }
  return out;
}

}  // namespace bootpower
