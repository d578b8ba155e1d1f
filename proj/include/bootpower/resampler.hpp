#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bootpower/data_model.hpp"
#include "bootpower/rng.hpp"

namespace bootpower {

// Round half up for non-negative values: 31.5 -> 32.
inline std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

// Output size for a cluster of n subjects at sampling rate `rate`.
// The product is snapped to the nearest 1e-9 first so that, e.g., 4.5 * 7
// computed as 31.499999... still rounds to 32.
inline std::size_t resampled_size(std::size_t n, double rate) {
  const double product = rate * static_cast<double>(n);
  return round_half_up(std::round(product * 1e9) / 1e9);
}

// n_out independent uniform draws with replacement from `values`.
template <class Record>
std::vector<Record> bootstrap_simple(std::span<const Record> values, std::size_t n_out,
                                     Stream& rng) {
  if (values.empty()) throw std::domain_error("bootstrap_simple: empty input");
  std::vector<Record> out;
  out.reserve(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    out.push_back(values[rng.below(values.size())]);
  }
  return out;
}

// Resamples round_half_up(rate * n_C) subjects from each cluster's own
// subjects. Cluster c draws from rng.derive(tag, c), so each cluster's output
// depends only on (stream seed, tag, cluster index).
template <class Record>
TrialDataset<Record> bootstrap_within_cluster(const TrialDataset<Record>& d, double rate,
                                              const Stream& rng, StreamTag tag) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::domain_error("bootstrap_within_cluster: rate must be > 0");
  }
  TrialDataset<Record> out;
  out.period = d.period;
  out.arm_assignment = d.arm_assignment;
  out.covariate_names = d.covariate_names;
  out.clusters.reserve(d.clusters.size());
  for (std::size_t c = 0; c < d.clusters.size(); ++c) {
    const auto& cluster = d.clusters[c];
    if (cluster.subjects.empty()) {
      throw std::domain_error("bootstrap_within_cluster: cluster '" + cluster.cluster_id +
                              "' is empty");
    }
    Stream sub = rng.derive(tag, c);
    out.clusters.push_back(
        {cluster.cluster_id,
         bootstrap_simple(std::span<const Record>(cluster.subjects),
                          resampled_size(cluster.subjects.size(), rate), sub)});
  }
  return out;
}

}  // namespace bootpower
