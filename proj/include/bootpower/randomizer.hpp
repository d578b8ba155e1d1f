#pragma once

#include <span>
#include <string>
#include <vector>

#include "bootpower/data_model.hpp"
#include "bootpower/rng.hpp"

namespace bootpower {

struct ClusterSummary {
  std::string cluster_id;
  std::size_t size = 0;
  double baseline_rate = 0.0;  // event (or outcome) proportion
};

enum class RandomizerKind { simple, matched_pairs };

RandomizerKind parse_randomizer(const std::string& name);
const char* to_string(RandomizerKind kind);

// Balanced allocation, uniform over all assignments with |diff| <= 1.
ArmAssignment randomize_simple(std::span<const std::string> cluster_ids, Stream& rng);

// Sort by size, cut into strata of 4, sort each stratum by baseline rate,
// pair neighbours, split each pair with a fair coin. An unpaired trailing
// cluster gets its own coin. Ties break on cluster_id.
ArmAssignment randomize_matched_pairs(std::span<const ClusterSummary> summaries, Stream& rng);

// The pairs randomize_matched_pairs would form (plus a trailing singleton as a
// one-element group); exposed for tests.
std::vector<std::vector<std::string>> matched_pair_groups(std::span<const ClusterSummary> summaries);

ClusterSummary summarize_cluster(const ClusterData<SurvivalRecord>& cluster);
ClusterSummary summarize_cluster(const ClusterData<BinaryRecord>& cluster);

template <class Record>
std::vector<ClusterSummary> summarize(const TrialDataset<Record>& d) {
  std::vector<ClusterSummary> out;
  out.reserve(d.clusters.size());
  for (const auto& c : d.clusters) out.push_back(summarize_cluster(c));
  return out;
}

}  // namespace bootpower
