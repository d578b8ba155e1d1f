#include "bootpower/randomizer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bootpower {

RandomizerKind parse_randomizer(const std::string& name) {
  if (name == "simple") return RandomizerKind::simple;
  if (name == "matched_pairs") return RandomizerKind::matched_pairs;
  throw std::invalid_argument("unknown randomizer '" + name + "'");
}

const char* to_string(RandomizerKind kind) {
  return kind == RandomizerKind::simple ? "simple" : "matched_pairs";
}

ArmAssignment randomize_simple(std::span<const std::string> cluster_ids, Stream& rng) {
  if (cluster_ids.size() < 2) {
    throw std::domain_error("randomize_simple: at least 2 clusters are required");
  }
  std::vector<std::size_t> order(cluster_ids.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  std::size_t n_intervention = order.size() / 2;
  if (order.size() % 2 == 1 && rng.bernoulli(0.5)) ++n_intervention;

  ArmAssignment arms;
  for (std::size_t i = 0; i < order.size(); ++i) {
    arms[cluster_ids[order[i]]] = i < n_intervention ? Arm::intervention : Arm::control;
  }
  if (arms.size() != cluster_ids.size()) {
    throw std::domain_error("randomize_simple: duplicate cluster ids");
  }
  return arms;
}

std::vector<std::vector<std::string>> matched_pair_groups(
    std::span<const ClusterSummary> summaries) {
  std::vector<const ClusterSummary*> by_size;
  by_size.reserve(summaries.size());
  for (const auto& s : summaries) by_size.push_back(&s);
  std::sort(by_size.begin(), by_size.end(), [](const auto* a, const auto* b) {
    if (a->size != b->size) return a->size < b->size;
    return a->cluster_id < b->cluster_id;
  });

  std::vector<std::vector<std::string>> groups;
  for (std::size_t start = 0; start < by_size.size(); start += 4) {
    const std::size_t stop = std::min(start + 4, by_size.size());
    std::vector<const ClusterSummary*> stratum(by_size.begin() + start, by_size.begin() + stop);
    std::sort(stratum.begin(), stratum.end(), [](const auto* a, const auto* b) {
      if (a->baseline_rate != b->baseline_rate) return a->baseline_rate < b->baseline_rate;
      return a->cluster_id < b->cluster_id;
    });
    for (std::size_t i = 0; i < stratum.size(); i += 2) {
      if (i + 1 < stratum.size()) {
        groups.push_back({stratum[i]->cluster_id, stratum[i + 1]->cluster_id});
      } else {
        groups.push_back({stratum[i]->cluster_id});
      }
    }
  }
  return groups;
}

ArmAssignment randomize_matched_pairs(std::span<const ClusterSummary> summaries, Stream& rng) {
  if (summaries.size() < 2) {
    throw std::domain_error("randomize_matched_pairs: at least 2 clusters are required");
  }
  ArmAssignment arms;
  for (const auto& group : matched_pair_groups(summaries)) {
    const Arm first = rng.bernoulli(0.5) ? Arm::intervention : Arm::control;
    arms[group[0]] = first;
    if (group.size() == 2) {
      arms[group[1]] = first == Arm::intervention ? Arm::control : Arm::intervention;
    }
  }
  if (arms.size() != summaries.size()) {
    throw std::domain_error("randomize_matched_pairs: duplicate cluster ids");
  }
  return arms;
}

ClusterSummary summarize_cluster(const ClusterData<SurvivalRecord>& cluster) {
  std::size_t events = 0;
  for (const auto& r : cluster.subjects) events += r.event == 1 ? 1 : 0;
  const auto n = cluster.subjects.size();
  return {cluster.cluster_id, n, n == 0 ? 0.0 : static_cast<double>(events) / n};
}

ClusterSummary summarize_cluster(const ClusterData<BinaryRecord>& cluster) {
  std::size_t positives = 0;
  for (const auto& r : cluster.subjects) positives += r.outcome == 1 ? 1 : 0;
  const auto n = cluster.subjects.size();
  return {cluster.cluster_id, n, n == 0 ? 0.0 : static_cast<double>(positives) / n};
}

}  // namespace bootpower
