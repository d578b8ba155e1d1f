#include "bootpower/effect_injector.hpp"

#include <cmath>
#include <stdexcept>

#include "bootpower/resampler.hpp"

namespace bootpower {

std::vector<ContinuousRecord> shift_continuous(std::span<const ContinuousRecord> values,
                                               double delta,
                                               const std::optional<std::string>& new_group) {
  std::vector<ContinuousRecord> out;
  out.reserve(values.size());
  for (const auto& r : values) out.push_back({new_group.value_or(r.group), r.value + delta});
  return out;
}

double inflated_probability(double p_base, double theta) {
  if (p_base >= 1.0) return 1.0;
  const double odds = theta * p_base / (1.0 - p_base);
  return odds / (1.0 + odds);
}

std::vector<BinaryRecord> inflate_odds_binary(std::span<const BinaryRecord> cluster, double theta,
                                              OddsVariant variant, Stream& rng,
                                              std::string* warning) {
  if (cluster.empty()) throw std::domain_error("inflate_odds_binary: empty cluster");
  if (!(theta > 0.0)) throw std::domain_error("inflate_odds_binary: theta must be > 0");

  std::size_t ones = 0;
  for (const auto& r : cluster) ones += r.outcome == 1 ? 1 : 0;
  const double p_base = static_cast<double>(ones) / static_cast<double>(cluster.size());

  std::vector<BinaryRecord> out(cluster.begin(), cluster.end());
  if (theta == 1.0 && variant == OddsVariant::additive) return out;
  if (ones == 0) {
    if (warning) {
      *warning = "cluster '" + cluster.front().cluster_id +
                 "' has no outcomes; odds are zero for every multiplier";
    }
    return out;
  }
  const double p_int = inflated_probability(p_base, theta);

  if (variant == OddsVariant::reset) {
    for (auto& r : out) r.outcome = rng.bernoulli(p_int) ? 1 : 0;
    return out;
  }

  if (ones == cluster.size()) {
    throw std::domain_error("inflate_odds_binary: cluster '" + cluster.front().cluster_id +
                            "' has every outcome present; additive variant is undefined");
  }
  // n p_D / n (1 - p_B): the cluster sizes cancel.
  const double flip = (p_int - p_base) / (1.0 - p_base);
  if (flip <= 0.0) return out;
  for (auto& r : out) {
    if (r.outcome == 0 && rng.bernoulli(flip)) r.outcome = 1;
  }
  return out;
}

std::vector<SurvivalRecord> remove_events_survival(std::span<const SurvivalRecord> subjects,
                                                   double fraction, RemovalMode mode,
                                                   RemovalSelection selection, Stream& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::domain_error("remove_events_survival: fraction must lie in [0, 1]");
  }
  std::vector<SurvivalRecord> out(subjects.begin(), subjects.end());
  if (fraction == 0.0) return out;

  std::vector<std::size_t> event_idx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].event == 1) event_idx.push_back(i);
  }

  auto censor = [&](SurvivalRecord& r) {
    r.event = 0;
    if (mode == RemovalMode::discharge_substitution) r.time = r.exit_time();
    r.discharge_time = r.time;
  };

  if (selection == RemovalSelection::bernoulli) {
    for (std::size_t i : event_idx) {
      if (rng.bernoulli(fraction)) censor(out[i]);
    }
    return out;
  }

  const std::size_t k =
      std::min(event_idx.size(), round_half_up(fraction * static_cast<double>(event_idx.size())));
  // partial Fisher-Yates: first k positions become a uniform k-subset
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(event_idx.size() - i);
    std::swap(event_idx[i], event_idx[j]);
    censor(out[event_idx[i]]);
  }
  return out;
}

}  // namespace bootpower
