#include "bootpower/power_engine.hpp"

#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bootpower/effect_injector.hpp"
#include "bootpower/resampler.hpp"
#include "bootpower/rng.hpp"
#include "bootpower/stats_util.hpp"

namespace bootpower {

Design parse_design(const std::string& name) {
  if (name == "lab") return Design::lab;
  if (name == "crt") return Design::crt;
  throw ConfigError("unknown design '" + name + "'");
}

const char* to_string(Design design) { return design == Design::lab ? "lab" : "crt"; }

FailurePolicy parse_failure_policy(const std::string& name) {
  if (name == "count_as_nonreject") return FailurePolicy::count_as_nonreject;
  if (name == "exclude") return FailurePolicy::exclude;
  throw ConfigError("unknown failure policy '" + name + "'");
}

const char* to_string(FailurePolicy policy) {
  return policy == FailurePolicy::count_as_nonreject ? "count_as_nonreject" : "exclude";
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::int64_t index) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(index));
}

void validate_config(const PowerConfig& config, const SourceData& source) {
  if (!(config.baseline_rate > 0.0) || !std::isfinite(config.baseline_rate) ||
      !(config.intervention_rate > 0.0) || !std::isfinite(config.intervention_rate)) {
    throw ConfigError("rates must be finite and > 0");
  }
  if (config.n_reps < 1) throw ConfigError("reps must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (config.workers < 0) throw ConfigError("threads must be >= 0");

  const bool lab_data = std::holds_alternative<LabData>(source);
  if ((config.design == Design::lab) != lab_data) {
    throw ConfigError(std::string("design '") + to_string(config.design) +
                      "' does not match the data (" +
                      (lab_data ? "group,value" : "clustered") + " records)");
  }
  if (lab_data) {
    if (!std::holds_alternative<Shift>(config.effect)) {
      throw ConfigError("lab design needs a shift:<delta> effect");
    }
    if (config.analysis != AnalysisKind::welch_t && config.analysis != AnalysisKind::rank_sum) {
      throw ConfigError("lab design supports the welch_t and rank_sum analyses");
    }
    return;
  }
  if (std::holds_alternative<BinaryDataset>(source)) {
    if (!std::holds_alternative<OddsMultiplier>(config.effect)) {
      throw ConfigError("binary outcomes need an odds:<theta> effect");
    }
    if (config.analysis != AnalysisKind::cluster_did) {
      throw ConfigError("binary outcomes support the cluster_did analysis");
    }
  } else {
    if (!std::holds_alternative<EventRemoval>(config.effect)) {
      throw ConfigError("survival outcomes need a remove-events:<f> effect");
    }
    if (config.analysis != AnalysisKind::cox_frailty &&
        config.analysis != AnalysisKind::cluster_did) {
      throw ConfigError("survival outcomes support the cox_frailty and cluster_did analyses");
    }
    if (config.analysis == AnalysisKind::cox_frailty) {
      const auto& names = std::get<SurvivalDataset>(source).covariate_names;
      for (const auto& cov : config.model.covariates) {
        if (std::find(names.begin(), names.end(), cov) == names.end()) {
          throw ConfigError("model covariate '" + cov + "' is not a data column");
        }
      }
      if (!config.model.include_interaction) {
        throw ConfigError("cox_frailty tests the arm*period term; interaction must be enabled");
      }
    }
  }
  const std::size_t n_clusters = std::visit(
      [](const auto& d) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, LabData>) {
          return 0;
        } else {
          return d.clusters.size();
        }
      },
      source);
  if (n_clusters < 2) throw ConfigError("a cluster-randomized design needs at least 2 clusters");
}

namespace {

template <class Record>
ArmAssignment randomize(const PowerConfig& config, const TrialDataset<Record>& baseline,
                        Stream rng) {
  if (config.randomizer == RandomizerKind::simple) {
    std::vector<std::string> ids;
    ids.reserve(baseline.clusters.size());
    for (const auto& c : baseline.clusters) ids.push_back(c.cluster_id);
    return randomize_simple(ids, rng);
  }
  const auto summaries = summarize(baseline);
  return randomize_matched_pairs(summaries, rng);
}

template <class Record, class Inject>
CrtReplicate<Record> assemble_crt_impl(const PowerConfig& config,
                                       const TrialDataset<Record>& source, std::int64_t index,
                                       Inject inject) {
  const Stream rep(replicate_seed(config.master_seed, index));
  CrtReplicate<Record> out;
  out.baseline =
      bootstrap_within_cluster(source, config.baseline_rate, rep, StreamTag::baseline_bootstrap);
  out.baseline.period = Period::baseline;
  out.arms = randomize(config, out.baseline, rep.derive(StreamTag::randomization));
  out.intervention = bootstrap_within_cluster(source, config.intervention_rate, rep,
                                              StreamTag::intervention_bootstrap);
  out.intervention.period = Period::intervention;
  for (std::size_t c = 0; c < out.intervention.clusters.size(); ++c) {
    auto& cluster = out.intervention.clusters[c];
    if (out.arms.at(cluster.cluster_id) != Arm::intervention) continue;
    Stream sub = rep.derive(StreamTag::effect, c);
    cluster.subjects = inject(cluster.subjects, sub);
  }
  out.baseline.arm_assignment = out.arms;
  out.intervention.arm_assignment = out.arms;
  return out;
}

}  // namespace

CrtReplicate<SurvivalRecord> assemble_crt(const PowerConfig& config, const SurvivalDataset& source,
                                          std::int64_t index) {
  const auto effect = std::get<EventRemoval>(config.effect);
  return assemble_crt_impl(config, source, index,
                           [&](const std::vector<SurvivalRecord>& subjects, Stream& rng) {
                             return remove_events_survival(subjects, effect.fraction, effect.mode,
                                                           effect.selection, rng);
                           });
}

CrtReplicate<BinaryRecord> assemble_crt(const PowerConfig& config, const BinaryDataset& source,
                                        std::int64_t index) {
  const auto effect = std::get<OddsMultiplier>(config.effect);
  return assemble_crt_impl(config, source, index,
                           [&](const std::vector<BinaryRecord>& subjects, Stream& rng) {
                             return inflate_odds_binary(subjects, effect.theta, effect.variant,
                                                        rng);
                           });
}

LabReplicate assemble_lab(const PowerConfig& config, const LabData& source, std::int64_t index) {
  const Stream rep(replicate_seed(config.master_seed, index));
  const double delta = std::get<Shift>(config.effect).delta;
  Stream ref_rng = rep.derive(StreamTag::lab_reference);
  Stream trt_rng = rep.derive(StreamTag::lab_treated);
  const auto ref = bootstrap_simple<ContinuousRecord>(
      source.reference, resampled_size(source.reference.size(), config.baseline_rate), ref_rng);
  const auto trt = bootstrap_simple<ContinuousRecord>(
      source.treated, resampled_size(source.treated.size(), config.intervention_rate), trt_rng);
  const auto shifted = shift_continuous(trt, delta, std::string("C"));

  LabReplicate out;
  out.reference.reserve(ref.size());
  out.treated.reserve(shifted.size());
  for (const auto& r : ref) out.reference.push_back(r.value);
  for (const auto& r : shifted) out.treated.push_back(r.value);
  return out;
}

namespace {

AnalysisOutcome analyze(const PowerConfig& config, const LabData& source, std::int64_t index) {
  const auto rep = assemble_lab(config, source, index);
  if (config.analysis == AnalysisKind::rank_sum) {
    return rank_sum_test(rep.reference, rep.treated, config.alpha);
  }
  return welch_t_test(rep.reference, rep.treated, config.alpha);
}

AnalysisOutcome analyze(const PowerConfig& config, const BinaryDataset& source,
                        std::int64_t index) {
  const auto rep = assemble_crt(config, source, index);
  return cluster_did_test(rep.baseline, rep.intervention, config.alpha);
}

AnalysisOutcome analyze(const PowerConfig& config, const SurvivalDataset& source,
                        std::int64_t index) {
  const auto rep = assemble_crt(config, source, index);
  if (config.analysis == AnalysisKind::cluster_did) {
    return cluster_did_test(rep.baseline, rep.intervention, config.alpha);
  }
  const CoxData data = build_cox_data(rep.baseline, rep.intervention, rep.arms, config.model);
  const CoxFit fit = fit_cox(data, config.model);
  return test_interaction(fit, config.alpha);
}

}  // namespace

AnalysisOutcome run_replicate(const PowerConfig& config, const SourceData& source,
                              std::int64_t index) {
  try {
    return std::visit([&](const auto& data) { return analyze(config, data, index); }, source);
  } catch (const std::exception& e) {
    return AnalysisOutcome::failed(e.what());
  }
}

PowerEstimate tally(const PowerConfig& config, std::span<const AnalysisOutcome> outcomes) {
  PowerEstimate est;
  est.n_reps = static_cast<std::int64_t>(outcomes.size());
  est.alpha = config.alpha;
  est.master_seed = config.master_seed;
  for (const auto& o : outcomes) {
    if (!o.converged) {
      ++est.n_failed;
    } else if (o.reject) {
      ++est.n_reject;
    }
  }
  est.denominator = config.failure_policy == FailurePolicy::exclude ? est.n_reps - est.n_failed
                                                                    : est.n_reps;
  if (est.denominator <= 0) {
    throw EstimationError("no valid replicates: all " + std::to_string(est.n_reps) +
                          " replicates failed");
  }
  est.power = static_cast<double>(est.n_reject) / static_cast<double>(est.denominator);
  const auto ci = clopper_pearson(est.n_reject, est.denominator, 0.95);
  est.ci_low = ci.low;
  est.ci_high = ci.high;
  return est;
}

std::vector<AnalysisOutcome> run_replicates(const PowerConfig& config, const SourceData& source) {
  validate_config(config, source);
  std::vector<AnalysisOutcome> outcomes(static_cast<std::size_t>(config.n_reps));
  const auto n = static_cast<long long>(config.n_reps);
#ifdef _OPENMP
  const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (long long i = 0; i < n; ++i) {
    outcomes[static_cast<std::size_t>(i)] = run_replicate(config, source, i);
  }
  return outcomes;
}

PowerEstimate estimate_power(const PowerConfig& config, const SourceData& source) {
  return tally(config, run_replicates(config, source));
}

PowerEstimate estimate_power_serial(const PowerConfig& config, const SourceData& source) {
  validate_config(config, source);
  std::vector<AnalysisOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(config.n_reps));
  for (std::int64_t i = 0; i < config.n_reps; ++i) {
    outcomes.push_back(run_replicate(config, source, i));
  }
  return tally(config, outcomes);
}

}  // namespace bootpower
