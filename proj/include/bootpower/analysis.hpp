#pragma once

#include <span>
#include <string>

#include "bootpower/data_model.hpp"

namespace bootpower {

enum class AnalysisKind { welch_t, rank_sum, cluster_did, cox_frailty };

AnalysisKind parse_analysis(const std::string& name);
const char* to_string(AnalysisKind kind);

// Two-sided Welch t-test. statistic = (mean A - mean B) / se,
// estimate = mean B - mean A. Throws std::domain_error when a group has fewer
// than two values; zero variance in both groups yields a non-converged outcome.
AnalysisOutcome welch_t_test(std::span<const double> group_a, std::span<const double> group_b,
                             double alpha);

// Classic equal-variance two-sample t-test (df = n_a + n_b - 2), same sign
// conventions as welch_t_test.
AnalysisOutcome pooled_t_test(std::span<const double> group_a, std::span<const double> group_b,
                              double alpha);

// Two-sided Wilcoxon rank-sum test with midranks for ties. Exact null
// distribution when n_a + n_b <= 20, otherwise the normal approximation with
// continuity and tie corrections. estimate = mean rank B - mean rank A.
AnalysisOutcome rank_sum_test(std::span<const double> group_a, std::span<const double> group_b,
                              double alpha);

inline constexpr std::size_t kExactRankSumLimit = 20;

// Two-stage cluster-summary difference-in-differences: per-cluster
// (intervention mean - baseline mean), then a pooled t-test of intervention
// arm vs control arm. Arms come from intervention.arm_assignment (or the
// baseline's). Throws std::domain_error if an arm has fewer than two clusters
// or the periods do not share clusters.
AnalysisOutcome cluster_did_test(const BinaryDataset& baseline, const BinaryDataset& intervention,
                                 double alpha);
AnalysisOutcome cluster_did_test(const SurvivalDataset& baseline,
                                 const SurvivalDataset& intervention, double alpha);

// 1-df Wald chi-square test of estimate^2 / variance.
AnalysisOutcome wald_test(double estimate, double variance, double alpha);

}  // namespace bootpower
