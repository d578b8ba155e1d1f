#include "bootpower/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bootpower/stats_util.hpp"

namespace bootpower {

AnalysisKind parse_analysis(const std::string& name) {
  if (name == "welch_t") return AnalysisKind::welch_t;
  if (name == "rank_sum") return AnalysisKind::rank_sum;
  if (name == "cluster_did") return AnalysisKind::cluster_did;
  if (name == "cox_frailty") return AnalysisKind::cox_frailty;
  throw std::invalid_argument("unknown analysis '" + name + "'");
}

const char* to_string(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::welch_t: return "welch_t";
    case AnalysisKind::rank_sum: return "rank_sum";
    case AnalysisKind::cluster_did: return "cluster_did";
    case AnalysisKind::cox_frailty: return "cox_frailty";
  }
  return "?";
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
  double n = 0.0;
};

Moments moments(std::span<const double> x) {
  Moments m;
  m.n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / m.n;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.var = x.size() > 1 ? ss / (m.n - 1.0) : 0.0;
  return m;
}

}  // namespace

AnalysisOutcome welch_t_test(std::span<const double> group_a, std::span<const double> group_b,
                             double alpha) {
  check_alpha(alpha);
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw std::domain_error("welch_t_test: each group needs at least 2 values");
  }
  const Moments a = moments(group_a);
  const Moments b = moments(group_b);
  const double estimate = b.mean - a.mean;
  const double va = a.var / a.n;
  const double vb = b.var / b.n;
  if (va + vb <= 0.0) {
    return AnalysisOutcome::failed("welch_t_test: zero variance in both groups", estimate);
  }
  const double t = (a.mean - b.mean) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) / (va * va / (a.n - 1.0) + vb * vb / (b.n - 1.0));
  return AnalysisOutcome::from_p(student_t_two_sided(t, df), alpha, estimate, t);
}

AnalysisOutcome pooled_t_test(std::span<const double> group_a, std::span<const double> group_b,
                              double alpha) {
  check_alpha(alpha);
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw std::domain_error("pooled_t_test: each group needs at least 2 values");
  }
  const Moments a = moments(group_a);
  const Moments b = moments(group_b);
  const double estimate = b.mean - a.mean;
  const double df = a.n + b.n - 2.0;
  const double pooled = ((a.n - 1.0) * a.var + (b.n - 1.0) * b.var) / df;
  if (pooled <= 0.0) {
    return AnalysisOutcome::failed("pooled_t_test: zero pooled variance", estimate);
  }
  const double t = (a.mean - b.mean) / std::sqrt(pooled * (1.0 / a.n + 1.0 / b.n));
  return AnalysisOutcome::from_p(student_t_two_sided(t, df), alpha, estimate, t);
}

AnalysisOutcome rank_sum_test(std::span<const double> group_a, std::span<const double> group_b,
                              double alpha) {
  check_alpha(alpha);
  if (group_a.empty() || group_b.empty()) {
    throw std::domain_error("rank_sum_test: both groups must be non-empty");
  }
  const std::size_t na = group_a.size();
  const std::size_t n = na + group_b.size();

  std::vector<std::pair<double, std::size_t>> pooled;  // value, source index
  pooled.reserve(n);
  for (std::size_t i = 0; i < na; ++i) pooled.emplace_back(group_a[i], i);
  for (std::size_t i = 0; i < group_b.size(); ++i) pooled.emplace_back(group_b[i], na + i);
  std::sort(pooled.begin(), pooled.end());

  // doubled midranks are integers
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const long twice_mid = static_cast<long>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank2[pooled[k].second] = twice_mid;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  long w2 = 0;
  for (std::size_t i = 0; i < na; ++i) w2 += rank2[i];
  const long expected2 = static_cast<long>(na * (n + 1));
  const double nb = static_cast<double>(n - na);
  const double mean_rank_a = 0.5 * static_cast<double>(w2) / static_cast<double>(na);
  const double mean_rank_b =
      0.5 * static_cast<double>(static_cast<long>(n * (n + 1)) - w2) / nb;
  const double estimate = mean_rank_b - mean_rank_a;
  const double statistic = 0.5 * static_cast<double>(w2);

  if (n <= kExactRankSumLimit) {
    // counts[k][s]: subsets of size k with doubled-rank sum s
    const long max_sum = static_cast<long>(n * (n + 1));
    std::vector<std::vector<double>> counts(na + 1, std::vector<double>(max_sum + 1, 0.0));
    counts[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const long r = rank2[i];
      for (std::size_t k = std::min(na, i + 1); k >= 1; --k) {
        for (long s = max_sum; s >= r; --s) counts[k][s] += counts[k - 1][s - r];
      }
    }
    const long observed_dev = std::labs(w2 - expected2);
    double extreme = 0.0;
    double total = 0.0;
    for (long s = 0; s <= max_sum; ++s) {
      total += counts[na][s];
      if (std::labs(s - expected2) >= observed_dev) extreme += counts[na][s];
    }
    return AnalysisOutcome::from_p(extreme / total, alpha, estimate, statistic);
  }

  const double nad = static_cast<double>(na);
  const double nd = static_cast<double>(n);
  const double var = nad * nb / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
  if (var <= 0.0) return AnalysisOutcome::from_p(1.0, alpha, estimate, statistic);
  const double dev = std::max(0.0, std::fabs(0.5 * static_cast<double>(w2 - expected2)) - 0.5);
  const double z = dev / std::sqrt(var);
  return AnalysisOutcome::from_p(2.0 * normal_upper(z), alpha, estimate, statistic);
}

namespace {

template <class Record, class Outcome>
AnalysisOutcome cluster_did_impl(const TrialDataset<Record>& baseline,
                                 const TrialDataset<Record>& intervention, double alpha,
                                 Outcome outcome) {
  check_alpha(alpha);
  const auto& arms_opt =
      intervention.arm_assignment ? intervention.arm_assignment : baseline.arm_assignment;
  if (!arms_opt) throw std::domain_error("cluster_did_test: no arm assignment");
  const ArmAssignment& arms = *arms_opt;

  auto cluster_means = [&](const TrialDataset<Record>& d) {
    std::map<std::string, double> means;
    for (const auto& c : d.clusters) {
      if (c.subjects.empty()) {
        throw std::domain_error("cluster_did_test: cluster '" + c.cluster_id + "' is empty");
      }
      double sum = 0.0;
      for (const auto& r : c.subjects) sum += outcome(r);
      means[c.cluster_id] = sum / static_cast<double>(c.subjects.size());
    }
    return means;
  };
  const auto base = cluster_means(baseline);
  const auto inter = cluster_means(intervention);

  std::vector<double> control;
  std::vector<double> treated;
  for (const auto& c : baseline.clusters) {
    const auto it = inter.find(c.cluster_id);
    if (it == inter.end()) {
      throw std::domain_error("cluster_did_test: cluster '" + c.cluster_id +
                              "' missing from the intervention period");
    }
    const auto arm = arms.find(c.cluster_id);
    if (arm == arms.end()) {
      throw std::domain_error("cluster_did_test: cluster '" + c.cluster_id + "' has no arm");
    }
    const double d = it->second - base.at(c.cluster_id);
    (arm->second == Arm::intervention ? treated : control).push_back(d);
  }
  if (inter.size() != base.size()) {
    throw std::domain_error("cluster_did_test: periods do not share the same clusters");
  }
  if (control.size() < 2 || treated.size() < 2) {
    throw std::domain_error("cluster_did_test: each arm needs at least 2 clusters");
  }
  return pooled_t_test(control, treated, alpha);
}

}  // namespace

AnalysisOutcome cluster_did_test(const BinaryDataset& baseline, const BinaryDataset& intervention,
                                 double alpha) {
  return cluster_did_impl(baseline, intervention, alpha,
                          [](const BinaryRecord& r) { return static_cast<double>(r.outcome); });
}

AnalysisOutcome cluster_did_test(const SurvivalDataset& baseline,
                                 const SurvivalDataset& intervention, double alpha) {
  return cluster_did_impl(baseline, intervention, alpha,
                          [](const SurvivalRecord& r) { return static_cast<double>(r.event); });
}

AnalysisOutcome wald_test(double estimate, double variance, double alpha) {
  check_alpha(alpha);
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::domain_error("wald_test: variance must be > 0");
  }
  const double chisq = estimate * estimate / variance;
  return AnalysisOutcome::from_p(chisq1_upper(chisq), alpha, estimate, chisq);
}

}  // namespace bootpower
