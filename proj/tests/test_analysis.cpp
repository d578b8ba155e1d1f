#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bootpower/analysis.hpp"
#include "bootpower/rng.hpp"
#include "test_helpers.hpp"

using namespace bootpower;
using V = std::vector<double>;

namespace {

// Brute-force rank-sum p-value: enumerate every split of the pooled sample.
double enumerate_rank_sum(const V& a, const V& b) {
  V pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  V ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (double v : pooled) {
      less += v < pooled[i] ? 1.0 : 0.0;
      equal += v == pooled[i] ? 1.0 : 0.0;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  const double expected = a.size() * (n + 1) / 2.0;
  double observed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) observed += ranks[i];
  const double dev = std::fabs(observed - expected);

  std::vector<int> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(a.size()), 1);
  std::sort(pick.begin(), pick.end());
  double hits = 0.0;
  double total = 0.0;
  do {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) w += pick[i] ? ranks[i] : 0.0;
    total += 1.0;
    hits += std::fabs(w - expected) >= dev - 1e-9 ? 1.0 : 0.0;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return hits / total;
}

// Binary dataset from per-cluster (size, ones) with arms attached.
BinaryDataset with_arms(const std::vector<std::pair<int, int>>& spec, const std::vector<Arm>& arms,
                        Period period) {
  auto d = bootpower::testing::binary_clusters(spec);
  d.period = period;
  ArmAssignment a;
  for (std::size_t i = 0; i < arms.size(); ++i) a[d.clusters[i].cluster_id] = arms[i];
  d.arm_assignment = a;
  return d;
}

}  // namespace

TEST_CASE("welch t reference values") {
  const auto same = welch_t_test(V{1, 2, 3}, V{1, 2, 3}, 0.05);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK_FALSE(same.reject);

  const auto shifted = welch_t_test(V{1, 2, 3, 4, 5}, V{2, 3, 4, 5, 6}, 0.05);
  CHECK(shifted.statistic == doctest::Approx(-1.0));
  CHECK(shifted.p_value == doctest::Approx(0.34659350708733416).epsilon(1e-9));
  CHECK(shifted.estimate == doctest::Approx(1.0));

  const auto unequal = welch_t_test(V{3.1, 2.7, 4.4, 5.0, 3.3}, V{4.2, 5.1, 6.3, 4.9, 5.8, 6.1}, 0.05);
  CHECK(unequal.statistic == doctest::Approx(-3.140617969232956).epsilon(1e-9));
  CHECK(unequal.p_value == doctest::Approx(0.014049253026514443).epsilon(1e-8));
  CHECK(unequal.reject);
}

TEST_CASE("welch t degenerate inputs") {
  const auto flat = welch_t_test(V{0, 0, 0}, V{0, 0, 0}, 0.05);
  CHECK_FALSE(flat.converged);
  CHECK_FALSE(flat.reject);
  CHECK_THROWS_AS(welch_t_test(V{1}, V{1, 2}, 0.05), std::domain_error);
  CHECK_THROWS_AS(welch_t_test(V{1, 2}, V{1, 2}, 1.5), std::domain_error);
}

TEST_CASE("welch t is antisymmetric") {
  Stream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    V a;
    V b;
    for (int i = 0; i < 8; ++i) a.push_back(rng.normal());
    for (int i = 0; i < 11; ++i) b.push_back(rng.normal() * 2.0 + 0.5);
    const auto ab = welch_t_test(a, b, 0.05);
    const auto ba = welch_t_test(b, a, 0.05);
    CHECK(ab.estimate == -ba.estimate);
    CHECK(ab.p_value == ba.p_value);
    CHECK((ab.reject == (ab.p_value < 0.05)));
  }
}

TEST_CASE("pooled t on cluster differences") {
  const auto r = pooled_t_test(V{0.1, -0.1, 0.0}, V{0.3, 0.2, 0.4}, 0.05);
  CHECK(r.statistic == doctest::Approx(-3.674234614174767).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.021311641128756727).epsilon(1e-8));
  CHECK(r.estimate == doctest::Approx(0.3));
}

TEST_CASE("rank sum exact values") {
  CHECK(rank_sum_test(V{1, 2, 3}, V{4, 5, 6}, 0.05).p_value == doctest::Approx(0.1));
  CHECK(rank_sum_test(V{1}, V{2}, 0.05).p_value == doctest::Approx(1.0));
  CHECK(rank_sum_test(V{1.5, 2.5, 7, 9}, V{3, 4, 8, 10, 11}, 0.05).p_value ==
        doctest::Approx(0.2857142857142857));
  CHECK(rank_sum_test(V{1, 2, 3}, V{1, 2, 3}, 0.05).p_value == doctest::Approx(1.0));
  CHECK(rank_sum_test(V{4, 4}, V{4, 4, 4}, 0.05).p_value == doctest::Approx(1.0));
  const auto r = rank_sum_test(V{1, 2, 3}, V{4, 5, 6}, 0.05);
  CHECK(r.estimate == doctest::Approx(3.0));
  CHECK_THROWS_AS(rank_sum_test(V{}, V{1}, 0.05), std::domain_error);
}

TEST_CASE("rank sum exact path agrees with enumeration, ties included") {
  Stream rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t na = 1 + rng.below(8);
    const std::size_t nb = 1 + rng.below(9);
    V a;
    V b;
    // small integer values force ties
    for (std::size_t i = 0; i < na; ++i) a.push_back(static_cast<double>(rng.below(6)));
    for (std::size_t i = 0; i < nb; ++i) b.push_back(static_cast<double>(rng.below(6)) + 1.0);
    CHECK(rank_sum_test(a, b, 0.05).p_value == doctest::Approx(enumerate_rank_sum(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("rank sum normal approximation") {
  const V a{1.2, 3.4, 2.2, 5.1, 0.7, 4.4, 2.9, 3.3, 1.8, 6.0, 2.5};
  const V b{4.1, 5.5, 3.9, 7.2, 6.6, 2.9, 5.0, 8.1, 4.8, 3.3, 6.2};
  const auto r = rank_sum_test(a, b, 0.05);
  CHECK(r.p_value == doctest::Approx(0.010395670167826868).epsilon(1e-9));
  CHECK(r.reject);
}

TEST_CASE("rank sum is invariant under monotone transforms") {
  Stream rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t na = 3 + rng.below(15);
    const std::size_t nb = 3 + rng.below(15);
    V a;
    V b;
    for (std::size_t i = 0; i < na; ++i) a.push_back(rng.normal());
    for (std::size_t i = 0; i < nb; ++i) b.push_back(rng.normal() + 0.7);
    V ta;
    V tb;
    for (double v : a) ta.push_back(std::exp(3.0 * v) + 2.0);
    for (double v : b) tb.push_back(std::exp(3.0 * v) + 2.0);
    CHECK(rank_sum_test(a, b, 0.05).p_value == rank_sum_test(ta, tb, 0.05).p_value);
  }
}

TEST_CASE("cluster DiD hand example") {
  // control d = {0.1, -0.1, 0.0}, intervention d = {0.3, 0.2, 0.4}, clusters of 10
  const std::vector<Arm> arms{Arm::control, Arm::control, Arm::control,
                              Arm::intervention, Arm::intervention, Arm::intervention};
  const auto base = with_arms({{10, 3}, {10, 3}, {10, 3}, {10, 3}, {10, 3}, {10, 3}}, arms,
                              Period::baseline);
  const auto inter = with_arms({{10, 4}, {10, 2}, {10, 3}, {10, 6}, {10, 5}, {10, 7}}, arms,
                               Period::intervention);
  const auto r = cluster_did_test(base, inter, 0.05);
  CHECK(r.estimate == doctest::Approx(0.3));
  CHECK(r.statistic == doctest::Approx(-3.674234614174767).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.021311641128756727).epsilon(1e-8));

  // same layout through the survival overload, which averages the event indicator
  SurvivalDataset sb;
  SurvivalDataset si;
  ArmAssignment sa;
  for (std::size_t c = 0; c < 6; ++c) {
    const std::string id = "s" + std::to_string(c);
    sa[id] = arms[c];
    ClusterData<SurvivalRecord> cb{id, {}};
    ClusterData<SurvivalRecord> cint{id, {}};
    for (int j = 0; j < 10; ++j) {
      cb.subjects.push_back(bootpower::testing::subject(id, 1.0 + j, j < 3 ? 1 : 0, 1.0 + j));
      const int event = inter.clusters[c].subjects[static_cast<std::size_t>(j)].outcome;
      cint.subjects.push_back(bootpower::testing::subject(id, 1.0 + j, event, 1.0 + j));
    }
    sb.clusters.push_back(cb);
    si.clusters.push_back(cint);
  }
  si.arm_assignment = sa;
  const auto s = cluster_did_test(sb, si, 0.05);
  CHECK(s.p_value == doctest::Approx(r.p_value));
  CHECK(s.estimate == doctest::Approx(r.estimate));
}

TEST_CASE("cluster DiD is invariant to a period-wide shift") {
  // cluster means shift by a constant when one baseline subject per cluster changes
  // in clusters of equal size; compare against the unshifted analysis
  const std::vector<Arm> arms{Arm::control, Arm::intervention, Arm::control, Arm::intervention,
                              Arm::control, Arm::intervention};
  const auto base = with_arms({{10, 3}, {10, 4}, {10, 2}, {10, 5}, {10, 3}, {10, 1}}, arms,
                              Period::baseline);
  const auto base_up = with_arms({{10, 4}, {10, 5}, {10, 3}, {10, 6}, {10, 4}, {10, 2}}, arms,
                                 Period::baseline);
  const auto inter = with_arms({{10, 4}, {10, 8}, {10, 2}, {10, 7}, {10, 5}, {10, 6}}, arms,
                               Period::intervention);
  const auto a = cluster_did_test(base, inter, 0.05);
  const auto b = cluster_did_test(base_up, inter, 0.05);
  CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
  CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-12));
}

TEST_CASE("cluster DiD degenerate and invalid designs") {
  const std::vector<Arm> four{Arm::control, Arm::control, Arm::intervention, Arm::intervention};
  SUBCASE("no signal") {
    const auto b = with_arms({{5, 1}, {5, 1}, {5, 1}, {5, 1}}, four, Period::baseline);
    const auto r = cluster_did_test(b, b, 0.05);
    CHECK_FALSE(r.converged);
    CHECK(r.estimate == 0.0);
  }
  SUBCASE("forced separation") {
    const auto b = with_arms({{5, 0}, {5, 0}, {5, 0}, {5, 0}}, four, Period::baseline);
    const auto i = with_arms({{5, 0}, {5, 0}, {5, 5}, {5, 5}}, four, Period::intervention);
    const auto r = cluster_did_test(b, i, 0.05);
    CHECK(r.estimate == doctest::Approx(1.0));
    CHECK_FALSE(r.converged);
    CHECK_FALSE(r.reject);
  }
  SUBCASE("one cluster in an arm") {
    const std::vector<Arm> lop{Arm::control, Arm::control, Arm::control, Arm::intervention};
    const auto b = with_arms({{5, 1}, {5, 2}, {5, 1}, {5, 3}}, lop, Period::baseline);
    CHECK_THROWS_AS(cluster_did_test(b, b, 0.05), std::domain_error);
  }
}

TEST_CASE("wald test") {
  CHECK(wald_test(0.0, 1.0, 0.05).p_value == 1.0);
  CHECK(wald_test(std::sqrt(3.8415), 1.0, 0.05).p_value == doctest::Approx(0.0500).epsilon(1e-3));
  CHECK(std::round(wald_test(std::sqrt(3.8415), 1.0, 0.05).p_value * 1e4) / 1e4 == doctest::Approx(0.05));
  CHECK(wald_test(1.96, 1.0, 0.05).p_value == doctest::Approx(0.0499957902964409).epsilon(1e-9));
  CHECK(wald_test(2.0, 1.0, 0.05).reject);
  CHECK_THROWS_AS(wald_test(1.0, 0.0, 0.05), std::domain_error);
  CHECK_THROWS_AS(wald_test(1.0, -2.0, 0.05), std::domain_error);
}

TEST_CASE("analysis names") {
  for (auto k : {AnalysisKind::welch_t, AnalysisKind::rank_sum, AnalysisKind::cluster_did,
                 AnalysisKind::cox_frailty}) {
    CHECK(parse_analysis(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_analysis("glmm"), std::invalid_argument);
}
