#include <doctest.h>

#include <stdexcept>

#include "bootpower/data_model.hpp"
#include "bootpower/trial_simulator.hpp"
#include "test_helpers.hpp"

using namespace bootpower;
using bootpower::testing::subject;

namespace {

SurvivalDataset two_clusters() {
  SurvivalDataset d;
  d.covariate_names = {"x2"};
  d.clusters.push_back({"a", {subject("a", 1.0, 1, 3.0, {0}), subject("a", 2.0, 0, 2.0, {1})}});
  d.clusters.push_back({"b", {subject("b", 0.5, 1, 0.5, {1})}});
  return d;
}

}  // namespace

TEST_CASE("well-formed dataset has no violations") {
  CHECK(validate_dataset(two_clusters()).empty());

  auto with_arms = two_clusters();
  with_arms.arm_assignment = ArmAssignment{{"a", Arm::control}, {"b", Arm::intervention}};
  CHECK(validate_dataset(with_arms).empty());
}

TEST_CASE("discharge before event time is reported against its cluster") {
  auto d = two_clusters();
  d.clusters[1].subjects[0].discharge_time = 0.25;
  const auto v = validate_dataset(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].cluster_id == "b");
  CHECK(v[0].field == "subjects[0].discharge_time");
}

TEST_CASE("duplicate cluster id is one violation") {
  auto d = two_clusters();
  d.clusters[1].cluster_id = "a";
  for (auto& r : d.clusters[1].subjects) r.cluster_id = "a";
  const auto v = validate_dataset(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "cluster_id");
}

TEST_CASE("other invariant breaches") {
  SUBCASE("censored record with a different discharge time") {
    auto d = two_clusters();
    d.clusters[0].subjects[1].discharge_time = 5.0;
    CHECK(validate_dataset(d).size() == 1);
  }
  SUBCASE("non-positive time") {
    auto d = two_clusters();
    d.clusters[0].subjects[1].time = 0.0;
    d.clusters[0].subjects[1].discharge_time = 0.0;
    CHECK(validate_dataset(d).size() == 1);
  }
  SUBCASE("record in the wrong cluster") {
    auto d = two_clusters();
    d.clusters[0].subjects[0].cluster_id = "b";
    CHECK(validate_dataset(d).size() == 1);
  }
  SUBCASE("arm assignment missing a cluster") {
    auto d = two_clusters();
    d.arm_assignment = ArmAssignment{{"a", Arm::control}};
    CHECK(validate_dataset(d).size() == 1);
  }
  SUBCASE("binary outcome outside {0,1}") {
    auto d = bootpower::testing::binary_clusters({{3, 1}});
    d.clusters[0].subjects[2].outcome = 2;
    CHECK(validate_dataset(d).size() == 1);
  }
  SUBCASE("empty cluster") {
    auto d = two_clusters();
    d.clusters[1].subjects.clear();
    CHECK(validate_dataset(d).size() == 1);
  }
}

TEST_CASE("simulated datasets always validate") {
  SimParams small;
  small.n_clusters = 6;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = simulate(small, seed);
    REQUIRE(validate_dataset(d).empty());
  }
}

TEST_CASE("effect strings parse and format") {
  CHECK(std::get<Shift>(parse_effect("shift:5")).delta == 5.0);
  const auto odds = std::get<OddsMultiplier>(parse_effect("odds:2:additive"));
  CHECK(odds.theta == 2.0);
  CHECK(odds.variant == OddsVariant::additive);
  CHECK(std::get<OddsMultiplier>(parse_effect("odds:2")).variant == OddsVariant::reset);

  const auto rm = std::get<EventRemoval>(parse_effect("remove-events:0.2"));
  CHECK(rm.fraction == 0.2);
  CHECK(rm.mode == RemovalMode::discharge_substitution);
  CHECK(rm.selection == RemovalSelection::bernoulli);
  const auto rm2 = std::get<EventRemoval>(parse_effect("remove-events:0.3:censor:exact"));
  CHECK(rm2.mode == RemovalMode::censor_at_event);
  CHECK(rm2.selection == RemovalSelection::exact_count);

  for (const char* text : {"shift:-3.5", "odds:2:additive", "remove-events:0.2:censor:exact"}) {
    CHECK(format_effect(parse_effect(format_effect(parse_effect(text)))) ==
          format_effect(parse_effect(text)));
  }

  CHECK_THROWS_AS(parse_effect("odds:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_effect("remove-events:1.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_effect("remove-events:0.2:sideways"), std::invalid_argument);
  CHECK_THROWS_AS(parse_effect("scale:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_effect("shift:abc"), std::invalid_argument);
}

TEST_CASE("analysis outcome constructors respect the reject rule") {
  const auto ok = AnalysisOutcome::from_p(0.01, 0.05, 1.0, 2.0);
  CHECK(ok.converged);
  CHECK(ok.reject);
  CHECK_FALSE(AnalysisOutcome::from_p(0.05, 0.05, 1.0, 2.0).reject);
  const auto bad = AnalysisOutcome::failed("");
  CHECK_FALSE(bad.converged);
  CHECK_FALSE(bad.reject);
  CHECK_FALSE(bad.detail.empty());
}
