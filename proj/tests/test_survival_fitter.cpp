#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bootpower/randomizer.hpp"
#include "bootpower/survival_fitter.hpp"
#include "bootpower/trial_simulator.hpp"

using namespace bootpower;

namespace {

CoxData single_covariate(const std::vector<double>& time, const std::vector<int>& event,
                         const std::vector<double>& x) {
  CoxData d;
  d.time = time;
  d.event = event;
  d.x.resize(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) d.x(static_cast<Eigen::Index>(i), 0) = x[i];
  d.column_names = {"x"};
  return d;
}

CoxModelSpec plain() {
  CoxModelSpec s;
  s.include_arm = false;
  s.include_period = false;
  s.include_interaction = false;
  s.frailty = FrailtyMode::none;
  return s;
}

// Explicit Breslow log partial likelihood for one covariate, written from the
// textbook definition: every subject with time >= t_i is at risk at t_i.
double explicit_log_pl(const CoxData& d, double beta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.event[i] != 1) continue;
    double risk = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d.time[j] >= d.time[i]) risk += std::exp(beta * d.x(static_cast<Eigen::Index>(j), 0));
    }
    ll += beta * d.x(static_cast<Eigen::Index>(i), 0) - std::log(risk);
  }
  return ll;
}

// Exponential survival with hazard exp(beta * x), uniform censoring.
CoxData exponential_sample(std::size_t n, double beta, std::uint64_t seed, int clusters = 0) {
  Stream rng(seed);
  std::vector<double> time;
  std::vector<int> event;
  std::vector<double> x;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double t = rng.exponential(std::exp(-beta * xi));
    const double c = 3.0 * rng.uniform_open();
    time.push_back(std::min(t, c));
    event.push_back(t <= c ? 1 : 0);
    x.push_back(xi);
  }
  auto d = single_covariate(time, event, x);
  if (clusters > 0) {
    for (int c = 0; c < clusters; ++c) d.cluster_ids.push_back("k" + std::to_string(c));
    for (std::size_t i = 0; i < n; ++i) d.cluster.push_back(static_cast<int>(i % clusters));
  }
  return d;
}

struct Trial {
  SurvivalDataset baseline;
  SurvivalDataset intervention;
  ArmAssignment arms;
};

Trial small_trial(std::uint64_t seed, int clusters = 8) {
  SimParams p;
  p.n_clusters = clusters;
  Trial t;
  t.baseline = simulate(p, seed);
  t.intervention = simulate(p, seed + 1000);
  t.intervention.period = Period::intervention;
  std::vector<std::string> ids;
  for (const auto& c : t.baseline.clusters) ids.push_back(c.cluster_id);
  Stream rng(seed);
  t.arms = randomize_simple(ids, rng);
  return t;
}

}  // namespace

TEST_CASE("grid-search maximizer on 20 subjects") {
  Stream rng(31);
  std::vector<double> time;
  std::vector<int> event;
  std::vector<double> x;
  for (int i = 0; i < 20; ++i) {
    const double xi = i % 2;
    x.push_back(xi);
    time.push_back(rng.exponential(std::exp(-0.8 * xi)) + 1e-6 * i);  // no ties
    event.push_back(i % 5 == 4 ? 0 : 1);
  }
  const auto d = single_covariate(time, event, x);

  double best_beta = -5.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 100000; ++k) {
    const double beta = -5.0 + 1e-4 * k;
    const double ll = explicit_log_pl(d, beta);
    if (ll > best) {
      best = ll;
      best_beta = beta;
    }
  }
  REQUIRE(best_beta > -5.0);
  REQUIRE(best_beta < 5.0);

  const auto fit = fit_cox(d, plain());
  CHECK(fit.converged);
  CHECK(std::fabs(fit.coefficients[0] - best_beta) <= 1e-4);
  CHECK(fit.log_partial_likelihood == doctest::Approx(explicit_log_pl(d, fit.coefficients[0])).epsilon(1e-10));
}

TEST_CASE("objective matches the explicit likelihood with ties") {
  const auto d = single_covariate({1, 1, 2, 2, 2, 3, 4, 4}, {1, 0, 1, 1, 0, 1, 0, 1},
                                  {0, 1, 1, 0, 1, 0, 1, 1});
  CoxObjective obj(d, false);
  for (double beta : {-1.3, 0.0, 0.4, 2.2}) {
    Eigen::VectorXd theta(1);
    theta << beta;
    CHECK(obj.evaluate(theta, 0.0).log_likelihood == doctest::Approx(explicit_log_pl(d, beta)).epsilon(1e-12));
  }
}

TEST_CASE("analytic score and information match finite differences") {
  const auto d = exponential_sample(50, 0.5, 17, 5);
  // add a second covariate so the fixed block is 2 x 2
  CoxData two = d;
  two.x.conservativeResize(Eigen::NoChange, 2);
  Stream extra(18);
  for (Eigen::Index i = 0; i < two.x.rows(); ++i) two.x(i, 1) = extra.normal();
  two.column_names.push_back("z");

  CoxObjective obj(two, true);
  const double sigma2 = 0.3;
  const double h = 1e-6;
  Stream rng(19);
  for (int point = 0; point < 10; ++point) {
    Eigen::VectorXd theta(obj.n_params());
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = rng.normal() * 0.5;
    const auto ev = obj.evaluate(theta, sigma2);

    Eigen::VectorXd fd(theta.size());
    Eigen::MatrixXd fd_info(theta.size(), theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Eigen::VectorXd up = theta;
      Eigen::VectorXd down = theta;
      up[k] += h;
      down[k] -= h;
      const auto eu = obj.evaluate(up, sigma2);
      const auto ed = obj.evaluate(down, sigma2);
      fd[k] = (eu.penalized - ed.penalized) / (2 * h);
      fd_info.col(k) = -(eu.gradient - ed.gradient) / (2 * h);
    }
    const double rel = (fd - ev.gradient).norm() / std::max(1.0, ev.gradient.norm());
    CHECK(rel < 1e-6);
    const double rel_info = (fd_info - ev.information).norm() / ev.information.norm();
    CHECK(rel_info < 1e-6);
  }
}

TEST_CASE("two-subject monotone likelihood is flagged") {
  const auto d = single_covariate({1.0, 2.0}, {1, 1}, {1.0, 0.0});
  const auto fit = fit_cox(d, plain());
  CHECK_FALSE(fit.converged);
  CHECK(fit.monotone_likelihood);
  CHECK_FALSE(fit.detail.empty());
  CHECK(fit.coefficients[0] > 0.0);
}

TEST_CASE("empty design gives the null model") {
  CoxData d;
  d.time = {3.0, 1.0, 2.0, 5.0};
  d.event = {1, 1, 0, 1};
  d.x.resize(4, 0);
  const auto fit = fit_cox(d, plain());
  CHECK(fit.converged);
  CHECK(fit.coefficients.size() == 0);
  // risk sets of sizes 4 (t=1), 2 (t=3), 1 (t=5)
  CHECK(fit.log_partial_likelihood == doctest::Approx(-std::log(4.0) - std::log(2.0)));
}

TEST_CASE("fit errors") {
  SUBCASE("no events") {
    const auto d = single_covariate({1, 2, 3}, {0, 0, 0}, {0, 1, 0});
    CHECK_THROWS_AS(fit_cox(d, plain()), std::domain_error);
  }
  SUBCASE("rank deficiency names the columns") {
    auto d = exponential_sample(30, 0.0, 3);
    d.x.conservativeResize(Eigen::NoChange, 2);
    d.x.col(1) = 2.0 * d.x.col(0);
    d.column_names = {"x", "twice_x"};
    try {
      fit_cox(d, plain());
      FAIL("expected a rank error");
    } catch (const std::domain_error& e) {
      const std::string msg = e.what();
      CHECK((msg.find("twice_x") != std::string::npos || msg.find("x") != std::string::npos));
      CHECK(msg.find("rank") != std::string::npos);
    }
  }
  SUBCASE("constant column") {
    auto d = exponential_sample(30, 0.0, 4);
    d.x.col(0).setOnes();
    CHECK_THROWS_AS(fit_cox(d, plain()), std::domain_error);
  }
}

TEST_CASE("time shift and scale leave the estimate unchanged") {
  const auto d = exponential_sample(200, 0.6, 21);
  const double base = fit_cox(d, plain()).coefficients[0];
  auto shifted = d;
  for (auto& t : shifted.time) t += 17.0;
  auto scaled = d;
  for (auto& t : scaled.time) t *= 0.37;
  CHECK(fit_cox(shifted, plain()).coefficients[0] == doctest::Approx(base).epsilon(1e-10));
  CHECK(fit_cox(scaled, plain()).coefficients[0] == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("large sample recovers log 2") {
  const auto d = exponential_sample(5000, std::log(2.0), 22);
  const auto fit = fit_cox(d, plain());
  CHECK(fit.converged);
  CHECK_FALSE(fit.monotone_likelihood);
  CHECK(std::fabs(fit.coefficients[0] - std::log(2.0)) < 0.1);
  CHECK(fit.variance(0, 0) > 0.0);
}

TEST_CASE("tiny fixed frailty variance reproduces the plain fit") {
  const auto t = small_trial(5);
  CoxModelSpec spec;
  spec.covariates = {"x2", "wardtype"};
  spec.frailty = FrailtyMode::none;
  const auto data = build_cox_data(t.baseline, t.intervention, t.arms, spec);
  const auto plain_fit = fit_cox(data, spec);
  spec.frailty = FrailtyMode::fixed;
  spec.frailty_variance = 1e-8;
  const auto shrunk = fit_cox(data, spec);
  REQUIRE(plain_fit.converged);
  REQUIRE(shrunk.converged);
  CHECK(shrunk.frailties.cwiseAbs().maxCoeff() < 1e-4);
  CHECK((shrunk.coefficients - plain_fit.coefficients).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("profiled frailty settles at its own fixed point") {
  SimParams p;
  p.n_clusters = 12;
  p.frailty_sd = 1.0;
  auto t = small_trial(9, 12);
  t.baseline = simulate(p, 9);
  t.intervention = simulate(p, 99);
  t.intervention.period = Period::intervention;
  CoxModelSpec spec;
  spec.covariates = {"x2"};
  spec.max_outer_iterations = 200;
  const auto data = build_cox_data(t.baseline, t.intervention, t.arms, spec);
  const auto fit = fit_cox(data, spec);
  REQUIRE(fit.converged);
  REQUIRE(fit.frailty_variance_converged);
  CHECK(fit.frailty_variance > 0.0);
  CHECK(fit.frailties.size() == 12);

  // re-evaluate the update rule at the reported solution
  CoxObjective obj(data, true);
  Eigen::VectorXd theta(obj.n_params());
  theta << fit.coefficients, fit.frailties;
  const auto ev = obj.evaluate(theta, fit.frailty_variance);
  const Eigen::MatrixXd inv = ev.information.inverse();
  const double q = 12.0;
  const double rule = (fit.frailties.squaredNorm() + inv.diagonal().tail(12).sum()) / q;
  CHECK(rule == doctest::Approx(fit.frailty_variance).epsilon(1e-4));
  CHECK(ev.gradient.norm() < 1e-4);
}

TEST_CASE("design columns and row layout") {
  const auto t = small_trial(3, 4);
  CoxModelSpec spec;
  spec.covariates = {"x2"};
  const auto d = build_cox_data(t.baseline, t.intervention, t.arms, spec);
  CHECK(d.column_names == std::vector<std::string>{"x2", "arm", "period", kInteractionTerm});
  CHECK(d.size() == t.baseline.subject_count() + t.intervention.subject_count());
  CHECK(d.cluster_ids.size() == 4);
  const auto first_int = static_cast<Eigen::Index>(t.baseline.subject_count());
  CHECK(d.x(0, 2) == 0.0);
  CHECK(d.x(first_int, 2) == 1.0);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) CHECK(d.x(i, 3) == d.x(i, 1) * d.x(i, 2));

  spec.covariates = {"nope"};
  CHECK_THROWS_AS(build_cox_data(t.baseline, t.intervention, t.arms, spec), std::domain_error);
  spec.covariates = {};
  CHECK_THROWS_AS(build_cox_data(t.baseline, t.intervention, ArmAssignment{}, spec),
                  std::domain_error);
}

TEST_CASE("interaction wald test") {
  CoxFit fit;
  fit.names = {"x2", kInteractionTerm};
  fit.coefficients = Eigen::Vector2d(0.3, 0.5);
  fit.variance = Eigen::Matrix2d::Identity() * 0.0625;  // SE 0.25 -> z = 2
  fit.converged = true;
  const auto r = test_interaction(fit, 0.05);
  CHECK(r.p_value == doctest::Approx(0.04550026389635857).epsilon(1e-9));
  CHECK(r.reject);

  fit.coefficients[1] = 0.0;
  CHECK(test_interaction(fit, 0.05).p_value == 1.0);

  fit.converged = false;
  fit.detail = "iteration limit reached";
  const auto failed = test_interaction(fit, 0.05);
  CHECK_FALSE(failed.converged);
  CHECK_FALSE(failed.reject);
  CHECK_FALSE(failed.detail.empty());

  CHECK_THROWS_AS(test_interaction(fit, 0.05, "arm"), std::domain_error);
}

TEST_CASE("frailty mode names") {
  for (auto m : {FrailtyMode::none, FrailtyMode::fixed, FrailtyMode::profiled}) {
    CHECK(parse_frailty(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_frailty("gamma"), std::invalid_argument);
}
