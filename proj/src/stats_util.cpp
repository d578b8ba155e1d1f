#include "bootpower/stats_util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>

namespace bootpower {

double design_effect(double m, double rho) {
  if (!(m >= 1.0) || !std::isfinite(m)) {
    throw std::domain_error("design_effect: mean cluster size must be >= 1");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::domain_error("design_effect: ICC must lie in [0, 1]");
  }
  return 1.0 + (m - 1.0) * rho;
}

double effective_sample_size(double n_total, double m, double rho) {
  if (!(n_total >= 1.0)) {
    throw std::domain_error("effective_sample_size: n_total must be >= 1");
  }
  return n_total / design_effect(m, rho);
}

namespace {

constexpr double kQuantileTolerance = 1e-10;

// Solves I_x(a, b) = target for x in (0, 1). I_x is increasing in x.
double beta_quantile(double a, double b, double target) {
  auto f = [&](double x) { return boost::math::ibeta(a, b, x) - target; };
  auto tol = [](double lo, double hi) { return hi - lo <= kQuantileTolerance; };
  std::uintmax_t max_iter = 500;
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, 1.0, -target, 1.0 - target,
                                                          tol, max_iter);
  return 0.5 * (lo + hi);
}

void check_binomial_args(std::int64_t successes, std::int64_t trials, double level) {
  if (trials < 1) throw std::domain_error("binomial interval: trials must be >= 1");
  if (successes < 0 || successes > trials) {
    throw std::domain_error("binomial interval: successes must lie in [0, trials]");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw std::domain_error("binomial interval: level must lie in (0, 1)");
  }
}

}  // namespace

ExactInterval clopper_pearson(std::int64_t successes, std::int64_t trials, double level) {
  check_binomial_args(successes, trials, level);
  const double tail = 0.5 * (1.0 - level);
  const auto k = static_cast<double>(successes);
  const auto n = static_cast<double>(trials);
  ExactInterval out;
  out.level = level;
  // low: P(X >= k | p) = tail  <=>  I_p(k, n - k + 1) = tail
  out.low = successes == 0 ? 0.0 : beta_quantile(k, n - k + 1.0, tail);
  // high: P(X <= k | p) = tail  <=>  I_p(k + 1, n - k) = 1 - tail
  out.high = successes == trials ? 1.0 : beta_quantile(k + 1.0, n - k, 1.0 - tail);
  return out;
}

ExactInterval wald_binomial_interval(std::int64_t successes, std::int64_t trials, double level) {
  check_binomial_args(successes, trials, level);
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  const double z =
      boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
  const double half = z * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return {std::max(0.0, p - half), std::min(1.0, p + half), level};
}

double chisq1_upper(double x) {
  if (!(x > 0.0)) return 1.0;
  return std::erfc(std::sqrt(0.5 * x));
}

double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t_distribution<double> dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 0.0, 1.0);
}

double normal_upper(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace bootpower
