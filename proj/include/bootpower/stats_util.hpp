#pragma once

#include <cstdint>

namespace bootpower {

struct ExactInterval {
  double low = 0.0;
  double high = 1.0;
  double level = 0.95;
};

// 1 + (m - 1) * rho. Accepts non-integer mean cluster size m.
// Throws std::domain_error when m < 1 or rho is outside [0, 1].
double design_effect(double m, double rho);

// n_total / design_effect(m, rho).
double effective_sample_size(double n_total, double m, double rho);

// Two-sided Clopper-Pearson interval, obtained by solving the binomial tail
// equations through the regularized incomplete beta function.
ExactInterval clopper_pearson(std::int64_t successes, std::int64_t trials, double level = 0.95);

// Asymptotic (Wald) interval, p +/- z * sqrt(p (1 - p) / n), clipped to [0, 1].
// Only for cross-checking against software that prints both.
ExactInterval wald_binomial_interval(std::int64_t successes, std::int64_t trials,
                                     double level = 0.95);

// Upper tail of the chi-square distribution with one degree of freedom.
double chisq1_upper(double x);

// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

// Standard normal upper tail.
double normal_upper(double z);

}  // namespace bootpower
