#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bootpower/data_model.hpp"

namespace bootpower {

enum class FrailtyMode { none, fixed, profiled };

FrailtyMode parse_frailty(const std::string& name);
const char* to_string(FrailtyMode mode);

inline constexpr const char* kInteractionTerm = "arm*period";

struct CoxModelSpec {
  std::vector<std::string> covariates;
  bool include_arm = true;
  bool include_period = true;
  bool include_interaction = true;
  FrailtyMode frailty = FrailtyMode::profiled;
  // Fixed variance in `fixed` mode, starting value in `profiled` mode.
  double frailty_variance = 0.25;
  int max_iterations = 50;
  int max_outer_iterations = 20;
  double tolerance = 1e-9;         // relative change of the penalized log-likelihood
  double outer_tolerance = 1e-6;   // relative change of the frailty variance
  double divergence_bound = 20.0;  // |beta| beyond this flags a monotone likelihood
  int max_step_halvings = 10;
};

// Column-oriented model input: one row per subject.
struct CoxData {
  std::vector<double> time;
  std::vector<int> event;
  Eigen::MatrixXd x;  // n x p fixed-effect design
  std::vector<std::string> column_names;
  std::vector<int> cluster;  // index into cluster_ids
  std::vector<std::string> cluster_ids;

  std::size_t size() const { return time.size(); }
};

// Stacks both periods (baseline rows first) and adds arm / period /
// arm*period indicator columns as requested. Throws std::domain_error when a
// named covariate is absent or a cluster has no arm.
CoxData build_cox_data(const SurvivalDataset& baseline, const SurvivalDataset& intervention,
                       const ArmAssignment& arms, const CoxModelSpec& spec);

struct CoxFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd variance;   // fixed-effect block of the inverse (penalized) information
  Eigen::VectorXd frailties;  // per-cluster random effects; empty without frailty
  double frailty_variance = 0.0;
  double log_partial_likelihood = 0.0;  // unpenalized, at the solution
  double penalized_log_likelihood = 0.0;
  bool converged = false;
  bool monotone_likelihood = false;
  bool frailty_variance_converged = true;
  int iterations = 0;
  int outer_iterations = 0;
  std::string detail;

  // Index of a named coefficient or -1.
  int index_of(const std::string& name) const;
};

// Breslow log partial likelihood with an optional Gaussian penalty on
// per-cluster log-hazard intercepts:
//   l(beta, b) = sum_events [eta_i - log sum_{t_j >= t_i} exp(eta_j)] - |b|^2 / (2 sigma^2)
// with eta_i = x_i beta + b_{cluster(i)}. Parameters are stacked as
// theta = (beta, b). Covariates are centred internally; this leaves the
// likelihood unchanged.
class CoxObjective {
 public:
  CoxObjective(const CoxData& data, bool with_frailty);

  struct Evaluation {
    double log_likelihood = 0.0;  // unpenalized
    double penalized = 0.0;
    Eigen::VectorXd gradient;     // of the penalized objective
    Eigen::MatrixXd information;  // minus its Hessian
  };

  int n_fixed() const { return n_fixed_; }
  int n_random() const { return n_random_; }
  int n_params() const { return n_fixed_ + n_random_; }
  std::size_t n_events() const { return n_events_; }

  // With want_derivatives = false only the two likelihood values are filled.
  Evaluation evaluate(const Eigen::VectorXd& theta, double frailty_variance,
                      bool want_derivatives = true) const;

 private:
  int n_fixed_ = 0;
  int n_random_ = 0;
  std::size_t n_events_ = 0;
  // rows sorted by descending time
  Eigen::MatrixXd xt_;  // p x n, centred, column-major so each subject is contiguous
  std::vector<int> event_;
  std::vector<int> cluster_;
  std::vector<std::size_t> group_end_;  // end offsets of tied-time groups
};

// Throws std::domain_error on no events, mismatched input sizes, or a rank
// deficient design (message names the collinear columns). Divergence and
// iteration limits produce a non-converged fit instead of an exception.
CoxFit fit_cox(const CoxData& data, const CoxModelSpec& spec);

// Wald chi-square (1 df) on a single coefficient, arm*period by default.
// A non-converged fit gives a non-converged outcome; an absent coefficient
// throws std::domain_error.
AnalysisOutcome test_interaction(const CoxFit& fit, double alpha,
                                 const std::string& term = kInteractionTerm);

}  // namespace bootpower
