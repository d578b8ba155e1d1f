#include "bootpower/survival_fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bootpower/analysis.hpp"

namespace bootpower {

FrailtyMode parse_frailty(const std::string& name) {
  if (name == "none") return FrailtyMode::none;
  if (name == "fixed") return FrailtyMode::fixed;
  if (name == "profiled") return FrailtyMode::profiled;
  throw std::invalid_argument("unknown frailty mode '" + name + "'");
}

const char* to_string(FrailtyMode mode) {
  switch (mode) {
    case FrailtyMode::none: return "none";
    case FrailtyMode::fixed: return "fixed";
    case FrailtyMode::profiled: return "profiled";
  }
  return "?";
}

int CoxFit::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

CoxData build_cox_data(const SurvivalDataset& baseline, const SurvivalDataset& intervention,
                       const ArmAssignment& arms, const CoxModelSpec& spec) {
  std::vector<std::size_t> cov_index;
  for (const auto& name : spec.covariates) {
    const auto& names = baseline.covariate_names;
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::domain_error("cox model: unknown covariate '" + name + "'");
    if (intervention.covariate_names != names) {
      throw std::domain_error("cox model: periods have different covariate columns");
    }
    cov_index.push_back(static_cast<std::size_t>(it - names.begin()));
  }

  CoxData out;
  out.column_names = spec.covariates;
  if (spec.include_arm) out.column_names.emplace_back("arm");
  if (spec.include_period) out.column_names.emplace_back("period");
  if (spec.include_interaction) out.column_names.emplace_back(kInteractionTerm);

  std::map<std::string, int> cluster_index;
  for (const auto* d : {&baseline, &intervention}) {
    for (const auto& c : d->clusters) {
      if (cluster_index.emplace(c.cluster_id, static_cast<int>(out.cluster_ids.size())).second) {
        out.cluster_ids.push_back(c.cluster_id);
      }
    }
  }

  const std::size_t n = baseline.subject_count() + intervention.subject_count();
  const auto p = static_cast<Eigen::Index>(out.column_names.size());
  out.time.reserve(n);
  out.event.reserve(n);
  out.cluster.reserve(n);
  out.x.resize(static_cast<Eigen::Index>(n), p);

  Eigen::Index row = 0;
  for (const auto* d : {&baseline, &intervention}) {
    const double period = d == &baseline ? 0.0 : 1.0;
    for (const auto& c : d->clusters) {
      const auto arm_it = arms.find(c.cluster_id);
      if (arm_it == arms.end()) {
        throw std::domain_error("cox model: cluster '" + c.cluster_id + "' has no arm");
      }
      const double arm = arm_it->second == Arm::intervention ? 1.0 : 0.0;
      const int ci = cluster_index.at(c.cluster_id);
      for (const auto& r : c.subjects) {
        out.time.push_back(r.time);
        out.event.push_back(r.event);
        out.cluster.push_back(ci);
        Eigen::Index col = 0;
        for (std::size_t k : cov_index) out.x(row, col++) = r.covariates.at(k);
        if (spec.include_arm) out.x(row, col++) = arm;
        if (spec.include_period) out.x(row, col++) = period;
        if (spec.include_interaction) out.x(row, col++) = arm * period;
        ++row;
      }
    }
  }
  return out;
}

// ---- objective -------------------------------------------------------------

CoxObjective::CoxObjective(const CoxData& data, bool with_frailty) {
  const std::size_t n = data.size();
  if (data.event.size() != n || static_cast<std::size_t>(data.x.rows()) != n ||
      (with_frailty && data.cluster.size() != n)) {
    throw std::domain_error("cox model: input columns have different lengths");
  }
  n_fixed_ = static_cast<int>(data.x.cols());
  n_random_ = with_frailty ? static_cast<int>(data.cluster_ids.size()) : 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data.time[a] != data.time[b]) return data.time[a] > data.time[b];
    return data.event[a] > data.event[b];
  });

  const Eigen::RowVectorXd centre =
      n > 0 ? Eigen::RowVectorXd(data.x.colwise().mean()) : Eigen::RowVectorXd::Zero(n_fixed_);
  xt_.resize(n_fixed_, static_cast<Eigen::Index>(n));
  event_.resize(n);
  cluster_.resize(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    xt_.col(static_cast<Eigen::Index>(i)) =
        (data.x.row(static_cast<Eigen::Index>(src)) - centre).transpose();
    event_[i] = data.event[src];
    if (with_frailty) {
      const int c = data.cluster[src];
      if (c < 0 || c >= n_random_) throw std::domain_error("cox model: cluster index out of range");
      cluster_[i] = c;
    }
    n_events_ += event_[i] == 1 ? 1 : 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 == n || data.time[order[i + 1]] != data.time[order[i]]) group_end_.push_back(i + 1);
  }
}

CoxObjective::Evaluation CoxObjective::evaluate(const Eigen::VectorXd& theta,
                                                double frailty_variance,
                                                bool want_derivatives) const {
  const int p = n_fixed_;
  const int q = n_random_;
  const int P = p + q;
  if (theta.size() != P) throw std::domain_error("cox objective: parameter length mismatch");
  const auto n = static_cast<Eigen::Index>(event_.size());
  const auto beta = theta.head(p);
  const auto b = theta.tail(q);

  Eigen::VectorXd eta = xt_.transpose() * beta;
  if (q > 0) {
    for (Eigen::Index i = 0; i < n; ++i) eta[i] += b[cluster_[static_cast<std::size_t>(i)]];
  }
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;

  Evaluation ev;
  double s0 = 0.0;
  Eigen::VectorXd s1x = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2xx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd s1b = Eigen::VectorXd::Zero(q);
  Eigen::MatrixXd s2xb = Eigen::MatrixXd::Zero(p, q);
  if (want_derivatives) {
    ev.gradient = Eigen::VectorXd::Zero(P);
    ev.information = Eigen::MatrixXd::Zero(P, P);
  }
  Eigen::VectorXd mean_z(P);
  Eigen::VectorXd diag_bb = Eigen::VectorXd::Zero(q);

  double ll = 0.0;
  std::size_t start = 0;
  for (std::size_t end : group_end_) {
    int deaths = 0;
    for (std::size_t i = start; i < end; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double w = std::exp(eta[ii] - shift);
      s0 += w;
      if (want_derivatives) {
        const auto xi = xt_.col(ii);
        s1x.noalias() += w * xi;
        s2xx.selfadjointView<Eigen::Upper>().rankUpdate(xi, w);
        if (q > 0) {
          const int c = cluster_[i];
          s1b[c] += w;
          s2xb.col(c).noalias() += w * xi;
        }
      }
      if (event_[i] == 1) {
        ++deaths;
        ll += eta[ii];
        if (want_derivatives) {
          ev.gradient.head(p) += xt_.col(ii);
          if (q > 0) ev.gradient[p + cluster_[i]] += 1.0;
        }
      }
    }
    start = end;
    if (deaths == 0) continue;
    const double d = deaths;
    ll -= d * (std::log(s0) + shift);
    if (!want_derivatives) continue;

    mean_z.head(p) = s1x / s0;
    mean_z.tail(q) = s1b / s0;
    ev.gradient.noalias() -= d * mean_z;
    const double scale = d / s0;
    ev.information.topLeftCorner(p, p).triangularView<Eigen::Upper>() += scale * s2xx;
    if (q > 0) {
      ev.information.topRightCorner(p, q).noalias() += scale * s2xb;
      diag_bb.noalias() += scale * s1b;
    }
    ev.information.selfadjointView<Eigen::Upper>().rankUpdate(mean_z, -d);
  }

  ev.log_likelihood = ll;
  double penalty = 0.0;
  if (q > 0) {
    if (!(frailty_variance > 0.0)) throw std::domain_error("cox objective: frailty variance <= 0");
    penalty = b.squaredNorm() / (2.0 * frailty_variance);
  }
  ev.penalized = ll - penalty;
  if (want_derivatives) {
    if (q > 0) {
      ev.gradient.tail(q) -= b / frailty_variance;
      ev.information.diagonal().tail(q) += diag_bb;
      ev.information.diagonal().tail(q).array() += 1.0 / frailty_variance;
    }
    Eigen::MatrixXd full = ev.information.selfadjointView<Eigen::Upper>();
    ev.information.swap(full);
  }
  return ev;
}

// ---- fitting ---------------------------------------------------------------

namespace {

void check_rank(const CoxData& data) {
  const Eigen::Index p = data.x.cols();
  if (p == 0) return;
  const Eigen::MatrixXd centred = data.x.rowwise() - data.x.colwise().mean();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centred);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank == p) return;
  std::ostringstream msg;
  msg << "cox model: design is rank deficient (rank " << rank << " of " << p
      << "); collinear or constant columns:";
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = rank; k < p; ++k) {
    const auto col = static_cast<std::size_t>(perm[k]);
    msg << ' ' << (col < data.column_names.size() ? data.column_names[col] : std::to_string(col));
  }
  throw std::domain_error(msg.str());
}

struct NewtonResult {
  bool converged = false;
  bool monotone = false;
  int iterations = 0;
  std::string detail;
};

NewtonResult newton_solve(const CoxObjective& objective, const CoxModelSpec& spec,
                          double frailty_variance, Eigen::VectorXd& theta,
                          CoxObjective::Evaluation& ev) {
  NewtonResult result;
  const int p = objective.n_fixed();
  ev = objective.evaluate(theta, frailty_variance);
  if (theta.size() == 0) {
    result.converged = true;
    return result;
  }
  for (int it = 1; it <= spec.max_iterations; ++it) {
    result.iterations = it;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0) {
      result.detail = "information matrix is not positive definite";
      return result;
    }
    const Eigen::VectorXd step = ldlt.solve(ev.gradient);

    Eigen::VectorXd candidate = theta + step;
    CoxObjective::Evaluation next = objective.evaluate(candidate, frailty_variance);
    const double slack = 1e-12 * std::max(1.0, std::fabs(ev.penalized));
    if (!(next.penalized >= ev.penalized - slack)) {
      double scale = 1.0;
      bool accepted = false;
      for (int h = 0; h < spec.max_step_halvings; ++h) {
        scale *= 0.5;
        candidate = theta + scale * step;
        const auto trial = objective.evaluate(candidate, frailty_variance, false);
        if (trial.penalized >= ev.penalized - slack) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        result.detail = "step halving failed to increase the penalized likelihood";
        return result;
      }
      next = objective.evaluate(candidate, frailty_variance);
    }

    const double change = std::fabs(next.penalized - ev.penalized);
    theta = std::move(candidate);
    ev = std::move(next);

    for (int j = 0; j < p; ++j) {
      if (std::fabs(theta[j]) > spec.divergence_bound) {
        result.monotone = true;
        result.detail = "monotone likelihood: coefficient " + std::to_string(j) +
                        " exceeds the divergence bound";
        return result;
      }
    }
    if (!std::isfinite(ev.penalized)) {
      result.detail = "penalized likelihood is not finite";
      return result;
    }
    if (change <= spec.tolerance * std::fabs(ev.penalized)) {
      result.converged = true;
      return result;
    }
  }
  result.detail = "iteration limit reached";
  return result;
}

}  // namespace

CoxFit fit_cox(const CoxData& data, const CoxModelSpec& spec) {
  if (!(spec.tolerance > 0.0) || spec.max_iterations < 1) {
    throw std::domain_error("cox model: tolerance must be > 0 and max iterations >= 1");
  }
  if (data.column_names.size() != static_cast<std::size_t>(data.x.cols())) {
    throw std::domain_error("cox model: column names do not match the design");
  }
  const bool with_frailty = spec.frailty != FrailtyMode::none;
  CoxObjective objective(data, with_frailty);
  if (objective.n_events() == 0) throw std::domain_error("cox model: no events");
  check_rank(data);
  if (with_frailty && !(spec.frailty_variance > 0.0)) {
    throw std::domain_error("cox model: frailty variance must be > 0");
  }

  const int p = objective.n_fixed();
  const int q = objective.n_random();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(objective.n_params());
  CoxObjective::Evaluation ev;

  CoxFit fit;
  fit.names = data.column_names;
  double sigma2 = with_frailty ? spec.frailty_variance : 0.0;

  NewtonResult inner = newton_solve(objective, spec, sigma2, theta, ev);
  fit.iterations = inner.iterations;

  if (spec.frailty == FrailtyMode::profiled && inner.converged && q > 0) {
    constexpr double kVarianceFloor = 1e-8;
    fit.frailty_variance_converged = false;
    for (int outer = 1; outer <= spec.max_outer_iterations; ++outer) {
      fit.outer_iterations = outer;
      const Eigen::MatrixXd inverse =
          ev.information.ldlt().solve(Eigen::MatrixXd::Identity(p + q, p + q));
      const double updated = std::max(
          kVarianceFloor, (theta.tail(q).squaredNorm() + inverse.diagonal().tail(q).sum()) / q);
      const bool settled = std::fabs(updated - sigma2) <= spec.outer_tolerance * sigma2;
      sigma2 = updated;
      inner = newton_solve(objective, spec, sigma2, theta, ev);
      fit.iterations += inner.iterations;
      if (!inner.converged) break;
      if (settled || sigma2 <= kVarianceFloor) {
        fit.frailty_variance_converged = true;
        break;
      }
    }
  }

  fit.converged = inner.converged;
  fit.monotone_likelihood = inner.monotone;
  fit.detail = inner.detail;
  if (fit.converged && !fit.frailty_variance_converged) {
    fit.detail = "frailty variance did not settle within the outer iteration limit";
  }
  fit.coefficients = theta.head(p);
  fit.frailties = theta.tail(q);
  fit.frailty_variance = sigma2;
  fit.log_partial_likelihood = ev.log_likelihood;
  fit.penalized_log_likelihood = ev.penalized;

  if (p + q > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.information);
    const Eigen::MatrixXd inverse = ldlt.solve(Eigen::MatrixXd::Identity(p + q, p + q));
    fit.variance = inverse.topLeftCorner(p, p);
    fit.variance = 0.5 * (fit.variance + fit.variance.transpose()).eval();
  } else {
    fit.variance.resize(0, 0);
  }
  return fit;
}

AnalysisOutcome test_interaction(const CoxFit& fit, double alpha, const std::string& term) {
  const int idx = fit.index_of(term);
  if (idx < 0) throw std::domain_error("cox fit has no coefficient named '" + term + "'");
  const double estimate = fit.coefficients[idx];
  if (!fit.converged) return AnalysisOutcome::failed("cox fit: " + fit.detail, estimate);
  const double variance = fit.variance(idx, idx);
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    return AnalysisOutcome::failed("cox fit: non-positive variance for '" + term + "'", estimate);
  }
  return wald_test(estimate, variance, alpha);
}

}  // namespace bootpower
