#include "bootpower/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bootpower {

const char* to_string(Arm arm) {
  return arm == Arm::control ? "control" : "intervention";
}

const char* to_string(Period period) {
  return period == Period::baseline ? "baseline" : "intervention";
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream in(text);
  while (std::getline(in, current, sep)) parts.push_back(current);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_number(const std::string& s, const std::string& what) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw std::invalid_argument("effect: cannot parse " + what + " from '" + s + "'");
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

EffectSpec parse_effect(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2) {
    throw std::invalid_argument("effect: expected <kind>:<value>, got '" + text + "'");
  }
  const std::string& kind = parts[0];
  if (kind == "shift") {
    if (parts.size() != 2) throw std::invalid_argument("effect: shift takes one value");
    return Shift{parse_number(parts[1], "shift delta")};
  }
  if (kind == "odds") {
    if (parts.size() > 3) throw std::invalid_argument("effect: too many fields in '" + text + "'");
    OddsMultiplier odds{parse_number(parts[1], "odds multiplier"), OddsVariant::reset};
    if (!(odds.theta > 0.0)) throw std::invalid_argument("effect: odds multiplier must be > 0");
    if (parts.size() == 3) {
      if (parts[2] == "reset") {
        odds.variant = OddsVariant::reset;
      } else if (parts[2] == "additive") {
        odds.variant = OddsVariant::additive;
      } else {
        throw std::invalid_argument("effect: unknown odds variant '" + parts[2] + "'");
      }
    }
    return odds;
  }
  if (kind == "remove-events") {
    if (parts.size() > 4) throw std::invalid_argument("effect: too many fields in '" + text + "'");
    EventRemoval removal;
    removal.fraction = parse_number(parts[1], "removal fraction");
    if (removal.fraction < 0.0 || removal.fraction > 1.0) {
      throw std::invalid_argument("effect: removal fraction must lie in [0, 1]");
    }
    for (std::size_t i = 2; i < parts.size(); ++i) {
      const auto& opt = parts[i];
      if (opt == "discharge") {
        removal.mode = RemovalMode::discharge_substitution;
      } else if (opt == "censor") {
        removal.mode = RemovalMode::censor_at_event;
      } else if (opt == "bernoulli") {
        removal.selection = RemovalSelection::bernoulli;
      } else if (opt == "exact") {
        removal.selection = RemovalSelection::exact_count;
      } else {
        throw std::invalid_argument("effect: unknown remove-events option '" + opt + "'");
      }
    }
    return removal;
  }
  throw std::invalid_argument("effect: unknown kind '" + kind + "'");
}

std::string format_effect(const EffectSpec& effect) {
  struct Formatter {
    std::string operator()(const Shift& s) const { return "shift:" + format_number(s.delta); }
    std::string operator()(const OddsMultiplier& o) const {
      return "odds:" + format_number(o.theta) +
             (o.variant == OddsVariant::reset ? ":reset" : ":additive");
    }
    std::string operator()(const EventRemoval& r) const {
      return "remove-events:" + format_number(r.fraction) +
             (r.mode == RemovalMode::discharge_substitution ? ":discharge" : ":censor") +
             (r.selection == RemovalSelection::bernoulli ? ":bernoulli" : ":exact");
    }
  };
  return std::visit(Formatter{}, effect);
}

AnalysisOutcome AnalysisOutcome::from_p(double p, double alpha, double estimate,
                                        double statistic) {
  AnalysisOutcome out;
  out.p_value = std::clamp(p, 0.0, 1.0);
  out.reject = out.p_value < alpha;
  out.estimate = estimate;
  out.statistic = statistic;
  out.converged = true;
  return out;
}

AnalysisOutcome AnalysisOutcome::failed(std::string why, double estimate) {
  AnalysisOutcome out;
  out.p_value = 1.0;
  out.reject = false;
  out.estimate = estimate;
  out.converged = false;
  out.detail = why.empty() ? std::string("analysis failed") : std::move(why);
  return out;
}

std::string Violation::describe() const {
  return "cluster '" + cluster_id + "', " + field + ": " + message;
}

namespace {

template <class Record>
void check_cluster_structure(const TrialDataset<Record>& d, std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const auto& cluster : d.clusters) {
    if (!seen.insert(cluster.cluster_id).second) {
      out.push_back({cluster.cluster_id, "cluster_id", "duplicate cluster id"});
    }
    if (cluster.subjects.empty()) {
      out.push_back({cluster.cluster_id, "subjects", "cluster has no subjects"});
    }
    for (std::size_t j = 0; j < cluster.subjects.size(); ++j) {
      if (cluster.subjects[j].cluster_id != cluster.cluster_id) {
        out.push_back({cluster.cluster_id, "subjects[" + std::to_string(j) + "].cluster_id",
                       "record carries cluster id '" + cluster.subjects[j].cluster_id + "'"});
      }
    }
  }
  if (d.arm_assignment) {
    for (const auto& [id, arm] : *d.arm_assignment) {
      if (!seen.contains(id)) {
        out.push_back({id, "arm_assignment", "assignment names an unknown cluster"});
      }
    }
    for (const auto& id : seen) {
      if (!d.arm_assignment->contains(id)) {
        out.push_back({id, "arm_assignment", "cluster has no arm"});
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate_dataset(const SurvivalDataset& d) {
  std::vector<Violation> out;
  check_cluster_structure(d, out);
  for (const auto& cluster : d.clusters) {
    for (std::size_t j = 0; j < cluster.subjects.size(); ++j) {
      const auto& r = cluster.subjects[j];
      const std::string at = "subjects[" + std::to_string(j) + "].";
      if (!(std::isfinite(r.time) && r.time > 0.0)) {
        out.push_back({cluster.cluster_id, at + "time", "time must be finite and > 0"});
      }
      if (r.event != 0 && r.event != 1) {
        out.push_back({cluster.cluster_id, at + "event", "event must be 0 or 1"});
      } else if (r.event == 1) {
        if (!r.discharge_time) {
          out.push_back({cluster.cluster_id, at + "discharge_time", "missing on an event record"});
        } else if (!std::isfinite(*r.discharge_time) || *r.discharge_time < r.time) {
          out.push_back({cluster.cluster_id, at + "discharge_time", "must be >= time"});
        }
      } else if (r.discharge_time && *r.discharge_time != r.time) {
        out.push_back({cluster.cluster_id, at + "discharge_time",
                       "censored record must have discharge_time equal to time"});
      }
      if (r.covariates.size() != d.covariate_names.size()) {
        out.push_back({cluster.cluster_id, at + "covariates",
                       "expected " + std::to_string(d.covariate_names.size()) + " values, got " +
                           std::to_string(r.covariates.size())});
      }
      for (std::size_t k = 0; k < r.covariates.size(); ++k) {
        if (!std::isfinite(r.covariates[k])) {
          const std::string name =
              k < d.covariate_names.size() ? d.covariate_names[k] : std::to_string(k);
          out.push_back({cluster.cluster_id, at + name, "covariate is not finite"});
        }
      }
    }
  }
  return out;
}

std::vector<Violation> validate_dataset(const BinaryDataset& d) {
  std::vector<Violation> out;
  check_cluster_structure(d, out);
  for (const auto& cluster : d.clusters) {
    for (std::size_t j = 0; j < cluster.subjects.size(); ++j) {
      const int y = cluster.subjects[j].outcome;
      if (y != 0 && y != 1) {
        out.push_back({cluster.cluster_id, "subjects[" + std::to_string(j) + "].outcome",
                       "outcome must be 0 or 1"});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_dataset(const LabData& d) {
  std::vector<Violation> out;
  auto check = [&](const std::vector<ContinuousRecord>& group, const std::string& label) {
    if (group.empty()) out.push_back({label, "values", "group has no values"});
    for (std::size_t j = 0; j < group.size(); ++j) {
      if (!std::isfinite(group[j].value)) {
        out.push_back({label, "values[" + std::to_string(j) + "]", "value is not finite"});
      }
    }
  };
  check(d.reference, d.reference_label);
  check(d.treated, d.treated_label);
  return out;
}

std::vector<Violation> validate_source(const SourceData& d) {
  return std::visit([](const auto& data) { return validate_dataset(data); }, d);
}

}  // namespace bootpower
