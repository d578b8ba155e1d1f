#include "bootpower/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace bootpower::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  fields.push_back(field);
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& s, const std::string& source, std::size_t line,
                  const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(source, line, "column '" + column + "': '" + s + "' is not a finite number");
  }
  return v;
}

int parse_flag(const std::string& s, const std::string& source, std::size_t line,
               const std::string& column) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  fail(source, line, "column '" + column + "': expected 0 or 1, got '" + s + "'");
}

template <class Record>
ClusterData<Record>& cluster_for(TrialDataset<Record>& d, std::map<std::string, std::size_t>& index,
                                 const std::string& id) {
  const auto [it, inserted] = index.emplace(id, d.clusters.size());
  if (inserted) d.clusters.push_back({id, {}});
  return d.clusters[it->second];
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

SourceData read_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw DataError(source + ": file is empty (no header row)");

  auto rows = [&](auto&& on_row) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto fields = split_csv_line(line);
      if (fields.size() != header.size()) {
        fail(source, line_no,
             "expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()));
      }
      on_row(fields);
    }
  };

  auto require_id = [&](const std::string& id, const std::string& column) {
    if (id.empty()) fail(source, line_no, "column '" + column + "' is empty");
  };

  if (header.size() >= 4 && header[0] == "cluster_id" && header[1] == "time" &&
      header[2] == "event" && header[3] == "discharge_time") {
    SurvivalDataset d;
    d.covariate_names.assign(header.begin() + 4, header.end());
    std::map<std::string, std::size_t> index;
    rows([&](const std::vector<std::string>& f) {
      require_id(f[0], "cluster_id");
      SurvivalRecord r;
      r.cluster_id = f[0];
      r.time = parse_real(f[1], source, line_no, "time");
      r.event = parse_flag(f[2], source, line_no, "event");
      if (!f[3].empty()) {
        r.discharge_time = parse_real(f[3], source, line_no, "discharge_time");
      } else if (r.event == 1) {
        fail(source, line_no, "column 'discharge_time' is required on event rows");
      }
      for (std::size_t k = 4; k < f.size(); ++k) {
        r.covariates.push_back(parse_real(f[k], source, line_no, header[k]));
      }
      cluster_for(d, index, r.cluster_id).subjects.push_back(std::move(r));
    });
    return d;
  }

  if (header.size() == 2 && header[0] == "cluster_id" && header[1] == "outcome") {
    BinaryDataset d;
    std::map<std::string, std::size_t> index;
    rows([&](const std::vector<std::string>& f) {
      require_id(f[0], "cluster_id");
      BinaryRecord r{f[0], parse_flag(f[1], source, line_no, "outcome")};
      cluster_for(d, index, r.cluster_id).subjects.push_back(std::move(r));
    });
    return d;
  }

  if (header.size() == 2 && header[0] == "group" && header[1] == "value") {
    LabData d;
    d.reference_label.clear();
    d.treated_label.clear();
    rows([&](const std::vector<std::string>& f) {
      require_id(f[0], "group");
      ContinuousRecord r{f[0], parse_real(f[1], source, line_no, "value")};
      if (d.reference_label.empty() || r.group == d.reference_label) {
        d.reference_label = r.group;
        d.reference.push_back(std::move(r));
      } else if (d.treated_label.empty() || r.group == d.treated_label) {
        d.treated_label = r.group;
        d.treated.push_back(std::move(r));
      } else {
        fail(source, line_no, "a third group '" + r.group + "' (exactly two are allowed)");
      }
    });
    if (d.treated.empty()) throw DataError(source + ": continuous data needs two groups");
    return d;
  }

  throw DataError(source + ":" + std::to_string(line_no) +
                  ": unrecognised header (expected cluster_id,time,event,discharge_time,..., "
                  "cluster_id,outcome or group,value)");
}

SourceData read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open data file");
  return read_csv(in, path);
}

void write_csv(std::ostream& out, const SurvivalDataset& d) {
  out << "cluster_id,time,event,discharge_time";
  for (const auto& name : d.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& c : d.clusters) {
    for (const auto& r : c.subjects) {
      out << r.cluster_id << ',' << format_double(r.time) << ',' << r.event << ',';
      if (r.discharge_time) out << format_double(*r.discharge_time);
      for (double v : r.covariates) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_csv(std::ostream& out, const BinaryDataset& d) {
  out << "cluster_id,outcome\n";
  for (const auto& c : d.clusters) {
    for (const auto& r : c.subjects) out << r.cluster_id << ',' << r.outcome << '\n';
  }
}

void write_csv(std::ostream& out, const LabData& d) {
  out << "group,value\n";
  for (const auto* group : {&d.reference, &d.treated}) {
    for (const auto& r : *group) out << r.group << ',' << format_double(r.value) << '\n';
  }
}

void write_csv_file(const std::string& path, const SourceData& d) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  std::visit([&](const auto& data) { write_csv(out, data); }, d);
  out.flush();
  if (!out) throw DataError(path + ": write failed");
}

// ---- config ----------------------------------------------------------------

void RunSettings::merge(const RunSettings& o) {
  auto take = [](auto& mine, const auto& theirs) {
    if (theirs) mine = theirs;
  };
  take(design, o.design);
  take(data_path, o.data_path);
  take(analysis, o.analysis);
  take(randomizer, o.randomizer);
  take(baseline_rate, o.baseline_rate);
  take(intervention_rate, o.intervention_rate);
  take(covariates, o.covariates);
  take(include_arm, o.include_arm);
  take(include_period, o.include_period);
  take(include_interaction, o.include_interaction);
  take(frailty, o.frailty);
  take(frailty_variance, o.frailty_variance);
  take(effect, o.effect);
  take(reps, o.reps);
  take(alpha, o.alpha);
  take(seed, o.seed);
  take(threads, o.threads);
  take(failure_policy, o.failure_policy);
  take(scenario, o.scenario);
  take(report_path, o.report_path);
}

RunSettings parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  RunSettings s;
  if (root.IsNull()) return s;
  if (!root.IsMap()) throw ConfigError(source + ": expected a key-value mapping");

  for (const auto& entry : root) {
    const auto key = entry.first.as<std::string>();
    const YAML::Node& value = entry.second;
    auto get = [&](auto& field) {
      using T = typename std::decay_t<decltype(field)>::value_type;
      try {
        field = value.as<T>();
      } catch (const YAML::Exception&) {
        throw ConfigError(source + ": key '" + key + "' has an invalid value");
      }
    };
    if (key == "design") get(s.design);
    else if (key == "data") get(s.data_path);
    else if (key == "analysis") get(s.analysis);
    else if (key == "randomizer") get(s.randomizer);
    else if (key == "baseline_rate") get(s.baseline_rate);
    else if (key == "intervention_rate") get(s.intervention_rate);
    else if (key == "covariates") get(s.covariates);
    else if (key == "arm") get(s.include_arm);
    else if (key == "period") get(s.include_period);
    else if (key == "interaction") get(s.include_interaction);
    else if (key == "frailty") get(s.frailty);
    else if (key == "frailty_variance") get(s.frailty_variance);
    else if (key == "effect") get(s.effect);
    else if (key == "reps") get(s.reps);
    else if (key == "alpha") get(s.alpha);
    else if (key == "seed") get(s.seed);
    else if (key == "threads") get(s.threads);
    else if (key == "failure_policy") get(s.failure_policy);
    else if (key == "scenario") get(s.scenario);
    else if (key == "report") get(s.report_path);
    else throw ConfigError(source + ": unknown key '" + key + "'");
  }
  return s;
}

RunSettings load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

PowerConfig resolve(const RunSettings& s, const SourceData& source) {
  PowerConfig c;
  const bool lab = std::holds_alternative<LabData>(source);
  const bool binary = std::holds_alternative<BinaryDataset>(source);

  c.design = s.design ? parse_design(*s.design) : (lab ? Design::lab : Design::crt);
  try {
    c.analysis = s.analysis ? parse_analysis(*s.analysis)
                            : (lab ? AnalysisKind::welch_t
                                   : binary ? AnalysisKind::cluster_did : AnalysisKind::cox_frailty);
    c.randomizer = parse_randomizer(s.randomizer.value_or("matched_pairs"));
    c.model.frailty = parse_frailty(s.frailty.value_or("profiled"));
    if (!s.effect) throw ConfigError("no effect given (set 'effect' or pass --effect)");
    c.effect = parse_effect(*s.effect);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.baseline_rate = s.baseline_rate.value_or(1.0);
  c.intervention_rate = s.intervention_rate.value_or(1.0);
  c.n_reps = s.reps.value_or(1000);
  c.alpha = s.alpha.value_or(0.05);
  c.master_seed = s.seed.value_or(0);
  c.workers = s.threads.value_or(0);
  c.failure_policy = parse_failure_policy(s.failure_policy.value_or("count_as_nonreject"));

  if (const auto* surv = std::get_if<SurvivalDataset>(&source)) {
    c.model.covariates = s.covariates.value_or(surv->covariate_names);
  } else if (s.covariates && !s.covariates->empty()) {
    throw ConfigError("covariates are only meaningful for survival data");
  }
  c.model.include_arm = s.include_arm.value_or(true);
  c.model.include_period = s.include_period.value_or(true);
  c.model.include_interaction = s.include_interaction.value_or(true);
  c.model.frailty_variance = s.frailty_variance.value_or(0.25);
  if (!(c.model.frailty_variance > 0.0)) throw ConfigError("frailty_variance must be > 0");

  validate_config(c, source);
  return c;
}

// ---- report ----------------------------------------------------------------

nlohmann::json to_json(const PowerConfig& c) {
  return {
      {"design", to_string(c.design)},
      {"effect", format_effect(c.effect)},
      {"analysis", to_string(c.analysis)},
      {"randomizer", to_string(c.randomizer)},
      {"baseline_rate", c.baseline_rate},
      {"intervention_rate", c.intervention_rate},
      {"reps", c.n_reps},
      {"alpha", c.alpha},
      {"seed", c.master_seed},
      {"failure_policy", to_string(c.failure_policy)},
      {"model",
       {{"covariates", c.model.covariates},
        {"arm", c.model.include_arm},
        {"period", c.model.include_period},
        {"interaction", c.model.include_interaction},
        {"frailty", to_string(c.model.frailty)},
        {"frailty_variance", c.model.frailty_variance}}},
  };
}

nlohmann::json to_json(const PowerEstimate& e) {
  return {
      {"n_reps", e.n_reps},         {"n_reject", e.n_reject}, {"n_failed", e.n_failed},
      {"denominator", e.denominator}, {"power", e.power},     {"ci_low", e.ci_low},
      {"ci_high", e.ci_high},       {"ci_level", 0.95},       {"alpha", e.alpha},
      {"master_seed", e.master_seed},
  };
}

nlohmann::json to_json(const RunReport& r) {
  return {
      {"scenario", r.scenario},
      {"config", to_json(r.config)},
      {"estimate", to_json(r.estimate)},
      {"wall_seconds", r.wall_seconds},
      {"engine_version", r.engine_version},
      {"timestamp", r.timestamp},
  };
}

}  // namespace bootpower::io
