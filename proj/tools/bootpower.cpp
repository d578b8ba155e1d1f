// bootpower: bootstrap power estimation for lab and cluster-randomized designs.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data error,
// 4 estimation error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bootpower/data_model.hpp"
#include "bootpower/io.hpp"
#include "bootpower/power_engine.hpp"
#include "bootpower/stats_util.hpp"
#include "bootpower/trial_simulator.hpp"

namespace {

using namespace bootpower;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kEstimationError = 4;

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct PowerArgs {
  std::string config_path;
  io::RunSettings flags;
};

int cmd_power(const PowerArgs& args) {
  io::RunSettings settings;
  try {
    if (!args.config_path.empty()) settings = io::load_config_file(args.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  settings.merge(args.flags);
  if (!settings.seed) {
    if (const char* env = std::getenv("BOOTPOWER_SEED")) {
      try {
        std::size_t used = 0;
        settings.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        std::cerr << "config error: BOOTPOWER_SEED='" << env << "' is not an unsigned integer\n";
        return kConfigError;
      }
    }
  }
  if (!settings.data_path) {
    std::cerr << "config error: no data file (set 'data' or pass --data)\n";
    return kConfigError;
  }

  SourceData source;
  try {
    source = io::read_csv_file(*settings.data_path);
  } catch (const io::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  if (const auto violations = validate_source(source); !violations.empty()) {
    std::cerr << "data error: " << *settings.data_path << " has " << violations.size()
              << " invalid record(s); first: " << violations.front().describe() << '\n';
    return kDataError;
  }

  PowerConfig config;
  try {
    config = io::resolve(settings, source);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  io::RunReport report;
  report.scenario = settings.scenario.value_or("power");
  report.config = config;
  report.engine_version = io::kEngineVersion;
  report.timestamp = utc_timestamp();
  const auto started = std::chrono::steady_clock::now();
  try {
    report.estimate = estimate_power(config, source);
  } catch (const EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << '\n';
    return kEstimationError;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const std::string report_path = settings.report_path.value_or("power_report.json");
  {
    std::ofstream out(report_path, std::ios::trunc);
    if (!out) {
      std::cerr << "data error: cannot write report to " << report_path << '\n';
      return kDataError;
    }
    out << io::to_json(report).dump(2) << '\n';
  }

  const auto& e = report.estimate;
  std::cout << std::fixed << std::setprecision(4) << "scenario   " << report.scenario << '\n'
            << "effect     " << format_effect(config.effect) << '\n'
            << "analysis   " << to_string(config.analysis) << '\n'
            << "replicates " << e.n_reps << " (rejected " << e.n_reject << ", failed "
            << e.n_failed << ")\n"
            << "power      " << e.power << "  95% exact CI [" << e.ci_low << ", " << e.ci_high
            << "]\n"
            << "report     " << report_path << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string out_path;
  std::uint64_t seed = 1;
  SimParams params;
};

int cmd_simulate(const SimulateArgs& args) {
  try {
    validate_params(args.params);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto data = simulate(args.params, args.seed);
  try {
    io::write_csv_file(args.out_path, data);
  } catch (const io::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  std::cout << "wrote " << data.subject_count() << " subjects in " << data.clusters.size()
            << " clusters to " << args.out_path << '\n';
  return kOk;
}

struct DeArgs {
  double m = 1.0;
  double rho = 0.0;
  std::optional<double> n;
};

int cmd_de(const DeArgs& args) {
  try {
    const double de = design_effect(args.m, args.rho);
    std::cout << "design_effect " << io::format_double(de) << '\n';
    if (args.n) {
      std::cout << "effective_n " << std::fixed << std::setprecision(2)
                << effective_sample_size(*args.n, args.m, args.rho) << '\n';
    }
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  SourceData source;
  try {
    source = io::read_csv_file(path);
  } catch (const io::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  const auto violations = validate_source(source);
  for (const auto& v : violations) std::cout << v.describe() << '\n';
  if (!violations.empty()) {
    std::cout << violations.size() << " violation(s)\n";
    return kDataError;
  }
  std::cout << "ok\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bootstrap power estimation for planned experiments"};
  app.require_subcommand(1);

  PowerArgs power;
  auto* power_cmd = app.add_subcommand("power", "Estimate power by bootstrap resampling");
  power_cmd->add_option("--config", power.config_path, "YAML/JSON run configuration");
  power_cmd->add_option("--data", power.flags.data_path, "Pilot data CSV");
  power_cmd->add_option("--effect", power.flags.effect,
                        "shift:<d> | odds:<theta>[:reset|additive] | "
                        "remove-events:<f>[:discharge|censor][:bernoulli|exact]");
  power_cmd->add_option("--reps", power.flags.reps, "Number of bootstrap replicates");
  power_cmd->add_option("--seed", power.flags.seed, "Master seed (else BOOTPOWER_SEED)");
  power_cmd->add_option("--threads", power.flags.threads, "Worker threads (0 = all)");
  power_cmd->add_option("--alpha", power.flags.alpha, "Test level");
  power_cmd->add_option("--analysis", power.flags.analysis,
                        "welch_t | rank_sum | cluster_did | cox_frailty");
  power_cmd->add_option("--randomizer", power.flags.randomizer, "simple | matched_pairs");
  power_cmd->add_option("--baseline-rate", power.flags.baseline_rate);
  power_cmd->add_option("--intervention-rate", power.flags.intervention_rate);
  power_cmd->add_option("--failure-policy", power.flags.failure_policy,
                        "count_as_nonreject | exclude");
  power_cmd->add_option("--scenario", power.flags.scenario, "Scenario name for the report");
  power_cmd->add_option("--report", power.flags.report_path, "Report path (JSON)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a simulated multi-hospital dataset");
  sim_cmd->add_option("--out", sim.out_path, "Output CSV")->required();
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--clusters", sim.params.n_clusters);
  sim_cmd->add_option("--frailty-sd", sim.params.frailty_sd);
  sim_cmd->add_option("--wards", sim.params.n_ward_types);

  DeArgs de;
  auto* de_cmd = app.add_subcommand("de", "Design effect and effective sample size");
  de_cmd->add_option("--m", de.m, "Mean cluster size")->required();
  de_cmd->add_option("--rho", de.rho, "Intraclass correlation")->required();
  de_cmd->add_option("--n", de.n, "Total sample size");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a data file");
  validate_cmd->add_option("--data", validate_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (power_cmd->parsed()) return cmd_power(power);
  if (sim_cmd->parsed()) return cmd_simulate(sim);
  if (de_cmd->parsed()) return cmd_de(de);
  if (validate_cmd->parsed()) return cmd_validate(validate_path);
  return kConfigError;
}
