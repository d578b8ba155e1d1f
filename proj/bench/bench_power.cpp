// Serial reference loop vs the OpenMP replicate loop, plus a single Cox fit.
//   ./bootpower_bench --benchmark_filter=Survival

#include <benchmark/benchmark.h>

#include "bootpower/io.hpp"
#include "bootpower/power_engine.hpp"
#include "bootpower/trial_simulator.hpp"

using namespace bootpower;

namespace {

const SourceData& survival_source() {
  static const SourceData d = [] {
    SimParams p;
    p.n_clusters = 20;
    return SourceData(simulate(p, 1));
  }();
  return d;
}

const SourceData& binary_source() {
  static const SourceData d =
      io::read_csv_file(std::string(BOOTPOWER_TEST_DATA) + "/binary_fixture.csv");
  return d;
}

PowerConfig survival_config(int workers) {
  PowerConfig c;
  c.effect = EventRemoval{0.2};
  c.model.covariates = {"x2", "wardtype"};
  c.n_reps = 16;
  c.master_seed = 1;
  c.workers = workers;
  return c;
}

PowerConfig binary_config(int workers) {
  PowerConfig c;
  c.effect = OddsMultiplier{2.0};
  c.analysis = AnalysisKind::cluster_did;
  c.baseline_rate = 3.0;
  c.intervention_rate = 4.5;
  c.n_reps = 200;
  c.master_seed = 1;
  c.workers = workers;
  return c;
}

void BM_SurvivalSerial(benchmark::State& state) {
  const auto config = survival_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_power_serial(config, survival_source()));
}

void BM_SurvivalParallel(benchmark::State& state) {
  const auto config = survival_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_power(config, survival_source()));
}

void BM_BinarySerial(benchmark::State& state) {
  const auto config = binary_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_power_serial(config, binary_source()));
}

void BM_BinaryParallel(benchmark::State& state) {
  const auto config = binary_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_power(config, binary_source()));
}

void BM_CoxFit(benchmark::State& state) {
  SimParams p;
  p.n_clusters = static_cast<int>(state.range(0));
  auto base = simulate(p, 2);
  auto inter = simulate(p, 3);
  inter.period = Period::intervention;
  ArmAssignment arms;
  for (std::size_t c = 0; c < base.clusters.size(); ++c) {
    arms[base.clusters[c].cluster_id] = c % 2 ? Arm::intervention : Arm::control;
  }
  CoxModelSpec spec;
  spec.covariates = {"x2", "wardtype"};
  const auto data = build_cox_data(base, inter, arms, spec);
  for (auto _ : state) benchmark::DoNotOptimize(fit_cox(data, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}

}  // namespace

BENCHMARK(BM_SurvivalSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SurvivalParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BinarySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinaryParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CoxFit)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
