#include <benchmark/benchmark.h>

#include <omp.h>

#include <map>

#include "qhd/estimator.hpp"
#include "qhd/simulator.hpp"
#include "qhd/tobit.hpp"

using namespace qhd;

namespace {

// Pooled design of a truth simulation, built once per size.
const TobitData& design(int base) {
  static std::map<int, TobitData> cache;
  auto it = cache.find(base);
  if (it == cache.end()) {
    const auto recs = filter_analysis_rows(simulate_panel(PopulationSpec::reference_truth(base, 99)));
    it = cache.emplace(base, build_design(recs, kDefaultOmega)).first;
  }
  return it->second;
}

Eigen::VectorXd truth_params() {
  return ThetaVector::from_structural({1.009, 0.921, 0.679, 0.581}, 0.986, 1.282, 0.8).params();
}

void BM_LoglikSerial(benchmark::State& state) {
  const TobitData& d = design(static_cast<int>(state.range(0)));
  const Eigen::VectorXd p = truth_params();
  for (auto _ : state) benchmark::DoNotOptimize(tobit_loglik_serial(d, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows()));
}

void BM_LoglikParallel(benchmark::State& state) {
  const TobitData& d = design(static_cast<int>(state.range(0)));
  const Eigen::VectorXd p = truth_params();
  for (auto _ : state) benchmark::DoNotOptimize(tobit_loglik_parallel(d, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows()));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_SimulateSerial(benchmark::State& state) {
  const PopulationSpec spec = PopulationSpec::reference_truth(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_panel_serial(spec));
  state.SetItemsProcessed(state.iterations() * spec.total_subjects());
}

void BM_SimulateParallel(benchmark::State& state) {
  const PopulationSpec spec = PopulationSpec::reference_truth(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_panel(spec));
  state.SetItemsProcessed(state.iterations() * spec.total_subjects());
  state.counters["threads"] = omp_get_max_threads();
}

void BM_FitTruth(benchmark::State& state) {
  const TobitData& d = design(static_cast<int>(state.range(0)));
  FitOptions opt;
  opt.parallel = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, opt));
}

} // namespace

BENCHMARK(BM_LoglikSerial)->Arg(100)->Arg(500)->Arg(2000);
BENCHMARK(BM_LoglikParallel)->Arg(100)->Arg(500)->Arg(2000);
BENCHMARK(BM_SimulateSerial)->Arg(500)->Arg(2000);
BENCHMARK(BM_SimulateParallel)->Arg(500)->Arg(2000);
BENCHMARK(BM_FitTruth)->Args({500, 0})->Args({500, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
