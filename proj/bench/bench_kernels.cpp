#include <benchmark/benchmark.h>

#include "peerscore/budget.hpp"
#include "peerscore/dominance.hpp"
#include "peerscore/sensitivity.hpp"

using namespace peerscore;

namespace {

void BM_SampleScoresSerial(benchmark::State& state) {
  const auto& info = preset("J1");
  const Mechanism mech(parse_mechanism(state.range(0) ? "ea-prior" : "oa"), info);
  for (auto _ : state) benchmark::DoNotOptimize(sample_scores_serial(mech, info, 100, 1.0, 2000, 7));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_SampleScoresSerial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleScoresParallel(benchmark::State& state) {
  const auto& info = preset("J1");
  const Mechanism mech(parse_mechanism(state.range(0) ? "ea-prior" : "oa"), info);
  for (auto _ : state) benchmark::DoNotOptimize(sample_scores_parallel(mech, info, 100, 1.0, 2000, 7));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_SampleScoresParallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_VerifyEA(benchmark::State& state) {
  SearchConfig cfg;
  cfg.parallel = state.range(1) != 0;
  const auto spec = parse_mechanism("ea-uniform");
  for (auto _ : state)
    benchmark::DoNotOptimize(verify_sd_truthfulness(spec, preset("J1"), static_cast<int>(state.range(0)), cfg));
}
BENCHMARK(BM_VerifyEA)->Args({4, 0})->Args({4, 1})->Args({6, 0})->Args({6, 1})->Unit(benchmark::kMillisecond);

void BM_ExactMoments(benchmark::State& state) {
  const auto& info = preset("J1");
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ea_exact_moments(info, n, n / 2, 1.0));
}
BENCHMARK(BM_ExactMoments)->Arg(100)->Arg(1000);

void BM_Simulate(benchmark::State& state) {
  SimulationConfig cfg;
  cfg.rounds = 200;
  cfg.parallel = state.range(0) != 0;
  const std::vector<MechanismSpec> specs{parse_mechanism("oa"), parse_mechanism("ea-prior"),
                                         parse_mechanism("ca-partition-round")};
  for (auto _ : state) benchmark::DoNotOptimize(simulate(cfg, preset("J1"), specs, 0.8));
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
