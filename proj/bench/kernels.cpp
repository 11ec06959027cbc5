#include <benchmark/benchmark.h>

#include <map>

#include "rhl/compensator.hpp"
#include "rhl/mfpca.hpp"
#include "rhl/simulate.hpp"

using namespace rhl;

namespace {

// Arg is the number of clusters; four units each.
SimulationConfig config_for(const benchmark::State& state) {
  SimulationConfig c;
  c.I = static_cast<int>(state.range(0));
  c.cluster_scale = "1";
  c.seed = 7;
  return c;
}

const StudyResult& study(int I) {
  static std::map<int, StudyResult> cache;
  auto it = cache.find(I);
  if (it == cache.end()) {
    SimulationConfig c;
    c.I = I;
    c.cluster_scale = "1";
    c.seed = 7;
    it = cache.emplace(I, run_simulation_study(c)).first;
  }
  return it->second;
}

template <auto Gram>
void BM_weighted_gram(benchmark::State& state) {
  const auto& s = study(static_cast<int>(state.range(0)));
  const std::vector<double> w(static_cast<std::size_t>(s.truth.curves.rows()), 1.0 / s.truth.curves.rows());
  for (auto _ : state) benchmark::DoNotOptimize(Gram(s.truth.curves, w));
}

template <auto Reconstruct>
void BM_reconstruct(benchmark::State& state) {
  const auto& r = study(static_cast<int>(state.range(0))).refit;
  for (auto _ : state) benchmark::DoNotOptimize(Reconstruct(r.data, r.fit, r.smoothed, r.compensators.grid));
}

template <auto Simulate>
void BM_simulate(benchmark::State& state) {
  const auto c = config_for(state);
  for (auto _ : state) benchmark::DoNotOptimize(Simulate(c));
}

}  // namespace

BENCHMARK(BM_weighted_gram<weighted_gram>)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_weighted_gram<weighted_gram_serial>)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reconstruct<reconstruct_all>)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reconstruct<reconstruct_all_serial>)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate<simulate_processes>)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate<simulate_processes_serial>)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
