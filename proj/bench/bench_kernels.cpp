// Serial reference vs OpenMP kernels on the switch family.
// Arguments are (switches, levels); thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "mcfsm/analysis.hpp"

using namespace mcfsm;
using namespace mcfsm::analysis;

namespace {

void family_args(benchmark::internal::Benchmark* b) {
  for (int n : {8, 12, 14}) b->Args({n, 4});
}

void BM_expand_serial(benchmark::State& state) {
  const auto model = generate_switch_family(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(expand_product_serial(model, kDefaultMaxStates, kDefaultCascadeCap));
  }
  state.counters["states"] = static_cast<double>(*product_state_count(model));
}

void BM_expand_parallel(benchmark::State& state) {
  const auto model = generate_switch_family(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(expand_product_parallel(model, kDefaultMaxStates, kDefaultCascadeCap));
  }
  state.counters["states"] = static_cast<double>(*product_state_count(model));
}

void BM_explore_serial(benchmark::State& state) {
  const auto model = generate_switch_family(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(explore_serial(model, kDefaultMaxStates, kDefaultCascadeCap));
  }
}

void BM_explore_parallel(benchmark::State& state) {
  const auto model = generate_switch_family(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(explore_parallel(model, kDefaultMaxStates, kDefaultCascadeCap));
  }
}

}  // namespace

BENCHMARK(BM_expand_serial)->Apply(family_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_expand_parallel)->Apply(family_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_explore_serial)->Apply(family_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_explore_parallel)->Apply(family_args)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
