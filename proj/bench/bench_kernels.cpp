// Serial reference kernels against their OpenMP versions.
//
//   bench_kernels --benchmark_filter=Energy
//
// The threaded energy distance takes the worker count from the benchmark argument;
// the strong-error study uses one thread per argument as well.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "quicsort/harness.hpp"

namespace {

using namespace quicsort;

EmpiricalDistribution cloud(std::size_t n, std::size_t d, std::uint64_t seed) {
  CounterRng rng(seed, 0, 0, 0);
  std::vector<double> s(n * d);
  rng.fill_normal(s, 1.0);
  return {d, std::move(s)};
}

void BM_EnergySerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto mu = cloud(n, 5, 1), nu = cloud(n, 5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(serial::energy_distance_sq(mu, nu));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EnergySerial)->Arg(512)->Arg(2048)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_EnergyParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  const auto mu = cloud(n, 5, 1), nu = cloud(n, 5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance_sq(mu, nu));
}
BENCHMARK(BM_EnergyParallel)
    ->ArgsProduct({{512, 2048, 4096}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_Wasserstein(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  const auto mu = cloud(n, 5, 3), nu = cloud(n, 5, 4);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein2(mu, nu));
}
BENCHMARK(BM_Wasserstein)->ArgsProduct({{256, 1024}, {1, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_StrongErrorStudy(benchmark::State& state) {
  const auto data = synthetic_logistic_dataset(200, 4, 2024);
  const LogisticPotential pot(data);
  const SolverConfig cfg(1.0, 1.0 / pot.meta().M1);
  StrongErrorSettings s;
  s.paths = 16;
  s.levels = {3, 4, 5, 6};
  s.fine_level = 10;
  s.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(strong_error_study(cfg, pot, prior_sampler(data), s));
}
BENCHMARK(BM_StrongErrorStudy)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_QuicsortStep(benchmark::State& state) {
  const auto data = synthetic_logistic_dataset(200, 4, 2024);
  const LogisticPotential pot(data);
  const SolverConfig cfg(1.0, 1.0 / pot.meta().M1);
  const auto coeffs = StepCoefficients::make(cfg.gamma(), 0.05);
  CounterRng rng(1, 0, 0, 0);
  PhaseState s = initial_state(prior_sampler(data), cfg, 1, 0);
  const auto inc = sample_increment(rng, 0.05, pot.dim());
  for (auto _ : state) {
    s = quicsort_step(cfg, coeffs, pot, s, inc);
    benchmark::DoNotOptimize(s.X.data());
  }
}
BENCHMARK(BM_QuicsortStep);

}  // namespace

BENCHMARK_MAIN();
