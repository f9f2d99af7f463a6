// Serial vs OpenMP kernels: MPPI rollout scoring and episode batches.

#include "safempc/harness.hpp"
#include "safempc/mppi.hpp"
#include "safempc/scenario.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

using namespace safempc;

namespace {

Scenario pick(int system) { return system == 0 ? default_dubins_scenario() : default_quadrotor_scenario(); }

struct RolloutSetup {
  Scenario s;
  std::unique_ptr<BenchmarkSystem> sys;
  HorizonProblem problem;
  StateVec x0;
  Eigen::MatrixXd samples;
  std::vector<double> costs;

  RolloutSetup(int system, int n) : s(pick(system)), sys(s.make_system()) {
    problem = {sys.get(), s.dt, s.cost};
    x0 = sample_initial_state(s, *sys, 0);
    const int m = sys->control_dim();
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    samples.resize(m * s.plan_horizon, n);
    const ControlVec neutral = sys->neutral_control();
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < s.plan_horizon; ++k)
        for (int j = 0; j < m; ++j) samples(k * m + j, i) = neutral[j] + s.mppi.noise_std[j] * nd(rng);
    costs.resize(n);
  }
};

void BM_RolloutSerial(benchmark::State& state) {
  RolloutSetup r(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    evaluate_rollout_costs_serial(r.x0, r.samples, r.problem, r.costs);
    benchmark::DoNotOptimize(r.costs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_RolloutParallel(benchmark::State& state) {
  RolloutSetup r(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    evaluate_rollout_costs_parallel(r.x0, r.samples, r.problem, r.costs);
    benchmark::DoNotOptimize(r.costs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.counters["threads"] = omp_get_max_threads();
}

std::vector<std::uint64_t> seeds(int n) {
  std::vector<std::uint64_t> out(n);
  for (int i = 0; i < n; ++i) out[i] = static_cast<std::uint64_t>(i);
  return out;
}

void BM_BatchSerial(benchmark::State& state) {
  Scenario s = pick(static_cast<int>(state.range(0)));
  s.mppi.parallel = false;
  const auto list = seeds(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(s, Method::kGmpcCbf, list));
}

void BM_BatchParallel(benchmark::State& state) {
  Scenario s = pick(static_cast<int>(state.range(0)));
  s.mppi.parallel = false;
  const auto list = seeds(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(s, Method::kGmpcCbf, list));
  state.counters["threads"] = omp_get_max_threads();
}

// range(0): 0 = Dubins, 1 = quadrotor; range(1): samples or episodes.
BENCHMARK(BM_RolloutSerial)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RolloutParallel)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchSerial)->ArgsProduct({{0, 1}, {8}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->ArgsProduct({{0, 1}, {8}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
