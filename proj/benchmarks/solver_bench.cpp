#include <benchmark/benchmark.h>

#include "ncrelay/model.hpp"
#include "ncrelay/policy_tools.hpp"
#include "ncrelay/solver.hpp"

namespace {

using namespace ncrelay;

ModelParams desk_scale_params() {
  ModelParams params;
  params.L1 = params.L2 = 3;
  params.p1 = 0.1;
  params.p2 = 0.2;
  params.lambda_hold = 0.05;
  params.xi_overflow = 4.0;
  params.tau_tx = 1.0;
  params.eta_err = 2.0;
  params.beta = 0.97;
  params.channel1.num_states = 8;
  params.channel2.num_states = 8;
  return params;
}

void BM_BuildModel(benchmark::State& state) {
  const ModelParams params = desk_scale_params();
  for (auto _ : state) {
    Model model = Model::build(params);
    benchmark::DoNotOptimize(model.kernel().num_entries());
  }
}
BENCHMARK(BM_BuildModel);

void BM_ValueIterationSweeps(benchmark::State& state) {
  const Model model = Model::build(desk_scale_params());
  SolveOptions options;
  options.tolerance = 1e-2;  // a few hundred sweeps per run
  for (auto _ : state) {
    SolveResult result = value_iteration(model, options);
    benchmark::DoNotOptimize(result.iterations);
  }
}
BENCHMARK(BM_ValueIterationSweeps);

void BM_MonotoneValueIteration(benchmark::State& state) {
  const Model model = Model::build(desk_scale_params());
  SolveOptions options;
  options.tolerance = 1e-2;
  for (auto _ : state) {
    MonotoneSolveResult result = monotone_value_iteration(model, options);
    benchmark::DoNotOptimize(result.evaluations);
  }
}
BENCHMARK(BM_MonotoneValueIteration);

void BM_SimulateChain(benchmark::State& state) {
  const Model model = Model::build(desk_scale_params());
  const SolveResult solve = value_iteration(model);
  SimOptions options;
  options.horizon = 500;
  options.replications = 32;
  for (auto _ : state) {
    ChainMetrics metrics = simulate_chain(model, solve.policy, options);
    benchmark::DoNotOptimize(metrics.discounted_cost);
  }
}
BENCHMARK(BM_SimulateChain);

}  // namespace

BENCHMARK_MAIN();
