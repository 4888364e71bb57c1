// Sampling and estimation throughput: Metropolis stepping, tempered sweeps,
// covariance estimation on sampled batches, and the exact energy blocks that
// dominate deterministic optimization.

#include <benchmark/benchmark.h>

#include "spinvmc/exact.hpp"
#include "spinvmc/sampler.hpp"

using namespace spinvmc;

namespace {

void bm_metropolis_steps(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto ham = make_hamiltonian(Model::tfi, 1.0, build_lattice({n}));
  const RbmParams p = init_params(4, n, 0.1, 7);
  SamplerOptions opts;
  opts.chain_count = 1;
  opts.workers = 1;
  MultiChainSampler sampler(ham, opts);
  const long steps = 512;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.run(p, steps, steps, false));
  }
  state.SetItemsProcessed(state.iterations() * steps);
}

void bm_tempered_sweeps(benchmark::State& state) {
  const int n = 16;
  const int levels = static_cast<int>(state.range(0));
  const auto ham = make_hamiltonian(Model::tfi, 1.0, build_lattice({n}));
  const RbmParams p = init_params(4, n, 0.1, 7);
  SamplerOptions opts;
  opts.chain_count = 1;
  opts.levels = levels;
  opts.workers = 1;
  MultiChainSampler sampler(ham, opts);
  const long sweeps = 256;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.run(p, sweeps, sweeps, false));
  }
  state.SetItemsProcessed(state.iterations() * sweeps);
}

void bench_estimate(benchmark::State& state, bool want_deriv) {
  const int n = 16;
  const auto ham = make_hamiltonian(Model::tfi, 1.0, build_lattice({n}));
  const RbmParams p = init_params(4, n, 0.1, 7);
  SamplerOptions opts;
  opts.chain_count = 4;
  opts.workers = 1;
  MultiChainSampler sampler(ham, opts);
  const SampleBatch batch = sampler.run(p, static_cast<long>(state.range(0)) * n, n, want_deriv);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate(batch));
  }
  state.SetItemsProcessed(state.iterations() * batch.rows());
}

void bm_estimate_energy_grad(benchmark::State& state) { bench_estimate(state, false); }
void bm_estimate_with_hessian(benchmark::State& state) { bench_estimate(state, true); }

void bm_exact_energy_blocks(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto ham = make_hamiltonian(Model::tfi, 1.0, build_lattice({n}));
  const RbmParams p = init_params(5, n, 0.1, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_wirtinger_blocks(ham, p));
  }
}

}  // namespace

BENCHMARK(bm_metropolis_steps)->Arg(16)->Arg(64);
BENCHMARK(bm_tempered_sweeps)->Arg(2)->Arg(8);
BENCHMARK(bm_estimate_energy_grad)->Arg(128)->Arg(512);
BENCHMARK(bm_estimate_with_hessian)->Arg(128)->Arg(512);
BENCHMARK(bm_exact_energy_blocks)->Arg(8)->Arg(10);

BENCHMARK_MAIN();
