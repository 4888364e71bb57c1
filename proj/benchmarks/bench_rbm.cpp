// Wavefunction evaluation throughput: the direct and fft theta transforms,
// derivative rows, and the local-observable bundle that dominates sampling.

#include <benchmark/benchmark.h>

#include "spinvmc/hamiltonian.hpp"
#include "spinvmc/rbm.hpp"
#include "spinvmc/rng.hpp"

using namespace spinvmc;

namespace {

SpinConfig random_config(int n, Rng& rng) {
  SpinConfig cfg(n);
  for (int i = 0; i < n; ++i) cfg[i] = rng.uniform() < 0.5 ? -1 : +1;
  return cfg;
}

void bench_log_weight(benchmark::State& state, Backend backend) {
  const int n = static_cast<int>(state.range(0));
  const auto lat = build_lattice({n});
  const RbmParams p = init_params(4, n, 0.1, 7);
  RbmEvaluator eval(lat, backend);
  eval.bind(p);
  Rng rng(11);
  SpinConfig cfg = random_config(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.log_weight(cfg));
    cfg.flip(rng.uniform_int(n));
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_log_weight_direct(benchmark::State& state) { bench_log_weight(state, Backend::direct); }
void bm_log_weight_fft(benchmark::State& state) { bench_log_weight(state, Backend::fft); }

void bm_log_derivatives(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto lat = build_lattice({n});
  const RbmParams p = init_params(4, n, 0.1, 7);
  RbmEvaluator eval(lat);
  eval.bind(p);
  Rng rng(13);
  SpinConfig cfg = random_config(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.log_derivatives(cfg));
    cfg.flip(rng.uniform_int(n));
  }
  state.SetItemsProcessed(state.iterations());
}

void bench_local_observables(benchmark::State& state, bool want_deriv) {
  const int n = static_cast<int>(state.range(0));
  const auto ham = make_hamiltonian(Model::tfi, 1.0, build_lattice({n}));
  const RbmParams p = init_params(4, n, 0.1, 7);
  RbmEvaluator eval(ham.lattice);
  eval.bind(p);
  Rng rng(17);
  SpinConfig cfg = random_config(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_observables(ham, p, eval, cfg, want_deriv));
    cfg.flip(rng.uniform_int(n));
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_local_energy_row(benchmark::State& state) { bench_local_observables(state, false); }
void bm_local_deriv_row(benchmark::State& state) { bench_local_observables(state, true); }

}  // namespace

BENCHMARK(bm_log_weight_direct)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_log_weight_fft)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_log_derivatives)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_local_energy_row)->Arg(16)->Arg(64);
BENCHMARK(bm_local_deriv_row)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
