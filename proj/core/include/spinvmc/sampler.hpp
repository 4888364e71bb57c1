#pragma once

#include <cstdint>
#include <vector>

#include "spinvmc/estimators.hpp"
#include "spinvmc/hamiltonian.hpp"
#include "spinvmc/rng.hpp"

namespace spinvmc {

// Metropolis walkers on |psi|^(2 beta). Proposals: tfi flips one uniformly
// chosen site; xxz flips a uniformly chosen (A-site, B-site) pair when the two
// spins are equal (the balance-preserving move class) and otherwise counts an
// automatic rejection, which keeps the proposal kernel symmetric. Chains stay
// in their starting sector forever.
struct StepStats {
  long proposals = 0;
  long accepts = 0;
  long zero_amplitude = 0;  // auto-rejected zero-amplitude proposals
};

struct ChainState {
  SpinConfig config;
  double log_weight = 0;  // cached 2 Re log psi(config); -inf marks zero amplitude
  Rng rng;
  int level = 0;  // tempering exponent numerator, beta = level / m
};

// tfi: uniform over all configurations; xxz: uniform over the balanced sector
// (equal sublattice magnetizations)
SpinConfig init_config(const HamiltonianSpec& ham, Rng& rng);

// one proposal against rho^beta, accept with min(1, exp(beta * delta log_weight));
// the evaluator must be bound to the current parameters
void metropolis_step(ChainState& chain, RbmEvaluator& eval, const HamiltonianSpec& ham,
                     double beta_exponent, StepStats& stats);

struct SwapStat {
  long attempts = 0;
  long accepts = 0;
};

// levels 0..m targeting rho^{i/m}; level 0 is an independence sampler drawing
// fresh sector configurations (always accepted)
struct TemperLadder {
  int m = 0;
  std::vector<ChainState> chains;
  Rng swap_rng;
  long sweep_count = 0;
  int swap_interval = 1;
  std::vector<SwapStat> swap_stats;  // adjacent pair (i, i+1) at index i
};

// one within-level step per level, then adjacent swaps over pairs of one
// parity (alternating even/odd by sweep), accepted with
// min(1, exp((1/m)(log_weight_i - log_weight_{i+1}))). level_stats must have
// m + 1 entries; entry i collects the level-i walker's proposals.
void pt_sweep(TemperLadder& ladder, RbmEvaluator& eval, const HamiltonianSpec& ham,
              std::vector<StepStats>& level_stats);

struct SamplerOptions {
  int chain_count = 1;
  int levels = 1;  // 1 = plain Metropolis; > 1 = tempering ladder per chain
  int swap_interval = 1;
  std::uint64_t seed = 123;
  Backend backend = Backend::direct;
  int workers = 0;  // 0 = VMC_WORKERS env, then hardware
};

// Persistent multi-chain driver. Chains are created once (warm starts across
// run() calls) with per-chain streams split from the master seed as
// stream = 1 + chain * (levels + 1) + level, swap stream at level offset
// `levels`; stream 0 is reserved for parameter initialisation.
// run() advances every chain `steps` within-level steps (PT sweeps when
// tempered), recording the level-m walker every `stride` steps into a
// chain-major SampleBatch. Chains advance on a worker pool; outputs are laid
// out by chain index, so results are independent of the worker count.
class MultiChainSampler {
 public:
  MultiChainSampler(const HamiltonianSpec& ham, const SamplerOptions& opts);

  SampleBatch run(const RbmParams& params, long steps, long stride, bool want_deriv);

  int chain_count() const { return static_cast<int>(ladders_.size()); }
  int levels() const { return levels_; }
  const HamiltonianSpec& hamiltonian() const { return ham_; }

  std::vector<double> acceptance_rates() const;  // per chain, level-m walker
  std::vector<SwapStat> swap_totals() const;     // per pair, summed over chains
  long zero_amplitude_total() const;
  void reset_stats();

  // direct access for tests / warm-start inspection
  const TemperLadder& ladder(int chain) const { return ladders_[chain]; }

 private:
  HamiltonianSpec ham_;
  SamplerOptions opts_;
  int levels_;
  std::vector<TemperLadder> ladders_;
  std::vector<StepStats> level_stats_;  // per (chain, level)
};

}  // namespace spinvmc
