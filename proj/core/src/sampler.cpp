#include "spinvmc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "spinvmc/errors.hpp"
#include "spinvmc/parallel.hpp"

namespace spinvmc {

SpinConfig init_config(const HamiltonianSpec& ham, Rng& rng) {
  const int n = ham.lattice.n;
  SpinConfig s(n);
  if (ham.model == Model::tfi) {
    for (int i = 0; i < n; ++i) s[i] = rng.uniform_int(2) == 0 ? 1 : -1;
    return s;
  }
  // balanced sector: draw a uniform half-up configuration, then negate the B
  // sublattice; the map is a bijection from zero magnetization onto
  // sum_A s == sum_B s
  SpinConfig base(n);
  for (int i = 0; i < n; ++i) base[i] = i < n / 2 ? 1 : -1;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(base[i], base[j]);
  }
  for (int i = 0; i < n; ++i)
    s[i] = ham.lattice.sublattice[i] == 0 ? base[i] : static_cast<std::int8_t>(-base[i]);
  return s;
}

void metropolis_step(ChainState& chain, RbmEvaluator& eval, const HamiltonianSpec& ham,
                     double beta_exponent, StepStats& stats) {
  const int n = ham.lattice.n;
  ++stats.proposals;

  int f0 = -1, f1 = -1;
  if (ham.model == Model::tfi) {
    f0 = static_cast<int>(chain.rng.uniform_int(n));
  } else {
    const auto& a = ham.lattice.a_sites;
    const auto& b = ham.lattice.b_sites;
    f0 = a[chain.rng.uniform_int(a.size())];
    f1 = b[chain.rng.uniform_int(b.size())];
    if (chain.config[f0] != chain.config[f1]) return;  // move class empty here
  }

  chain.config.flip(f0);
  if (f1 >= 0) chain.config.flip(f1);
  const double lw = eval.log_weight(chain.config);
  if (lw == -std::numeric_limits<double>::infinity()) {
    ++stats.zero_amplitude;
    chain.config.flip(f0);
    if (f1 >= 0) chain.config.flip(f1);
    return;
  }
  const double u = chain.rng.uniform();
  if (u < std::exp(beta_exponent * (lw - chain.log_weight))) {
    chain.log_weight = lw;
    ++stats.accepts;
  } else {
    chain.config.flip(f0);
    if (f1 >= 0) chain.config.flip(f1);
  }
}

void pt_sweep(TemperLadder& ladder, RbmEvaluator& eval, const HamiltonianSpec& ham,
              std::vector<StepStats>& level_stats) {
  const int m = ladder.m;
  require(static_cast<int>(level_stats.size()) == m + 1, ErrorKind::shape_mismatch,
          "per-level stats size must be m + 1");

  // level 0 targets the flat sector law; fresh draws are exact, so every
  // proposal is accepted
  {
    ChainState& c0 = ladder.chains[0];
    c0.config = init_config(ham, c0.rng);
    c0.log_weight = eval.log_weight(c0.config);
    ++level_stats[0].proposals;
    ++level_stats[0].accepts;
  }
  for (int i = 1; i <= m; ++i)
    metropolis_step(ladder.chains[i], eval, ham, static_cast<double>(i) / m, level_stats[i]);

  if (ladder.sweep_count % ladder.swap_interval == 0) {
    const long parity = (ladder.sweep_count / ladder.swap_interval) % 2;
    for (int i = static_cast<int>(parity); i + 1 <= m; i += 2) {
      ++ladder.swap_stats[i].attempts;
      const double delta =
          (ladder.chains[i].log_weight - ladder.chains[i + 1].log_weight) / m;
      // -inf minus -inf is nan; exp(nan) compares false, so such swaps reject
      if (ladder.swap_rng.uniform() < std::exp(delta)) {
        std::swap(ladder.chains[i].config, ladder.chains[i + 1].config);
        std::swap(ladder.chains[i].log_weight, ladder.chains[i + 1].log_weight);
        ++ladder.swap_stats[i].accepts;
      }
    }
  }
  ++ladder.sweep_count;
}

MultiChainSampler::MultiChainSampler(const HamiltonianSpec& ham, const SamplerOptions& opts)
    : ham_(ham), opts_(opts), levels_(opts.levels) {
  require(opts.chain_count >= 1, ErrorKind::config_error, "need at least one chain");
  require(opts.levels >= 1, ErrorKind::config_error, "need at least one level");
  require(opts.swap_interval >= 1, ErrorKind::config_error, "swap interval must be positive");

  ladders_.reserve(opts.chain_count);
  for (int c = 0; c < opts.chain_count; ++c) {
    TemperLadder lad;
    lad.m = levels_ - 1;
    lad.swap_interval = opts.swap_interval;
    lad.swap_stats.resize(std::max(0, levels_ - 1));
    const std::uint64_t chain_base = 1 + static_cast<std::uint64_t>(c) * (levels_ + 1);
    for (int l = 0; l < levels_; ++l) {
      ChainState cs;
      cs.rng = Rng(opts.seed, chain_base + l);
      cs.level = l;
      cs.config = init_config(ham_, cs.rng);
      cs.log_weight = std::numeric_limits<double>::quiet_NaN();  // until first bind
      lad.chains.push_back(std::move(cs));
    }
    lad.swap_rng = Rng(opts.seed, chain_base + levels_);
    ladders_.push_back(std::move(lad));
  }
  level_stats_.assign(static_cast<std::size_t>(opts.chain_count) * levels_, StepStats{});
}

SampleBatch MultiChainSampler::run(const RbmParams& params, long steps, long stride,
                                   bool want_deriv) {
  params.validate();
  require(params.n == ham_.lattice.n, ErrorKind::shape_mismatch,
          "parameter size does not match the sampler lattice");
  require(stride >= 1, ErrorKind::config_error, "record stride must be positive");
  require(steps >= stride, ErrorKind::insufficient_samples,
          "fewer steps than one record stride");

  const long records = steps / stride;
  const int chains = chain_count();
  const int pc = params.param_count();

  SampleBatch batch;
  batch.configs.resize(static_cast<std::size_t>(chains) * records);
  batch.nu.resize(chains * records, pc);
  batch.eloc.resize(chains * records);
  if (want_deriv) batch.eloc_deriv.resize(chains * records, pc);
  batch.chain_count = chains;
  batch.rows_per_chain = records;

  const int workers = std::min(resolve_workers(opts_.workers), chains);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int wkr = 0; wkr < workers; ++wkr)
    pool.emplace_back([&, wkr] {
      try {
        RbmEvaluator eval(ham_.lattice, opts_.backend);
        eval.bind(params);
        for (int c = wkr; c < chains; c += workers) {
          TemperLadder& lad = ladders_[c];
          // cached weights belong to the previous parameter set; refresh
          for (auto& cs : lad.chains) cs.log_weight = eval.log_weight(cs.config);
          std::vector<StepStats> stats(levels_);
          long rec = 0;
          for (long s = 1; s <= steps; ++s) {
            if (levels_ == 1)
              metropolis_step(lad.chains[0], eval, ham_, 1.0, stats[0]);
            else
              pt_sweep(lad, eval, ham_, stats);
            if (s % stride == 0) {
              const long row = static_cast<long>(c) * records + rec;
              const ChainState& top = lad.chains[levels_ - 1];
              batch.configs[row] = top.config;
              const LocalObservables obs =
                  local_observables(ham_, params, eval, top.config, want_deriv);
              batch.nu.row(row) = obs.nu;
              batch.eloc[row] = obs.eloc;
              if (want_deriv) batch.eloc_deriv.row(row) = obs.eloc_deriv;
              ++rec;
            }
          }
          for (int l = 0; l < levels_; ++l) {
            StepStats& agg = level_stats_[static_cast<std::size_t>(c) * levels_ + l];
            agg.proposals += stats[l].proposals;
            agg.accepts += stats[l].accepts;
            agg.zero_amplitude += stats[l].zero_amplitude;
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return batch;
}

std::vector<double> MultiChainSampler::acceptance_rates() const {
  std::vector<double> rates(chain_count(), 0.0);
  for (int c = 0; c < chain_count(); ++c) {
    const StepStats& top = level_stats_[static_cast<std::size_t>(c) * levels_ + levels_ - 1];
    if (top.proposals > 0)
      rates[c] = static_cast<double>(top.accepts) / static_cast<double>(top.proposals);
  }
  return rates;
}

std::vector<SwapStat> MultiChainSampler::swap_totals() const {
  std::vector<SwapStat> tot(std::max(0, levels_ - 1));
  for (const auto& lad : ladders_)
    for (std::size_t i = 0; i < lad.swap_stats.size(); ++i) {
      tot[i].attempts += lad.swap_stats[i].attempts;
      tot[i].accepts += lad.swap_stats[i].accepts;
    }
  return tot;
}

long MultiChainSampler::zero_amplitude_total() const {
  long tot = 0;
  for (const auto& st : level_stats_) tot += st.zero_amplitude;
  return tot;
}

void MultiChainSampler::reset_stats() {
  std::fill(level_stats_.begin(), level_stats_.end(), StepStats{});
  for (auto& lad : ladders_)
    std::fill(lad.swap_stats.begin(), lad.swap_stats.end(), SwapStat{});
}

}  // namespace spinvmc
