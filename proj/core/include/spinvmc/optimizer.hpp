#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spinvmc/estimators.hpp"
#include "spinvmc/sampler.hpp"

namespace spinvmc {

enum class OptimizerKind { gd, ngd, rgn };

// preconditioners, solving P delta = -ghat:
//   gd   P = I / eps
//   ngd  P = (Shat + eta I) / eps
//   rgn  P = Hhat + (Shat + eta I) / eps
// rgn reduces to ngd as eps -> 0.

// geometric ramp value(k) = min (max/min)^(min(k, ramp)/ramp), held at max
struct PenaltySchedule {
  double eps_min = 1e-3;
  double eps_max = 1e-2;
  double eta_min = 1e-3;
  double eta_max = 1e-3;
  int ramp = 500;
  int position = 0;  // iterations since last guard restart
};

PenaltySchedule default_schedule(OptimizerKind kind);
std::pair<double, double> schedule_values(const PenaltySchedule& s, int k);  // (eps, eta)

struct UpdateResult {
  Eigen::VectorXcd delta;
  double residual = 0;        // ||P delta + ghat|| / ||ghat||
  bool least_squares = false; // pivoted LU rejected, rank-revealing fallback used
};

UpdateResult compute_update(OptimizerKind kind, const EstimatorSet& est, double eps, double eta);

// Step-size guard: a proposed |delta| > 2 |previous accepted delta| shrinks
// eps tenfold and recomputes, up to 10 times (the last attempt is accepted
// regardless, flagged forced); any trigger restarts the schedule position so
// the next iteration resumes from (eps_min, eta_min). eta is held fixed
// during recomputation.
struct GuardState {
  double prev_update_norm = -1;  // < 0 until the first accepted update
  long trigger_count = 0;
};

struct GuardOutcome {
  UpdateResult update;
  double eps = 0;  // eps actually used
  int shrinks = 0;
  bool triggered = false;
  bool forced = false;
};

GuardOutcome apply_guard(GuardState& guard, PenaltySchedule& sched,
                         const std::function<UpdateResult(double)>& recompute,
                         UpdateResult first, double eps);

struct IterationRecord {
  long iter = 0;
  cx energy{};
  double variance = 0;     // batch-means v^2 (sampling) or Var_rho[E_loc] (exact)
  double eps = 0;          // value actually used after any guard shrinks
  double eta = 0;
  double update_norm = 0;
  int guard = 0;           // shrink count, 0 = guard silent
  double residual = 0;
  double seconds = 0;      // wall time of the iteration
};

struct OptimizeOptions {
  long iterations = 1000;
  bool exact = false;      // exact summation instead of sampling
  long steps_mult = 20;    // sampling steps per iteration = steps_mult * n
  long record_stride = 0;  // 0 -> n
  long checkpoint_stride = 0;  // 0 -> no periodic checkpoints
  std::string checkpoint_prefix;
  bool keep_param_history = false;  // store theta_0 .. theta_iters (flattened)
};

struct OptimizeResult {
  RbmParams params;
  std::vector<IterationRecord> trace;
  std::vector<Eigen::VectorXcd> param_history;
  long guard_triggers = 0;
  PenaltySchedule schedule;
  GuardState guard;
};

// sampler may be null only in exact mode; it persists across iterations
// (warm starts) and its hamiltonian must match `ham`
OptimizeResult optimize(const HamiltonianSpec& ham, const RbmParams& init,
                        OptimizerKind kind, PenaltySchedule sched,
                        const OptimizeOptions& opts, MultiChainSampler* sampler);

}  // namespace spinvmc
