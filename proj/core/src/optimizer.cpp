#include "spinvmc/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "spinvmc/errors.hpp"

namespace spinvmc {

PenaltySchedule default_schedule(OptimizerKind kind) {
  PenaltySchedule s;
  switch (kind) {
    case OptimizerKind::gd:
    case OptimizerKind::ngd:
      s.eps_min = 1e-3;
      s.eps_max = 1e-2;
      s.eta_min = 1e-3;
      s.eta_max = 1e-3;
      break;
    case OptimizerKind::rgn:
      s.eps_min = 1e-3;
      s.eps_max = 1e3;
      s.eta_min = 1e-3;
      s.eta_max = 1e-1;
      break;
  }
  return s;
}

std::pair<double, double> schedule_values(const PenaltySchedule& s, int k) {
  require(s.ramp >= 1, ErrorKind::config_error, "schedule ramp must be positive");
  require(s.eps_min > 0 && s.eta_min > 0, ErrorKind::config_error,
          "schedule minima must be positive");
  require(s.eps_max >= s.eps_min && s.eta_max >= s.eta_min, ErrorKind::config_error,
          "schedule maxima must not undercut the minima");
  require(k >= 0, ErrorKind::config_error, "schedule position must be non-negative");
  const double f = static_cast<double>(std::min(k, s.ramp)) / s.ramp;
  const double eps = s.eps_min * std::pow(s.eps_max / s.eps_min, f);
  const double eta = s.eta_min * std::pow(s.eta_max / s.eta_min, f);
  return {eps, eta};
}

UpdateResult compute_update(OptimizerKind kind, const EstimatorSet& est, double eps,
                            double eta) {
  const long p = est.grad.size();
  require(p >= 1, ErrorKind::shape_mismatch, "estimator set carries no gradient");
  require(eps > 0 && eta >= 0, ErrorKind::config_error, "eps must be positive");

  UpdateResult upd;
  const double gnorm = est.grad.norm();
  if (kind == OptimizerKind::gd) {
    upd.delta = -eps * est.grad;
    upd.residual = 0;  // P = I/eps is solved exactly by construction
    return upd;
  }

  require(est.metric.rows() == p && est.metric.cols() == p, ErrorKind::shape_mismatch,
          "metric shape does not match the gradient");
  Eigen::MatrixXcd P;
  if (kind == OptimizerKind::ngd) {
    P = (est.metric + eta * Eigen::MatrixXcd::Identity(p, p)) / eps;
  } else {
    require(est.hess.rows() == p && est.hess.cols() == p, ErrorKind::missing_field,
            "rgn needs the Hessian estimator (record local-energy derivatives)");
    P = est.hess + (est.metric + eta * Eigen::MatrixXcd::Identity(p, p)) / eps;
  }

  auto residual_of = [&](const Eigen::VectorXcd& d) {
    const double denom = gnorm > 0 ? gnorm : 1.0;
    return (P * d + est.grad).norm() / denom;
  };

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(P);
  upd.delta = lu.solve(-est.grad);
  upd.residual = residual_of(upd.delta);
  if (!upd.delta.allFinite() || !(upd.residual <= 1e-8)) {
    // pivoted LU rejected; rank-revealing least squares
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(P);
    Eigen::VectorXcd alt = cod.solve(-est.grad);
    const double alt_res = residual_of(alt);
    if (alt.allFinite() && (!upd.delta.allFinite() || alt_res < upd.residual)) {
      upd.delta = std::move(alt);
      upd.residual = alt_res;
      upd.least_squares = true;
    }
  }
  require(upd.delta.allFinite(), ErrorKind::solver_failure,
          "update solve produced non-finite entries");
  return upd;
}

GuardOutcome apply_guard(GuardState& guard, PenaltySchedule& sched,
                         const std::function<UpdateResult(double)>& recompute,
                         UpdateResult first, double eps) {
  GuardOutcome out;
  out.update = std::move(first);
  out.eps = eps;

  const double norm0 = out.update.delta.norm();
  if (guard.prev_update_norm < 0 || norm0 <= 2.0 * guard.prev_update_norm) {
    guard.prev_update_norm = norm0;
    return out;
  }

  out.triggered = true;
  ++guard.trigger_count;
  sched.position = 0;  // resume from the schedule floor next iteration
  double norm = norm0;
  while (out.shrinks < 10) {
    out.eps /= 10.0;
    ++out.shrinks;
    out.update = recompute(out.eps);
    norm = out.update.delta.norm();
    if (norm <= 2.0 * guard.prev_update_norm) {
      guard.prev_update_norm = norm;
      return out;
    }
  }
  out.forced = true;  // every shrink still violated the bound; take the last
  guard.prev_update_norm = norm;
  return out;
}

OptimizeResult optimize(const HamiltonianSpec& ham, const RbmParams& init, OptimizerKind kind,
                        PenaltySchedule sched, const OptimizeOptions& opts,
                        MultiChainSampler* sampler) {
  init.validate();
  require(init.n == ham.lattice.n, ErrorKind::shape_mismatch,
          "initial parameters do not match the lattice");
  require(opts.iterations >= 0, ErrorKind::config_error, "iteration count must be non-negative");
  if (!opts.exact) {
    require(sampler != nullptr, ErrorKind::missing_field, "sampling mode needs a sampler");
    require(sampler->hamiltonian().model == ham.model &&
                sampler->hamiltonian().coupling == ham.coupling &&
                sampler->hamiltonian().lattice.n == ham.lattice.n,
            ErrorKind::shape_mismatch, "sampler was built for a different hamiltonian");
  }

  const bool want_deriv = kind == OptimizerKind::rgn;
  const long stride = opts.record_stride > 0 ? opts.record_stride : ham.lattice.n;

  OptimizeResult res;
  res.params = init;
  res.schedule = sched;
  res.trace.reserve(opts.iterations);
  if (opts.keep_param_history) res.param_history.push_back(init.flatten());

  for (long it = 0; it < opts.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [eps, eta] = schedule_values(res.schedule, res.schedule.position);

    const SampleBatch batch =
        opts.exact ? exact_batch(ham, res.params, want_deriv)
                   : sampler->run(res.params, opts.steps_mult * ham.lattice.n, stride,
                                  want_deriv);
    const EstimatorSet est = estimate(batch);

    UpdateResult first = compute_update(kind, est, eps, eta);
    GuardOutcome out = apply_guard(
        res.guard, res.schedule,
        [&](double e) { return compute_update(kind, est, e, eta); }, std::move(first), eps);

    const Eigen::VectorXcd theta = res.params.flatten() + out.update.delta;
    res.params = RbmParams::unflatten(theta, res.params.alpha, res.params.n);
    if (!out.triggered) ++res.schedule.position;
    if (opts.keep_param_history) res.param_history.push_back(theta);

    const auto t1 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iter = it;
    rec.energy = est.energy;
    rec.variance = est.energy_variance;
    rec.eps = out.eps;
    rec.eta = eta;
    rec.update_norm = out.update.delta.norm();
    rec.guard = out.shrinks;
    rec.residual = out.update.residual;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    res.trace.push_back(rec);

    if (opts.checkpoint_stride > 0 && (it + 1) % opts.checkpoint_stride == 0) {
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, "_iter%06ld.ckpt", it + 1);
      save_checkpoint(res.params, opts.checkpoint_prefix + suffix);
    }
  }
  res.guard_triggers = res.guard.trigger_count;
  return res;
}

}  // namespace spinvmc
