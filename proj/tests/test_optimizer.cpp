#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "spinvmc/exact.hpp"
#include "spinvmc/optimizer.hpp"

using namespace spinvmc;

namespace {

EstimatorSet hand_set(Eigen::VectorXcd g, Eigen::MatrixXcd s, Eigen::MatrixXcd h) {
  EstimatorSet est;
  est.grad = std::move(g);
  est.metric = std::move(s);
  est.hess = std::move(h);
  est.sample_count = 2;
  return est;
}

UpdateResult update_of_norm(double norm) {
  UpdateResult u;
  u.delta = Eigen::VectorXcd::Constant(1, cx(norm, 0));
  return u;
}

}  // namespace

TEST_CASE("penalty schedules and their ramp") {
  for (auto kind : {OptimizerKind::gd, OptimizerKind::ngd}) {
    auto s = default_schedule(kind);
    CHECK(s.eps_min == 1e-3);
    CHECK(s.eps_max == 1e-2);
    CHECK(s.eta_min == 1e-3);
    CHECK(s.eta_max == 1e-3);
    CHECK(s.ramp == 500);
  }
  auto r = default_schedule(OptimizerKind::rgn);
  CHECK(r.eps_min == 1e-3);
  CHECK(r.eps_max == 1e3);
  CHECK(r.eta_min == 1e-3);
  CHECK(r.eta_max == 1e-1);
  CHECK(r.ramp == 500);

  // geometric interpolation: halfway up the rgn ramp sits at the midpoint
  // of the exponents
  auto [eps, eta] = schedule_values(r, 250);
  CHECK(eps == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eta == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(schedule_values(r, 0).first == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(schedule_values(r, 500).first == doctest::Approx(1e3).epsilon(1e-12));
  CHECK(schedule_values(r, 5000).first == doctest::Approx(1e3).epsilon(1e-12));
  CHECK(schedule_values(r, 5000).second == doctest::Approx(1e-1).epsilon(1e-12));

  PenaltySchedule bad = r;
  bad.ramp = 0;
  CHECK_THROWS_AS(schedule_values(bad, 1), Error);
  bad = r;
  bad.eps_min = 0;
  CHECK_THROWS_AS(schedule_values(bad, 1), Error);
  bad = r;
  bad.eps_max = 1e-4;  // below the minimum
  CHECK_THROWS_AS(schedule_values(bad, 1), Error);
  CHECK_THROWS_AS(schedule_values(r, -1), Error);
}

TEST_CASE("update solves against hand-computed preconditioners") {
  SUBCASE("plain gradient step") {
    Eigen::VectorXcd g(2);
    g << cx(1, 2), cx(-3, 0.5);
    auto est = hand_set(g, {}, {});
    auto upd = compute_update(OptimizerKind::gd, est, 0.02, 0.7);
    CHECK(upd.delta.cwiseEqual((-0.02 * g).eval()).all());
    CHECK(upd.residual == 0.0);
    CHECK(!upd.least_squares);
  }

  SUBCASE("metric-preconditioned step") {
    // P = (diag(2,1) + 0.5 I)/0.1 = diag(25, 15); g = (1, 2)
    Eigen::VectorXcd g(2);
    g << 1.0, 2.0;
    Eigen::MatrixXcd s = Eigen::Vector2d(2.0, 1.0).asDiagonal();
    auto upd = compute_update(OptimizerKind::ngd, hand_set(g, s, {}), 0.1, 0.5);
    CHECK(upd.delta(0).real() == doctest::Approx(-0.04).epsilon(1e-14));
    CHECK(upd.delta(1).real() == doctest::Approx(-2.0 / 15).epsilon(1e-14));
    CHECK(std::abs(upd.delta(0).imag()) < 1e-16);
    CHECK(upd.residual < 1e-12);
  }

  SUBCASE("curvature step") {
    // P = diag(1,2) + (I + 0)/1 = diag(2,3); g = (1, 1)
    Eigen::VectorXcd g = Eigen::VectorXcd::Ones(2);
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd h = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    auto upd = compute_update(OptimizerKind::rgn, hand_set(g, s, h), 1.0, 0.0);
    CHECK(upd.delta(0).real() == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(upd.delta(1).real() == doctest::Approx(-1.0 / 3).epsilon(1e-14));
  }

  SUBCASE("curvature term washes out as eps shrinks") {
    Rng rng(211);
    const int p = 4;
    Eigen::VectorXcd g(p);
    Eigen::MatrixXcd r(p, p), q(p, p);
    for (int i = 0; i < p; ++i) {
      g(i) = cx(rng.normal(), rng.normal());
      for (int j = 0; j < p; ++j) {
        r(i, j) = cx(rng.normal(), rng.normal());
        q(i, j) = cx(rng.normal(), rng.normal());
      }
    }
    Eigen::MatrixXcd s = r * r.adjoint() + Eigen::MatrixXcd::Identity(p, p);
    Eigen::MatrixXcd h = q + q.adjoint();
    auto rgn = compute_update(OptimizerKind::rgn, hand_set(g, s, h), 1e-9, 0.3);
    auto ngd = compute_update(OptimizerKind::ngd, hand_set(g, s, {}), 1e-9, 0.3);
    CHECK((rgn.delta - ngd.delta).norm() < 1e-6 * ngd.delta.norm());
  }

  SUBCASE("rank-deficient preconditioner falls back to least squares") {
    Eigen::VectorXcd g(2);
    g << 3.0, -4.0;
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
    auto upd = compute_update(OptimizerKind::ngd, hand_set(g, s, {}), 1.0, 0.0);
    CHECK(upd.least_squares);
    CHECK(upd.delta.norm() == 0.0);  // minimal-norm solution of 0 delta = -g
    CHECK(upd.residual == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("input validation") {
    EstimatorSet empty;
    CHECK_THROWS_AS(compute_update(OptimizerKind::gd, empty, 0.1, 0.0), Error);

    Eigen::VectorXcd g = Eigen::VectorXcd::Ones(2);
    try {
      compute_update(OptimizerKind::gd, hand_set(g, {}, {}), 0.0, 0.0);
      FAIL("expected config_error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config_error);
    }
    try {
      compute_update(OptimizerKind::ngd, hand_set(g, Eigen::MatrixXcd::Identity(3, 3), {}),
                     0.1, 0.0);
      FAIL("expected shape_mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::shape_mismatch);
    }
    try {
      compute_update(OptimizerKind::rgn,
                     hand_set(g, Eigen::MatrixXcd::Identity(2, 2), {}), 0.1, 0.0);
      FAIL("expected missing_field");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::missing_field);
    }
  }
}

TEST_CASE("step guard shrinks, restarts the schedule, and eventually forces") {
  PenaltySchedule sched = default_schedule(OptimizerKind::rgn);

  SUBCASE("first update is always accepted") {
    GuardState guard;
    sched.position = 7;
    auto out = apply_guard(guard, sched, [](double) { return UpdateResult{}; },
                           update_of_norm(1e9), 0.5);
    CHECK(!out.triggered);
    CHECK(out.shrinks == 0);
    CHECK(out.eps == 0.5);
    CHECK(guard.prev_update_norm == 1e9);
    CHECK(sched.position == 7);
  }

  SUBCASE("the doubling boundary is inclusive") {
    GuardState guard;
    guard.prev_update_norm = 1.0;
    sched.position = 3;
    auto out = apply_guard(guard, sched, [](double) { return UpdateResult{}; },
                           update_of_norm(2.0), 0.5);
    CHECK(!out.triggered);
    CHECK(guard.prev_update_norm == 2.0);
    CHECK(sched.position == 3);
    CHECK(guard.trigger_count == 0);
  }

  SUBCASE("a violation shrinks eps until the norm fits") {
    GuardState guard;
    guard.prev_update_norm = 1.0;
    sched.position = 9;
    std::vector<double> norms{2.5, 1.8};
    int call = 0;
    std::vector<double> eps_seen;
    auto out = apply_guard(
        guard, sched,
        [&](double e) {
          eps_seen.push_back(e);
          return update_of_norm(norms[call++]);
        },
        update_of_norm(3.0), 0.5);
    CHECK(out.triggered);
    CHECK(out.shrinks == 2);
    CHECK(!out.forced);
    CHECK(out.eps == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(eps_seen.size() == 2);
    CHECK(eps_seen[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(eps_seen[1] == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(out.update.delta.norm() == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(guard.prev_update_norm == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(guard.trigger_count == 1);
    CHECK(sched.position == 0);
  }

  SUBCASE("ten failed shrinks force the final update") {
    GuardState guard;
    guard.prev_update_norm = 1.0;
    int calls = 0;
    auto out = apply_guard(
        guard, sched, [&](double) { ++calls; return update_of_norm(10.0); },
        update_of_norm(5.0), 1.0);
    CHECK(out.triggered);
    CHECK(out.forced);
    CHECK(out.shrinks == 10);
    CHECK(calls == 10);
    CHECK(out.eps == doctest::Approx(1e-10).epsilon(1e-9));
    CHECK(guard.prev_update_norm == 10.0);
  }
}

TEST_CASE("deterministic optimization drives the energy down") {
  auto lat = build_lattice({4});
  auto ham = make_hamiltonian(Model::tfi, 1.0, lat);
  auto init = init_params(2, 4, 0.05, 5);
  const double e0 = ground_state(ham).energy;

  PenaltySchedule sched;
  sched.eps_min = 0.05;
  sched.eps_max = 1e3;
  sched.eta_min = 1e-3;
  sched.eta_max = 1e-1;
  sched.ramp = 40;

  const auto ckpt_dir = std::filesystem::temp_directory_path() / "spinvmc_opt_ckpt";
  std::filesystem::remove_all(ckpt_dir);
  std::filesystem::create_directories(ckpt_dir);

  OptimizeOptions opts;
  opts.iterations = 60;
  opts.exact = true;
  opts.keep_param_history = true;
  opts.checkpoint_stride = 20;
  opts.checkpoint_prefix = (ckpt_dir / "run").string();

  auto res = optimize(ham, init, OptimizerKind::rgn, sched, opts, nullptr);

  REQUIRE(res.trace.size() == 60);
  REQUIRE(res.param_history.size() == 61);
  CHECK(res.param_history[0].cwiseEqual(init.flatten()).all());

  CHECK(res.trace.back().energy.real() < res.trace.front().energy.real());
  CHECK(std::abs(res.trace.back().energy.real() - e0) < 1e-4 * std::abs(e0));
  for (const auto& rec : res.trace) {
    CHECK(std::abs(rec.energy.imag()) < 1e-10);
    CHECK(rec.variance >= 0.0);
    CHECK(rec.seconds >= 0.0);
    CHECK(rec.residual < 1e-8);
  }
  // iteration index is the trace row
  for (std::size_t k = 0; k < res.trace.size(); ++k)
    CHECK(res.trace[k].iter == static_cast<long>(k));

  if (res.guard_triggers == 0) {
    // schedule position then advances one per iteration
    for (long k : {0L, 5L, 45L}) {
      auto [eps, eta] = schedule_values(sched, static_cast<int>(k));
      CHECK(res.trace[k].eps == doctest::Approx(eps).epsilon(1e-12));
      CHECK(res.trace[k].eta == doctest::Approx(eta).epsilon(1e-12));
      CHECK(res.trace[k].guard == 0);
    }
  }

  // periodic checkpoints hold the post-update parameters, losslessly
  for (long it : {20L, 40L, 60L}) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_iter%06ld.ckpt", it);
    auto loaded = load_checkpoint((ckpt_dir / ("run" + std::string(suffix))).string());
    CHECK(loaded.flatten().cwiseEqual(res.param_history[it]).all());
  }
  std::filesystem::remove_all(ckpt_dir);
}

TEST_CASE("sampled optimization runs and reports mixing statistics") {
  auto lat = build_lattice({4});
  auto ham = make_hamiltonian(Model::tfi, 1.0, lat);
  auto init = init_params(1, 4, 0.05, 9);

  MultiChainSampler sampler(ham, {.chain_count = 4, .levels = 1, .swap_interval = 1,
                                  .seed = 33, .backend = Backend::direct, .workers = 2});
  OptimizeOptions opts;
  opts.iterations = 5;
  opts.steps_mult = 30;
  auto res = optimize(ham, init, OptimizerKind::gd, default_schedule(OptimizerKind::gd),
                      opts, &sampler);
  REQUIRE(res.trace.size() == 5);
  for (const auto& rec : res.trace) {
    CHECK(rec.variance > 0.0);
    CHECK(rec.update_norm > 0.0);
  }
  CHECK(res.param_history.empty());

  // warm starts: the sampler kept its chains across the five runs
  auto rates = sampler.acceptance_rates();
  REQUIRE(rates.size() == 4);
  for (double r : rates) CHECK(r > 0.0);
}

TEST_CASE("optimization input validation") {
  auto ham = make_hamiltonian(Model::tfi, 1.0, build_lattice({4}));
  auto init = init_params(1, 4, 0.05, 9);
  OptimizeOptions opts;
  opts.iterations = 1;

  try {
    optimize(ham, init, OptimizerKind::gd, default_schedule(OptimizerKind::gd), opts,
             nullptr);
    FAIL("expected missing_field");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_field);
  }

  auto other = make_hamiltonian(Model::tfi, 1.5, build_lattice({4}));
  MultiChainSampler sampler(other, {.chain_count = 1});
  try {
    optimize(ham, init, OptimizerKind::gd, default_schedule(OptimizerKind::gd), opts,
             &sampler);
    FAIL("expected shape_mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape_mismatch);
  }

  opts.exact = true;
  opts.iterations = -1;
  try {
    optimize(ham, init, OptimizerKind::gd, default_schedule(OptimizerKind::gd), opts,
             nullptr);
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config_error);
  }

  opts.iterations = 1;
  try {
    optimize(ham, init_params(1, 6, 0.05, 9), OptimizerKind::gd,
             default_schedule(OptimizerKind::gd), opts, nullptr);
    FAIL("expected shape_mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape_mismatch);
  }
}
