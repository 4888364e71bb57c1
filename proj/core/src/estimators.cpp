#include "spinvmc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "spinvmc/errors.hpp"
#include "spinvmc/parallel.hpp"

namespace spinvmc {

SampleBatch merge_batches(const SampleBatch& a, const SampleBatch& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  require(a.param_count() == b.param_count(), ErrorKind::shape_mismatch,
          "merged batches disagree on parameter count");
  const bool wa = a.weights.size() > 0, wb = b.weights.size() > 0;
  require(wa == wb, ErrorKind::shape_mismatch,
          "cannot merge weighted and unweighted batches");
  const bool da = a.eloc_deriv.size() > 0, db = b.eloc_deriv.size() > 0;
  require(da == db, ErrorKind::shape_mismatch,
          "cannot merge batches with and without local-energy derivatives");

  SampleBatch out;
  out.configs = a.configs;
  out.configs.insert(out.configs.end(), b.configs.begin(), b.configs.end());
  out.nu.resize(a.rows() + b.rows(), a.param_count());
  out.nu << a.nu, b.nu;
  out.eloc.resize(a.rows() + b.rows());
  out.eloc << a.eloc, b.eloc;
  if (da) {
    out.eloc_deriv.resize(out.rows(), a.param_count());
    out.eloc_deriv << a.eloc_deriv, b.eloc_deriv;
  }
  if (wa) {
    out.weights.resize(out.rows());
    out.weights << a.weights, b.weights;
  }
  if (a.chain_count > 0 && b.chain_count > 0 && a.rows_per_chain == b.rows_per_chain) {
    out.chain_count = a.chain_count + b.chain_count;
    out.rows_per_chain = a.rows_per_chain;
  }
  return out;
}

EstimatorSet estimate(const SampleBatch& batch) {
  const long T = batch.rows();
  require(T >= 2, ErrorKind::insufficient_samples,
          "estimation needs at least 2 samples, got " + std::to_string(T));
  const int p = batch.param_count();
  require(p >= 1, ErrorKind::shape_mismatch, "batch carries no parameter derivatives");
  require(batch.nu.rows() == T, ErrorKind::shape_mismatch, "nu row count mismatch");

  Eigen::VectorXd w;
  if (batch.weights.size() > 0) {
    require(batch.weights.size() == T, ErrorKind::shape_mismatch, "weight length mismatch");
    const double tot = batch.weights.sum();
    require(tot > 0 && std::isfinite(tot), ErrorKind::data_error,
            "batch weights must sum to a positive finite value");
    w = batch.weights / tot;
  } else {
    w = Eigen::VectorXd::Constant(T, 1.0 / static_cast<double>(T));
  }
  const Eigen::VectorXcd wc = w.cast<cx>();

  EstimatorSet est;
  est.sample_count = T;
  est.energy = wc.dot(batch.eloc);  // dot conjugates the left slot; wc is real

  const Eigen::VectorXcd mu = batch.nu.transpose() * wc;          // E[nu]
  const Eigen::MatrixXcd wnu = w.asDiagonal() * batch.nu;          // T x p
  est.grad = batch.nu.adjoint() * (w.asDiagonal() * batch.eloc)    // E[conj(nu) eloc]
             - mu.conjugate() * est.energy;

  const Eigen::MatrixXcd cov_raw = batch.nu.adjoint() * wnu - mu.conjugate() * mu.transpose();
  est.metric = 0.5 * (cov_raw + cov_raw.adjoint());

  if (batch.eloc_deriv.size() > 0) {
    require(batch.eloc_deriv.rows() == T && batch.eloc_deriv.cols() == p,
            ErrorKind::shape_mismatch, "eloc_deriv shape mismatch");
    const Eigen::VectorXcd lam = batch.eloc_deriv.transpose() * wc;  // E[eloc_deriv]
    const Eigen::MatrixXcd cov_h =
        batch.nu.adjoint() * (w.asDiagonal() * batch.eloc_deriv) -
        mu.conjugate() * lam.transpose();
    // the raw (unsymmetrized) covariance enters here; symmetrizing first
    // breaks the finite-difference identity
    est.hess = cov_h - est.grad * mu.transpose() - est.energy * cov_raw;
  }

  // energy dispersion: batch-means asymptotic variance per chain when the
  // batch carries chain structure with enough rows, else plain population
  // variance (the exact-summation case)
  bool used_chain = false;
  if (batch.weights.size() == 0 && batch.chain_count > 0 && batch.rows_per_chain >= 4 &&
      batch.chain_count * batch.rows_per_chain == T) {
    double acc = 0;
    for (int c = 0; c < batch.chain_count; ++c)
      acc += asymptotic_variance(batch.eloc.segment(c * batch.rows_per_chain,
                                                    batch.rows_per_chain));
    est.energy_variance = acc / batch.chain_count;
    used_chain = true;
  }
  if (!used_chain) {
    const Eigen::VectorXcd centered = batch.eloc.array() - est.energy;
    est.energy_variance = (w.array() * centered.array().abs2()).sum();
  }
  return est;
}

SampleBatch exact_batch(const HamiltonianSpec& ham, const RbmParams& p, bool want_deriv) {
  const int n = ham.lattice.n;
  require(n <= 16, ErrorKind::size_cap,
          "exact summation is capped at 16 sites, got " + std::to_string(n));
  p.validate();
  require(p.n == n, ErrorKind::shape_mismatch, "parameter size does not match lattice");

  const long dim = 1L << n;
  const int pc = p.param_count();
  SampleBatch batch;
  batch.configs.reserve(dim);
  for (long idx = 0; idx < dim; ++idx) batch.configs.push_back(SpinConfig::from_index(idx, n));
  batch.nu.resize(dim, pc);
  batch.eloc.resize(dim);
  batch.weights.resize(dim);
  if (want_deriv) batch.eloc_deriv.resize(dim, pc);

  // pass 1: log psi for every basis state, reused for all amplitude ratios
  Eigen::VectorXcd lp(dim);
  const int workers = std::min<long>(resolve_workers(0), dim);
  {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wkr = 0; wkr < workers; ++wkr)
      pool.emplace_back([&, wkr] {
        RbmEvaluator eval(ham.lattice);
        eval.bind(p);
        for (long idx = wkr; idx < dim; idx += workers)
          lp[idx] = eval.log_psi(batch.configs[idx]);
      });
    for (auto& t : pool) t.join();
  }

  const double max_re = lp.real().maxCoeff();
  require(std::isfinite(max_re), ErrorKind::zero_amplitude,
          "wavefunction vanishes on the whole basis");
  for (long idx = 0; idx < dim; ++idx)
    batch.weights[idx] = std::exp(2.0 * (lp[idx].real() - max_re));

  // pass 2: nu rows and local energies via table lookups
  {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wkr = 0; wkr < workers; ++wkr)
      pool.emplace_back([&, wkr] {
        RbmEvaluator eval(ham.lattice);
        eval.bind(p);
        for (long idx = wkr; idx < dim; idx += workers) {
          if (batch.weights[idx] == 0.0) {
            batch.nu.row(idx).setZero();
            batch.eloc[idx] = 0;
            if (want_deriv) batch.eloc_deriv.row(idx).setZero();
            continue;
          }
          batch.nu.row(idx) = eval.log_derivatives(batch.configs[idx]);
          const Connections con = connections(ham, batch.configs[idx]);
          cx e = con.diagonal;
          Eigen::RowVectorXcd ed;
          if (want_deriv) ed = con.diagonal * batch.nu.row(idx);
          for (const auto& f : con.flips) {
            long jdx = idx ^ (1L << (n - 1 - f[0]));
            if (f[1] >= 0) jdx ^= 1L << (n - 1 - f[1]);
            const cx ratio = std::exp(lp[jdx] - lp[idx]);
            e += con.element * ratio;
            if (want_deriv && ratio != 0.0)
              ed += (con.element * ratio) * eval.log_derivatives(batch.configs[jdx]).transpose();
          }
          batch.eloc[idx] = e;
          if (want_deriv) batch.eloc_deriv.row(idx) = ed;
        }
      });
    for (auto& t : pool) t.join();
  }
  return batch;
}

double asymptotic_variance(const Eigen::VectorXcd& series) {
  const long T = series.size();
  require(T >= 4, ErrorKind::insufficient_samples,
          "batch means need at least 4 points, got " + std::to_string(T));
  const long B = static_cast<long>(std::floor(std::sqrt(static_cast<double>(T))));
  const long K = T / B;
  require(K >= 2, ErrorKind::insufficient_samples, "batch means need at least 2 full batches");
  Eigen::VectorXcd means(K);
  for (long k = 0; k < K; ++k) means[k] = series.segment(k * B, B).mean();
  const cx grand = means.mean();
  return static_cast<double>(B) / static_cast<double>(K - 1) *
         (means.array() - grand).abs2().sum();
}

BlockedMoments::BlockedMoments(int chains, long block_len, int param_count)
    : chains_(chains), block_len_(block_len), p_(param_count) {
  require(chains >= 1, ErrorKind::config_error, "need at least one chain");
  require(block_len >= 1, ErrorKind::config_error, "block length must be positive");
  require(param_count >= 1, ErrorKind::config_error, "parameter count must be positive");
  sum_nu_conj_ = Eigen::VectorXcd::Zero(p_);
  sum_nu_conj_e_ = Eigen::VectorXcd::Zero(p_);
  acc_.resize(chains);
  for (auto& a : acc_) {
    a.current.sum_nu_conj = Eigen::VectorXcd::Zero(p_);
    a.current.sum_nu_conj_e = Eigen::VectorXcd::Zero(p_);
  }
}

void BlockedMoments::add(const SampleBatch& batch) {
  require(batch.chain_count == chains_, ErrorKind::shape_mismatch,
          "batch chain count does not match the accumulator");
  require(batch.param_count() == p_, ErrorKind::shape_mismatch,
          "batch parameter count does not match the accumulator");
  require(batch.chain_count * batch.rows_per_chain == batch.rows(), ErrorKind::shape_mismatch,
          "batch rows are not chain-major");
  for (int c = 0; c < chains_; ++c) {
    ChainAcc& a = acc_[c];
    const long base = c * batch.rows_per_chain;
    for (long r = 0; r < batch.rows_per_chain; ++r) {
      const long row = base + r;
      const cx e = batch.eloc[row];
      a.current.sum_e += e;
      a.current.sum_nu_conj += batch.nu.row(row).conjugate();
      a.current.sum_nu_conj_e += batch.nu.row(row).conjugate() * e;
      sum_e_ += e;
      sum_nu_conj_ += batch.nu.row(row).conjugate();
      sum_nu_conj_e_ += batch.nu.row(row).conjugate() * e;
      ++total_;
      if (++a.fill == block_len_) {
        a.done.push_back(std::move(a.current));
        a.current.sum_e = 0;
        a.current.sum_nu_conj = Eigen::VectorXcd::Zero(p_);
        a.current.sum_nu_conj_e = Eigen::VectorXcd::Zero(p_);
        a.fill = 0;
      }
    }
  }
}

BlockedMoments::Result BlockedMoments::finalize() const {
  require(total_ >= 2, ErrorKind::insufficient_samples, "need at least 2 samples");
  long blocks = 0;
  for (const auto& a : acc_) blocks += static_cast<long>(a.done.size());
  require(blocks >= 2, ErrorKind::insufficient_samples,
          "need at least 2 full blocks for standard errors");

  Result res;
  res.sample_count = total_;
  res.block_count = blocks;
  const double inv_t = 1.0 / static_cast<double>(total_);
  res.energy = sum_e_ * inv_t;
  const Eigen::VectorXcd mu_conj = sum_nu_conj_ * inv_t;
  res.grad = sum_nu_conj_e_ * inv_t - mu_conj * res.energy;

  // per-block means of the plug-in pointwise estimates; global means enter
  // every block identically, which is the usual large-sample approximation
  const double bl = static_cast<double>(block_len_);
  Eigen::VectorXcd e_means(blocks);
  Eigen::MatrixXcd g_means(blocks, p_);
  long k = 0;
  for (const auto& a : acc_)
    for (const auto& b : a.done) {
      e_means[k] = b.sum_e / bl;
      // block mean of g'(sigma) = conj(nu - E[nu]) (eloc - Ehat)
      g_means.row(k) = (b.sum_nu_conj_e / bl - mu_conj * (b.sum_e / bl) -
                        (b.sum_nu_conj / bl) * res.energy + mu_conj * res.energy)
                           .transpose();
      ++k;
    }
  // asymptotic variance v^2 = B/(K-1) sum |m_k - grand|^2 over the K full
  // blocks, standard error of the grand mean sqrt(v^2 / (K B))
  const double denom = bl * static_cast<double>(blocks);
  const cx e_grand = e_means.mean();
  const double v2_e =
      bl / static_cast<double>(blocks - 1) * (e_means.array() - e_grand).abs2().sum();
  res.se_energy = std::sqrt(v2_e / denom);
  res.se_grad.resize(p_);
  const Eigen::RowVectorXcd g_grand = g_means.colwise().mean();
  for (int i = 0; i < p_; ++i) {
    const double v2 = bl / static_cast<double>(blocks - 1) *
                      (g_means.col(i).array() - g_grand[i]).abs2().sum();
    res.se_grad[i] = std::sqrt(v2 / denom);
  }
  return res;
}

}  // namespace spinvmc
