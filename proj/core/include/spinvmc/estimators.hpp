#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spinvmc/hamiltonian.hpp"

namespace spinvmc {

// Per-sample rows. Covariances below always conjugate the first slot,
// Cov[a, b] = E[conj(a) b] - conj(E[a]) E[b].
struct SampleBatch {
  std::vector<SpinConfig> configs;  // raw sampler states (not canonicalized)
  Eigen::MatrixXcd nu;              // T x p log-derivative rows
  Eigen::VectorXcd eloc;            // T
  Eigen::MatrixXcd eloc_deriv;      // T x p when recorded, else 0 x 0
  Eigen::VectorXd weights;          // exact-summation weights; empty = uniform
  int chain_count = 0;              // > 0: rows chain-major, equal length per chain
  long rows_per_chain = 0;

  long rows() const { return eloc.size(); }
  int param_count() const { return static_cast<int>(nu.cols()); }
};

// row-wise concatenation; both sides must agree on p and weight/derivative
// presence. Chain structure is kept only when both sides carry compatible
// chain counts (merged as additional chains).
SampleBatch merge_batches(const SampleBatch& a, const SampleBatch& b);

struct EstimatorSet {
  cx energy{};                  // Ehat
  Eigen::VectorXcd grad;        // ghat_i = Cov[nu_i, E_loc]
  Eigen::MatrixXcd metric;      // Shat symmetrized to (S + S^H)/2
  Eigen::MatrixXcd hess;        // Hhat_ij = Cov[nu_i, E_loc,j] - ghat_i E[nu_j] - Ehat Shat_ij
  double energy_variance = 0;   // batch-means v^2 for chain batches, population variance otherwise
  long sample_count = 0;
};

// needs >= 2 rows; hess computed only when eloc_deriv rows are present
EstimatorSet estimate(const SampleBatch& batch);

// full 2^n enumeration in basis-index order, weights |psi(sigma)|^2 (stably
// max-shifted); n <= 16
SampleBatch exact_batch(const HamiltonianSpec& ham, const RbmParams& p, bool want_deriv);

// batch-means estimate of the asymptotic variance of an ordered series:
// batch length floor(sqrt(T)), v^2 = B/(K-1) sum_k |m_k - mean|^2. Needs at
// least 2 full batches.
double asymptotic_variance(const Eigen::VectorXcd& series);

// Streaming accumulation of Ehat/ghat plus per-component batch-means standard
// errors over chain-ordered streams, so large sample counts never need to be
// held in memory. Block boundaries are fixed by block_len per chain and are
// insensitive to how rows are split across add() calls.
class BlockedMoments {
 public:
  BlockedMoments(int chains, long block_len, int param_count);

  void add(const SampleBatch& batch);  // batch.chain_count must match

  struct Result {
    cx energy;
    Eigen::VectorXcd grad;
    double se_energy = 0;      // sqrt(v^2_E / T)
    Eigen::VectorXd se_grad;   // per component, batch means of g'(sigma)
    long sample_count = 0;
    long block_count = 0;
  };
  Result finalize() const;  // needs >= 2 full blocks overall

 private:
  int chains_;
  long block_len_;
  int p_;
  long total_ = 0;
  cx sum_e_{};
  Eigen::VectorXcd sum_nu_conj_;    // sum conj(nu)
  Eigen::VectorXcd sum_nu_conj_e_;  // sum conj(nu) * eloc
  struct Block {
    cx sum_e{};
    Eigen::VectorXcd sum_nu_conj;
    Eigen::VectorXcd sum_nu_conj_e;
  };
  struct ChainAcc {
    Block current;
    long fill = 0;
    std::vector<Block> done;
  };
  std::vector<ChainAcc> acc_;
};

}  // namespace spinvmc
