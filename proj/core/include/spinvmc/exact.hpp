#pragma once

#include <Eigen/Dense>

#include "spinvmc/estimators.hpp"
#include "spinvmc/hamiltonian.hpp"

namespace spinvmc {

// dense 2^n x 2^n real matrix assembled from connections(); n <= 12
Eigen::MatrixXd dense_hamiltonian(const HamiltonianSpec& ham);

struct GroundState {
  double energy = 0;
  Eigen::VectorXd vector;  // normalized, first nonzero entry positive
  double residual = 0;     // ||H v - E v|| / ||H||_bound
};

// n <= 16: dense eigensolver for n <= 10, matrix-free Lanczos with full
// reorthogonalization beyond; residual checked against 1e-8 ||H||
GroundState ground_state(const HamiltonianSpec& ham);

// two lowest eigenvalues (dense path, n <= 12); used for degeneracy scans
std::pair<double, double> lowest_two(const HamiltonianSpec& ham);

// periodic free-fermion chain energy -sum_m sqrt(1 + h^2 - 2 h cos(pi(2m+1)/L)).
// The closed form assumes the simple-cycle bond set, so L == 2 (whose wrap
// bond is deduplicated) falls back to the dense eigensolver.
double tfi_chain_reference_energy(int length, double field);

// Energy blocks of the intermediate-normalized wavefunction at the unit-step
// test point, by full enumeration (n <= 10):
//   g_i  = <psihat_i, (H - E) psihat> / <psi, psi>
//   S_ij = <psihat_i, psihat_j> / <psi, psi>
//   H_ij = <psihat_i, (H - E) psihat_j> / <psi, psi>           (Hermitian)
//   J_ij = <psihat_ij, (H - E) psihat> / <psi, psi>            (symmetric)
struct WirtingerBlocks {
  cx energy{};
  Eigen::VectorXcd g;
  Eigen::MatrixXcd S;
  Eigen::MatrixXcd H;
  Eigen::MatrixXcd J;
};
WirtingerBlocks exact_wirtinger_blocks(const HamiltonianSpec& ham, const RbmParams& p);

// fixed-point contraction factor || I - M^{1/2} diag(P, conj(P))^{-1} M^{1/2} ||_2^2
// with M = [[H, J], [conj(J), conj(H)]]; M must be positive definite, else a
// not_positive_definite error (behavior at indefinite points is undefined and
// we refuse rather than report a meaningless number)
double rate_bound(const Eigen::MatrixXcd& precond, const WirtingerBlocks& blocks);

}  // namespace spinvmc
