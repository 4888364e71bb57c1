#pragma once

#include <array>
#include <utility>
#include <vector>

#include "spinvmc/lattice.hpp"
#include "spinvmc/rbm.hpp"

namespace spinvmc {

enum class Model { tfi, xxz };

// tfi: H = -sum_bonds sz sz - h sum_i sx
// xxz: H = -delta sum_bonds sz sz + sum_bonds (sy sy - sx sx)
//
// z-basis matrix elements (locked by the dense tensor-product oracle test):
//   tfi  diagonal -sum_bonds s_i s_j, one single-site flip per site, element -h
//   xxz  diagonal -delta sum_bonds s_i s_j, double flip of every ALIGNED bond
//        (s_i == s_j), element -2; anti-aligned bonds contribute nothing.
// The xxz moves conserve the sublattice magnetization difference, so sampling
// lives in the balanced sector sum_A s = sum_B s.
struct HamiltonianSpec {
  Model model = Model::tfi;
  double coupling = 0.0;  // h for tfi, delta for xxz
  LatticeSpec lattice;
};

// validates geometry; xxz additionally requires a bipartite lattice with
// even sublattice sizes
HamiltonianSpec make_hamiltonian(Model model, double coupling, LatticeSpec lat);

struct Connections {
  double diagonal = 0.0;
  double element = 0.0;  // shared off-diagonal value: -h (tfi), -2 (xxz)
  // sites flipped per connected state; [1] == -1 marks a single-site flip
  std::vector<std::array<int, 2>> flips;
};

Connections connections(const HamiltonianSpec& ham, const SpinConfig& sigma);

// materialized (sigma', element) list in the canonical flip order
std::vector<std::pair<SpinConfig, double>> connected_states(const HamiltonianSpec& ham,
                                                            const SpinConfig& sigma);

// E_loc = (H psi)(sigma) / psi(sigma), amplitude ratios via exp of log psi
// differences; zero-amplitude sigma is an error
cx local_energy(const HamiltonianSpec& ham, const RbmParams& p, const SpinConfig& sigma);

// E_loc,k = (H psi_k)(sigma) / psi(sigma) with psi_k = nu_k psi
Eigen::VectorXcd local_energy_derivatives(const HamiltonianSpec& ham, const RbmParams& p,
                                          const SpinConfig& sigma);

// single-pass bundle used by the samplers and the exact enumeration
struct LocalObservables {
  cx eloc;
  Eigen::VectorXcd nu;
  Eigen::VectorXcd eloc_deriv;  // empty unless requested
};
LocalObservables local_observables(const HamiltonianSpec& ham, const RbmParams& p,
                                   RbmEvaluator& eval, const SpinConfig& sigma,
                                   bool want_deriv);

}  // namespace spinvmc
