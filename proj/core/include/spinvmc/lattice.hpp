#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spinvmc/errors.hpp"
#include "spinvmc/spin_config.hpp"

namespace spinvmc {

// Periodic chain or torus. Bonds are nearest-neighbour pairs enumerated
// per site in row-major order, +x before +y, deduplicated as unordered pairs
// so extent-2 directions contribute a single bond instead of a doubled one.
struct LatticeSpec {
  std::vector<int> dims;  // one or two extents, each >= 2
  int n = 0;              // total site count

  std::vector<std::pair<int, int>> bonds;  // (min, max) site pairs, canonical order

  // translations[t][j] = source site whose spin lands on site j when the
  // configuration is shifted by lattice vector t (row-major over dims);
  // translations[0] is the identity
  std::vector<std::vector<int>> translations;

  std::vector<std::int8_t> sublattice;  // coordinate-parity label, 0 = A, 1 = B
  bool bipartite = false;               // parity labels 2-colour every bond, i.e. all extents even

  std::vector<int> a_sites;  // sites with parity label A, ascending
  std::vector<int> b_sites;
};

LatticeSpec build_lattice(const std::vector<int>& dims);

// translated configuration tau with tau[j] = sigma[translations[t][j]]
SpinConfig apply_translation(const LatticeSpec& lat, int t, const SpinConfig& sigma);

}  // namespace spinvmc
