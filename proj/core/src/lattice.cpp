#include "spinvmc/lattice.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace spinvmc {

namespace {

// row-major site index for coordinates c on extents d
int site_index(const std::vector<int>& d, const std::vector<int>& c) {
  int idx = 0;
  for (std::size_t k = 0; k < d.size(); ++k) idx = idx * d[k] + c[k];
  return idx;
}

}  // namespace

LatticeSpec build_lattice(const std::vector<int>& dims) {
  require(dims.size() == 1 || dims.size() == 2, ErrorKind::unsupported_dimension,
          "lattice rank must be 1 or 2, got " + std::to_string(dims.size()));
  for (int d : dims)
    require(d >= 2, ErrorKind::invalid_geometry,
            "every extent needs at least 2 sites, got " + std::to_string(d));

  LatticeSpec lat;
  lat.dims = dims;
  lat.n = 1;
  for (int d : dims) lat.n *= d;

  const int rank = static_cast<int>(dims.size());
  const int d0 = dims[0];
  const int d1 = rank == 2 ? dims[1] : 1;

  // Periodic nearest-neighbour bonds, one pass per site: +x (fast axis) first,
  // then +y. A 2-site ring would emit the same bond twice, so dedupe.
  std::set<std::pair<int, int>> seen;
  auto push_bond = [&](int a, int b) {
    auto key = std::minmax(a, b);
    if (seen.insert(key).second) lat.bonds.push_back(key);
  };
  if (rank == 1) {
    for (int x = 0; x < d0; ++x) push_bond(x, (x + 1) % d0);
  } else {
    for (int r = 0; r < d0; ++r)
      for (int c = 0; c < d1; ++c) {
        const int s = r * d1 + c;
        push_bond(s, r * d1 + (c + 1) % d1);
        push_bond(s, ((r + 1) % d0) * d1 + c);
      }
  }

  // translations[t][j] = source site whose spin lands on j, so that
  // (T_t sigma)[j] = sigma[translations[t][j]]; t runs row-major over shifts
  lat.translations.assign(lat.n, std::vector<int>(lat.n));
  if (rank == 1) {
    for (int t = 0; t < d0; ++t)
      for (int j = 0; j < d0; ++j) lat.translations[t][j] = (j + t) % d0;
  } else {
    for (int t0 = 0; t0 < d0; ++t0)
      for (int t1 = 0; t1 < d1; ++t1) {
        auto& row = lat.translations[t0 * d1 + t1];
        for (int r = 0; r < d0; ++r)
          for (int c = 0; c < d1; ++c)
            row[r * d1 + c] = site_index(dims, {(r + t0) % d0, (c + t1) % d1});
      }
  }

  lat.sublattice.resize(lat.n);
  for (int r = 0; r < d0; ++r)
    for (int c = 0; c < d1; ++c) {
      const int s = r * d1 + c;
      lat.sublattice[s] = static_cast<std::int8_t>((r + c) % 2);
      (lat.sublattice[s] == 0 ? lat.a_sites : lat.b_sites).push_back(s);
    }

  lat.bipartite = true;
  for (int d : dims) lat.bipartite = lat.bipartite && d % 2 == 0;

  return lat;
}

SpinConfig apply_translation(const LatticeSpec& lat, int t, const SpinConfig& sigma) {
  require(t >= 0 && t < lat.n, ErrorKind::invalid_translation,
          "translation index " + std::to_string(t) + " outside [0, " + std::to_string(lat.n) + ")");
  require(static_cast<int>(sigma.size()) == lat.n, ErrorKind::shape_mismatch,
          "configuration length does not match lattice size");
  SpinConfig out(lat.n);
  const auto& src = lat.translations[t];
  for (int j = 0; j < lat.n; ++j) out[j] = sigma[src[j]];
  return out;
}

}  // namespace spinvmc
