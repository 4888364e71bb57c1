#include "spinvmc/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "spinvmc/errors.hpp"

namespace spinvmc {

HamiltonianSpec make_hamiltonian(Model model, double coupling, LatticeSpec lat) {
  require(std::isfinite(coupling), ErrorKind::config_error, "coupling must be finite");
  require(lat.n >= 2 && !lat.bonds.empty(), ErrorKind::invalid_geometry,
          "hamiltonian needs a lattice with at least one bond");
  if (model == Model::xxz) {
    require(lat.bipartite, ErrorKind::unsupported_model,
            "xxz requires a bipartite lattice (all extents even)");
    require(lat.a_sites.size() % 2 == 0 && lat.a_sites.size() == lat.b_sites.size(),
            ErrorKind::unsupported_model, "xxz requires even sublattice sizes");
  }
  HamiltonianSpec ham;
  ham.model = model;
  ham.coupling = coupling;
  ham.lattice = std::move(lat);
  return ham;
}

Connections connections(const HamiltonianSpec& ham, const SpinConfig& sigma) {
  const auto& lat = ham.lattice;
  require(static_cast<int>(sigma.size()) == lat.n, ErrorKind::shape_mismatch,
          "configuration length does not match lattice size");
  Connections con;
  double zz = 0;
  for (const auto& [i, j] : lat.bonds) zz += static_cast<double>(sigma[i]) * sigma[j];
  if (ham.model == Model::tfi) {
    con.diagonal = -zz;
    con.element = -ham.coupling;
    con.flips.reserve(lat.n);
    for (int i = 0; i < lat.n; ++i) con.flips.push_back({i, -1});
  } else {
    con.diagonal = -ham.coupling * zz;
    con.element = -2.0;
    for (const auto& [i, j] : lat.bonds)
      if (sigma[i] == sigma[j]) con.flips.push_back({i, j});
  }
  return con;
}

std::vector<std::pair<SpinConfig, double>> connected_states(const HamiltonianSpec& ham,
                                                            const SpinConfig& sigma) {
  const Connections con = connections(ham, sigma);
  std::vector<std::pair<SpinConfig, double>> out;
  out.reserve(con.flips.size());
  for (const auto& f : con.flips) {
    SpinConfig s = sigma;
    s.flip(f[0]);
    if (f[1] >= 0) s.flip(f[1]);
    out.emplace_back(std::move(s), con.element);
  }
  return out;
}

cx local_energy(const HamiltonianSpec& ham, const RbmParams& p, const SpinConfig& sigma) {
  RbmEvaluator eval(ham.lattice);
  eval.bind(p);
  return local_observables(ham, p, eval, sigma, false).eloc;
}

Eigen::VectorXcd local_energy_derivatives(const HamiltonianSpec& ham, const RbmParams& p,
                                          const SpinConfig& sigma) {
  RbmEvaluator eval(ham.lattice);
  eval.bind(p);
  return local_observables(ham, p, eval, sigma, true).eloc_deriv;
}

LocalObservables local_observables(const HamiltonianSpec& ham, const RbmParams& p,
                                   RbmEvaluator& eval, const SpinConfig& sigma,
                                   bool want_deriv) {
  const cx lp = eval.log_psi(sigma);
  require(std::real(lp) > -std::numeric_limits<double>::infinity(), ErrorKind::zero_amplitude,
          "local observables undefined where the amplitude vanishes");

  LocalObservables obs;
  obs.nu = eval.log_derivatives(sigma);
  const Connections con = connections(ham, sigma);

  obs.eloc = con.diagonal;
  if (want_deriv) obs.eloc_deriv = con.diagonal * obs.nu;

  SpinConfig s = sigma;
  for (const auto& f : con.flips) {
    s.flip(f[0]);
    if (f[1] >= 0) s.flip(f[1]);
    const cx ratio = std::exp(eval.log_psi(s) - lp);  // 0 when psi(sigma') = 0
    obs.eloc += con.element * ratio;
    if (want_deriv && ratio != 0.0)
      obs.eloc_deriv += (con.element * ratio) * eval.log_derivatives(s);
    s.flip(f[0]);
    if (f[1] >= 0) s.flip(f[1]);
  }
  return obs;
}

}  // namespace spinvmc
