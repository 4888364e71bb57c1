#include "spinvmc/exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spinvmc/errors.hpp"
#include "spinvmc/rng.hpp"

namespace spinvmc {

namespace {

// site bit in the basis index: site 0 is the most significant of n bits
inline long site_mask(int n, int site) { return 1L << (n - 1 - site); }

// diagonal entries and the flip masks per basis state, evaluated on the fly
struct DenseOps {
  const HamiltonianSpec* ham;
  int n;
  long dim;
  std::vector<double> diag;

  explicit DenseOps(const HamiltonianSpec& h) : ham(&h), n(h.lattice.n), dim(1L << h.lattice.n) {
    diag.resize(dim);
    for (long idx = 0; idx < dim; ++idx) {
      const SpinConfig s = SpinConfig::from_index(idx, n);
      double zz = 0;
      for (const auto& [i, j] : h.lattice.bonds) zz += static_cast<double>(s[i]) * s[j];
      diag[idx] = (h.model == Model::tfi ? -zz : -h.coupling * zz);
    }
  }

  // y = H x using the symmetry of the connection relation (gather form)
  void matvec(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    const double elem = ham->model == Model::tfi ? -ham->coupling : -2.0;
    y.resize(dim);
    if (ham->model == Model::tfi) {
      for (long idx = 0; idx < dim; ++idx) {
        double acc = diag[idx] * x[idx];
        for (int i = 0; i < n; ++i) acc += elem * x[idx ^ site_mask(n, i)];
        y[idx] = acc;
      }
    } else {
      for (long idx = 0; idx < dim; ++idx) {
        double acc = diag[idx] * x[idx];
        for (const auto& [i, j] : ham->lattice.bonds) {
          const long mi = site_mask(n, i), mj = site_mask(n, j);
          const bool aligned = ((idx & mi) != 0) == ((idx & mj) != 0);
          if (aligned) acc += elem * x[idx ^ mi ^ mj];
        }
        y[idx] = acc;
      }
    }
  }

  void matvec(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    Eigen::VectorXd re(dim), im(dim), yre, yim;
    re = x.real();
    im = x.imag();
    matvec(re, yre);
    matvec(im, yim);
    y.resize(dim);
    y.real() = yre;
    y.imag() = yim;
  }
};

void sign_canonicalize(Eigen::VectorXd& v) {
  for (long i = 0; i < v.size(); ++i)
    if (v[i] != 0) {
      if (v[i] < 0) v = -v;
      return;
    }
}

GroundState lanczos_ground(const DenseOps& ops) {
  const long dim = ops.dim;
  const int max_iter = static_cast<int>(std::min<long>(dim, 400));

  Rng rng(12345);
  Eigen::VectorXd v(dim);
  for (long i = 0; i < dim; ++i) v[i] = rng.normal();
  v.normalize();

  std::vector<Eigen::VectorXd> basis;
  basis.push_back(v);
  std::vector<double> alpha, beta;
  Eigen::VectorXd w(dim), ritz_coeff;
  double theta = 0;
  double spectral_scale = 1.0;

  for (int k = 0; k < max_iter; ++k) {
    ops.matvec(basis[k], w);
    if (k > 0) w -= beta[k - 1] * basis[k - 1];
    alpha.push_back(basis[k].dot(w));
    w -= alpha[k] * basis[k];
    // full reorthogonalization, twice for safety
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= b.dot(w) * b;

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (int i = 0; i <= k; ++i) tri(i, i) = alpha[i];
    for (int i = 0; i < k; ++i) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    theta = es.eigenvalues()[0];
    ritz_coeff = es.eigenvectors().col(0);
    spectral_scale = std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[k]));

    const double b_next = w.norm();
    const double resid_bound = b_next * std::abs(ritz_coeff[k]);
    if (resid_bound <= 1e-12 * std::max(1.0, spectral_scale) || b_next <= 1e-13 || k + 1 == max_iter) {
      GroundState gs;
      gs.energy = theta;
      gs.vector = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i <= k; ++i) gs.vector += ritz_coeff[i] * basis[i];
      gs.vector.normalize();
      sign_canonicalize(gs.vector);
      Eigen::VectorXd hv;
      ops.matvec(gs.vector, hv);
      gs.residual = (hv - theta * gs.vector).norm() / std::max(1e-300, spectral_scale);
      return gs;
    }
    beta.push_back(b_next);
    basis.push_back(w / b_next);
  }
  fail(ErrorKind::solver_failure, "lanczos failed to converge");
}

}  // namespace

Eigen::MatrixXd dense_hamiltonian(const HamiltonianSpec& ham) {
  const int n = ham.lattice.n;
  require(n <= 12, ErrorKind::size_cap,
          "dense assembly is capped at 12 sites, got " + std::to_string(n));
  const long dim = 1L << n;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (long col = 0; col < dim; ++col) {
    const SpinConfig s = SpinConfig::from_index(col, n);
    const Connections con = connections(ham, s);
    H(col, col) = con.diagonal;
    for (const auto& f : con.flips) {
      long row = col ^ site_mask(n, f[0]);
      if (f[1] >= 0) row ^= site_mask(n, f[1]);
      H(row, col) += con.element;
    }
  }
  return H;
}

GroundState ground_state(const HamiltonianSpec& ham) {
  const int n = ham.lattice.n;
  require(n <= 16, ErrorKind::size_cap,
          "exact diagonalization is capped at 16 sites, got " + std::to_string(n));
  if (n <= 10) {
    const Eigen::MatrixXd H = dense_hamiltonian(ham);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    require(es.info() == Eigen::Success, ErrorKind::solver_failure, "dense eigensolver failed");
    GroundState gs;
    gs.energy = es.eigenvalues()[0];
    gs.vector = es.eigenvectors().col(0);
    sign_canonicalize(gs.vector);
    const double scale =
        std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[H.rows() - 1]));
    gs.residual = (H * gs.vector - gs.energy * gs.vector).norm() / std::max(1e-300, scale);
    return gs;
  }
  return lanczos_ground(DenseOps(ham));
}

std::pair<double, double> lowest_two(const HamiltonianSpec& ham) {
  const Eigen::MatrixXd H = dense_hamiltonian(ham);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  require(es.info() == Eigen::Success, ErrorKind::solver_failure, "dense eigensolver failed");
  return {es.eigenvalues()[0], es.eigenvalues()[1]};
}

double tfi_chain_reference_energy(int length, double field) {
  require(length >= 2, ErrorKind::invalid_geometry, "chain needs at least 2 sites");
  if (length == 2) {
    // the 2-site ring keeps one bond after deduplication, outside the
    // closed form's assumptions
    return ground_state(make_hamiltonian(Model::tfi, field, build_lattice({2}))).energy;
  }
  double acc = 0;
  for (int m = 0; m < length; ++m) {
    const double k = M_PI * (2.0 * m + 1.0) / length;
    acc += std::sqrt(1.0 + field * field - 2.0 * field * std::cos(k));
  }
  return -acc;
}

WirtingerBlocks exact_wirtinger_blocks(const HamiltonianSpec& ham, const RbmParams& p) {
  const int n = ham.lattice.n;
  require(n <= 10, ErrorKind::size_cap,
          "wirtinger blocks are capped at 10 sites, got " + std::to_string(n));
  p.validate();
  require(p.n == n, ErrorKind::shape_mismatch, "parameter size does not match lattice");
  const long dim = 1L << n;
  const int pc = p.param_count();

  RbmEvaluator eval(ham.lattice);
  eval.bind(p);

  // psi and the first-derivative table, amplitudes max-shifted for stability
  Eigen::VectorXcd lp(dim);
  std::vector<SpinConfig> configs;
  configs.reserve(dim);
  for (long idx = 0; idx < dim; ++idx) {
    configs.push_back(SpinConfig::from_index(idx, n));
    lp[idx] = eval.log_psi(configs[idx]);
  }
  const double max_re = lp.real().maxCoeff();
  require(std::isfinite(max_re), ErrorKind::zero_amplitude,
          "wavefunction vanishes on the whole basis");
  Eigen::VectorXcd psi(dim);
  for (long idx = 0; idx < dim; ++idx) psi[idx] = std::exp(lp[idx] - max_re);

  Eigen::MatrixXcd nu = Eigen::MatrixXcd::Zero(dim, pc);
  for (long idx = 0; idx < dim; ++idx)
    if (psi[idx] != 0.0) nu.row(idx) = eval.log_derivatives(configs[idx]);

  const DenseOps ops(ham);
  const double nrm = psi.squaredNorm();
  Eigen::VectorXcd hpsi;
  ops.matvec(psi, hpsi);
  WirtingerBlocks blocks;
  blocks.energy = psi.dot(hpsi) / nrm;

  const Eigen::VectorXcd mu = (psi.array().abs2().matrix().transpose() * nu).transpose() / nrm;

  // tangent vectors psihat_i = (nu_i - mu_i) psi, columns of a dim x p matrix
  Eigen::MatrixXcd tang(dim, pc);
  for (int i = 0; i < pc; ++i)
    tang.col(i) = (nu.col(i).array() - mu[i]) * psi.array();

  const Eigen::VectorXcd resid = hpsi - blocks.energy * psi;  // (H - E) psi
  blocks.g = tang.adjoint() * resid / nrm;
  blocks.S = tang.adjoint() * tang / nrm;

  Eigen::MatrixXcd htang(dim, pc);
  Eigen::VectorXcd tmp;
  for (int i = 0; i < pc; ++i) {
    ops.matvec(tang.col(i).eval(), tmp);
    htang.col(i) = tmp;
  }
  blocks.H = tang.adjoint() * (htang - blocks.energy * tang) / nrm;

  // J_ij = <psihat_ij, (H - E) psihat> / <psi, psi>, expanded to
  // E_rho[conj(nu_i nu_j + ell_ij)(E_loc - E)] - conj(mu_j) g_i - conj(mu_i) g_j;
  // the constant pieces of psihat_ij pair with sum rho (E_loc - E) = 0 and
  // drop out. Accumulated per configuration since the pair features never
  // fit in memory all at once.
  Eigen::MatrixXcd t1 = Eigen::MatrixXcd::Zero(pc, pc);
  Eigen::VectorXcd eloc(dim);
  for (long idx = 0; idx < dim; ++idx)
    eloc[idx] = psi[idx] == 0.0 ? cx(0) : hpsi[idx] / psi[idx];
  double wsum = 0;
  for (long idx = 0; idx < dim; ++idx) {
    const double w = std::norm(psi[idx]);
    if (w == 0.0) continue;
    wsum += w;
    const Eigen::MatrixXcd ell = log_second_derivatives(p, ham.lattice, configs[idx]);
    const Eigen::MatrixXcd feat = nu.row(idx).transpose() * nu.row(idx) + ell;
    t1 += (w * (eloc[idx] - blocks.energy)) * feat.conjugate();
  }
  t1 /= wsum;
  blocks.J = t1 - mu.conjugate() * blocks.g.transpose() - blocks.g * mu.adjoint();
  return blocks;
}

double rate_bound(const Eigen::MatrixXcd& precond, const WirtingerBlocks& blocks) {
  const long p = blocks.g.size();
  require(precond.rows() == p && precond.cols() == p, ErrorKind::shape_mismatch,
          "preconditioner shape does not match the parameter count");
  require(blocks.H.rows() == p && blocks.J.rows() == p, ErrorKind::shape_mismatch,
          "blocks shape does not match the parameter count");

  Eigen::MatrixXcd M(2 * p, 2 * p);
  M.topLeftCorner(p, p) = blocks.H;
  M.topRightCorner(p, p) = blocks.J;
  M.bottomLeftCorner(p, p) = blocks.J.conjugate();
  M.bottomRightCorner(p, p) = blocks.H.conjugate();
  M = 0.5 * (M + M.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  require(es.info() == Eigen::Success, ErrorKind::solver_failure, "eigensolver failed on M");
  const double lmin = es.eigenvalues()[0];
  require(lmin > 0, ErrorKind::not_positive_definite,
          "M is not positive definite (lambda_min = " + std::to_string(lmin) + ")");

  const Eigen::MatrixXcd sqrt_m =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
      es.eigenvectors().adjoint();

  // diag(P, conj(P))^{-1} applied blockwise
  Eigen::MatrixXcd solved(2 * p, 2 * p);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(precond);
  solved.topRows(p) = lu.solve(sqrt_m.topRows(p));
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_conj(precond.conjugate());
  solved.bottomRows(p) = lu_conj.solve(sqrt_m.bottomRows(p));

  const Eigen::MatrixXcd A =
      Eigen::MatrixXcd::Identity(2 * p, 2 * p) - sqrt_m * solved;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  const double s = svd.singularValues()[0];
  return s * s;
}

}  // namespace spinvmc
