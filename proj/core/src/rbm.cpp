#include "spinvmc/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <vector>

#include <fftw3.h>

#include "spinvmc/errors.hpp"

namespace spinvmc {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

// stable tanh via w = exp(-2 sign(Re z) z), |w| <= 1
cx tanh_stable(cx z) {
  const double s = std::real(z) < 0 ? -1.0 : 1.0;
  const cx w = std::exp(-2.0 * s * z);
  return s * (1.0 - w) / (1.0 + w);
}

}  // namespace

Eigen::VectorXcd RbmParams::flatten() const {
  Eigen::VectorXcd v(param_count());
  int k = 0;
  for (int c = 0; c < alpha; ++c)
    for (int j = 0; j < n; ++j) v[k++] = weights(c, j);
  for (int c = 0; c < alpha; ++c) v[k++] = biases[c];
  return v;
}

RbmParams RbmParams::unflatten(const Eigen::VectorXcd& v, int alpha, int n) {
  require(alpha >= 1 && n >= 1, ErrorKind::shape_mismatch, "alpha and n must be positive");
  require(v.size() == static_cast<long>(alpha) * (n + 1), ErrorKind::shape_mismatch,
          "flat parameter vector has wrong length");
  RbmParams p;
  p.alpha = alpha;
  p.n = n;
  p.weights.resize(alpha, n);
  p.biases.resize(alpha);
  int k = 0;
  for (int c = 0; c < alpha; ++c)
    for (int j = 0; j < n; ++j) p.weights(c, j) = v[k++];
  for (int c = 0; c < alpha; ++c) p.biases[c] = v[k++];
  return p;
}

void RbmParams::validate() const {
  require(alpha >= 1 && n >= 1, ErrorKind::shape_mismatch, "alpha and n must be positive");
  require(weights.rows() == alpha && weights.cols() == n, ErrorKind::shape_mismatch,
          "weight matrix shape does not match alpha x n");
  require(biases.size() == alpha, ErrorKind::shape_mismatch,
          "bias vector length does not match alpha");
  require(weights.allFinite() && biases.allFinite(), ErrorKind::data_error,
          "parameters contain non-finite entries");
}

RbmParams init_params(int alpha, int n, double scale, std::uint64_t seed) {
  require(alpha >= 1 && n >= 1, ErrorKind::shape_mismatch, "alpha and n must be positive");
  require(scale > 0, ErrorKind::config_error, "init scale must be positive");
  RbmParams p;
  p.alpha = alpha;
  p.n = n;
  p.weights.resize(alpha, n);
  p.biases.resize(alpha);
  Rng rng(seed);
  const double sd = std::sqrt(scale / 2);
  for (int c = 0; c < alpha; ++c)
    for (int j = 0; j < n; ++j) {
      const double re = sd * rng.normal();
      const double im = sd * rng.normal();
      p.weights(c, j) = cx(re, im);
    }
  for (int c = 0; c < alpha; ++c) {
    const double re = sd * rng.normal();
    const double im = sd * rng.normal();
    p.biases[c] = cx(re, im);
  }
  return p;
}

SpinConfig canonicalize(const SpinConfig& sigma) {
  require(sigma.size() > 0, ErrorKind::shape_mismatch, "empty configuration");
  if (2 * sigma.total() + sigma[0] < 0) return sigma;
  return sigma.negated();
}

cx log_cosh(cx z) {
  const double s = std::real(z) < 0 ? -1.0 : 1.0;
  const cx w = std::exp(-2.0 * s * z);
  const cx v = s * z - kLog2 + std::log(1.0 + w);
  // take the real part from the dedicated routine: it underflows to exactly
  // -inf at the zeros of cosh, where the complex branch leaves a finite value
  // of order log(eps), and every caller keys zero amplitude on Re == -inf
  return cx(re_log_cosh(z), v.imag());
}

double re_log_cosh(cx z) {
  const double x = std::abs(std::real(z));
  const double y = std::imag(z);
  // 1 + e^{-4x} + 2 e^{-2x} cos 2y can hit exact zero (cosh zero), where
  // log1p gives -inf as wanted
  const double t = std::exp(-4.0 * x) + 2.0 * std::exp(-2.0 * x) * std::cos(2.0 * y);
  return x - kLog2 + 0.5 * std::log1p(t);
}

namespace {

// shared direct-path workhorse: theta(c, t) = sum_j w(c,j) sigma[T_t][j] + b_c
// for the canonical representative held in sigd
void theta_direct(const RbmParams& p, const LatticeSpec& lat, const std::vector<double>& sigd,
                  std::vector<double>& st, Eigen::MatrixXcd& theta) {
  const int n = p.n;
  for (int t = 0; t < n; ++t) {
    const auto& src = lat.translations[t];
    for (int j = 0; j < n; ++j) st[j] = sigd[src[j]];
    for (int c = 0; c < p.alpha; ++c) {
      double ar = 0, ai = 0;
      for (int j = 0; j < n; ++j) {
        ar += p.weights(c, j).real() * st[j];
        ai += p.weights(c, j).imag() * st[j];
      }
      theta(c, t) = cx(ar, ai) + p.biases[c];
    }
  }
}

void check_compatible(const RbmParams& p, const LatticeSpec& lat) {
  p.validate();
  require(p.n == lat.n, ErrorKind::shape_mismatch,
          "parameter site count does not match lattice size");
}

std::vector<double> canonical_doubles(const LatticeSpec& lat, const SpinConfig& sigma) {
  require(static_cast<int>(sigma.size()) == lat.n, ErrorKind::shape_mismatch,
          "configuration length does not match lattice size");
  const SpinConfig rep = canonicalize(sigma);
  std::vector<double> sigd(lat.n);
  for (int j = 0; j < lat.n; ++j) sigd[j] = rep[j];
  return sigd;
}

// tanh has a pole wherever cosh has a zero, but the rounded evaluation can
// come out large-yet-finite, so zero amplitude is detected from the thetas
// rather than from the finiteness of derivative results
void require_nonzero_amplitude(const Eigen::MatrixXcd& theta, const char* what) {
  for (long c = 0; c < theta.rows(); ++c)
    for (long t = 0; t < theta.cols(); ++t)
      require(re_log_cosh(theta(c, t)) != -std::numeric_limits<double>::infinity(),
              ErrorKind::zero_amplitude, what);
}

}  // namespace

cx log_psi(const RbmParams& p, const LatticeSpec& lat, const SpinConfig& sigma) {
  check_compatible(p, lat);
  const auto sigd = canonical_doubles(lat, sigma);
  std::vector<double> st(p.n);
  Eigen::MatrixXcd theta(p.alpha, p.n);
  theta_direct(p, lat, sigd, st, theta);
  cx acc = 0;
  for (int c = 0; c < p.alpha; ++c)
    for (int t = 0; t < p.n; ++t) acc += log_cosh(theta(c, t));
  return acc;
}

Eigen::VectorXcd log_derivatives(const RbmParams& p, const LatticeSpec& lat,
                                 const SpinConfig& sigma) {
  check_compatible(p, lat);
  const auto sigd = canonical_doubles(lat, sigma);
  std::vector<double> st(p.n);
  Eigen::MatrixXcd theta(p.alpha, p.n);
  theta_direct(p, lat, sigd, st, theta);
  require_nonzero_amplitude(theta,
                            "log derivative undefined at a zero-amplitude configuration");

  Eigen::VectorXcd nu = Eigen::VectorXcd::Zero(p.param_count());
  const int n = p.n;
  for (int t = 0; t < n; ++t) {
    const auto& src = lat.translations[t];
    for (int j = 0; j < n; ++j) st[j] = sigd[src[j]];
    for (int c = 0; c < p.alpha; ++c) {
      const cx u = tanh_stable(theta(c, t));
      for (int j = 0; j < n; ++j) nu[c * n + j] += u * st[j];
      nu[p.alpha * n + c] += u;
    }
  }
  require(nu.allFinite(), ErrorKind::zero_amplitude,
          "log derivative undefined at a zero-amplitude configuration");
  return nu;
}

Eigen::MatrixXcd log_second_derivatives(const RbmParams& p, const LatticeSpec& lat,
                                        const SpinConfig& sigma) {
  check_compatible(p, lat);
  const auto sigd = canonical_doubles(lat, sigma);
  std::vector<double> st(p.n);
  Eigen::MatrixXcd theta(p.alpha, p.n);
  theta_direct(p, lat, sigd, st, theta);

  require_nonzero_amplitude(
      theta, "second derivatives undefined at a zero-amplitude configuration");
  const int n = p.n;
  const int pc = p.param_count();
  Eigen::MatrixXcd ell = Eigen::MatrixXcd::Zero(pc, pc);
  // per channel, sum over translations of sech^2(theta) * outer(v, v) with
  // v = (translated spins, 1); cross-channel blocks vanish
  for (int t = 0; t < n; ++t) {
    const auto& src = lat.translations[t];
    for (int j = 0; j < n; ++j) st[j] = sigd[src[j]];
    for (int c = 0; c < p.alpha; ++c) {
      const cx u = tanh_stable(theta(c, t));
      const cx s2 = 1.0 - u * u;
      const int woff = c * n;
      const int boff = p.alpha * n + c;
      for (int i = 0; i < n; ++i) {
        const cx row = s2 * st[i];
        for (int j = 0; j < n; ++j) ell(woff + i, woff + j) += row * st[j];
        ell(woff + i, boff) += row;
        ell(boff, woff + i) += row;
      }
      ell(boff, boff) += s2;
    }
  }
  require(ell.allFinite(), ErrorKind::zero_amplitude,
          "second derivatives undefined at a zero-amplitude configuration");
  return ell;
}

void save_checkpoint(const RbmParams& p, const std::string& path) {
  p.validate();
  std::ofstream out(path);
  require(out.good(), ErrorKind::io_error, "cannot open checkpoint for writing: " + path);
  out << p.alpha << ' ' << p.n << '\n';
  const Eigen::VectorXcd v = p.flatten();
  char buf[128];
  for (long k = 0; k < v.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%a %a\n", v[k].real(), v[k].imag());
    out << buf;
  }
  out.flush();
  require(out.good(), ErrorKind::io_error, "write failed for checkpoint: " + path);
}

RbmParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io_error, "cannot open checkpoint: " + path);
  int alpha = 0, n = 0;
  in >> alpha >> n;
  require(in.good() && alpha >= 1 && n >= 1, ErrorKind::data_error,
          "malformed checkpoint header in " + path);
  const long count = static_cast<long>(alpha) * (n + 1);
  Eigen::VectorXcd v(count);
  std::string tok_re, tok_im;
  for (long k = 0; k < count; ++k) {
    if (!(in >> tok_re >> tok_im))
      fail(ErrorKind::data_error, "checkpoint truncated at entry " + std::to_string(k));
    // strtod handles the hexfloat form that stream extraction does not
    char* end = nullptr;
    const double re = std::strtod(tok_re.c_str(), &end);
    require(end && *end == '\0', ErrorKind::data_error, "bad checkpoint number: " + tok_re);
    const double im = std::strtod(tok_im.c_str(), &end);
    require(end && *end == '\0', ErrorKind::data_error, "bad checkpoint number: " + tok_im);
    v[k] = cx(re, im);
  }
  std::string rest;
  if (in >> rest)
    fail(ErrorKind::data_error, "trailing data after checkpoint payload in " + path);
  RbmParams p = RbmParams::unflatten(v, alpha, n);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// evaluator

namespace {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RbmEvaluator::Impl {
  const LatticeSpec* lat = nullptr;
  Backend backend = Backend::direct;
  RbmParams params;
  bool bound = false;

  // scratch reused across calls
  std::vector<double> sigd, st;
  Eigen::MatrixXcd theta;

  // fft state: plans over the lattice shape, the cached reversed-index
  // weight transforms, and the transform of the current configuration
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<cx> buf_in, buf_out;
  Eigen::MatrixXcd wrev;       // alpha x n, W_c[(n - k) mod n] per axis
  std::vector<cx> sig_dft;     // n
  std::vector<int> rev_index;  // dft index reversal per axis, row-major

  explicit Impl(const LatticeSpec& l, Backend b) : lat(&l), backend(b) {
    const int n = lat->n;
    sigd.resize(n);
    st.resize(n);
    if (backend == Backend::fft) {
      buf_in.resize(n);
      buf_out.resize(n);
      sig_dft.resize(n);
      rev_index.resize(n);
      const int d0 = lat->dims[0];
      const int d1 = lat->dims.size() == 2 ? lat->dims[1] : 1;
      if (lat->dims.size() == 1) {
        for (int k = 0; k < n; ++k) rev_index[k] = (n - k) % n;
      } else {
        for (int k0 = 0; k0 < d0; ++k0)
          for (int k1 = 0; k1 < d1; ++k1)
            rev_index[k0 * d1 + k1] = ((d0 - k0) % d0) * d1 + (d1 - k1) % d1;
      }
      std::lock_guard<std::mutex> lock(fftw_plan_mutex());
      auto* in = reinterpret_cast<fftw_complex*>(buf_in.data());
      auto* out = reinterpret_cast<fftw_complex*>(buf_out.data());
      if (lat->dims.size() == 1) {
        fwd = fftw_plan_dft_1d(d0, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(d0, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
      } else {
        fwd = fftw_plan_dft_2d(d0, d1, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(d0, d1, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
      }
      require(fwd && bwd, ErrorKind::solver_failure, "fftw plan creation failed");
    }
  }

  ~Impl() {
    if (fwd || bwd) {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex());
      if (fwd) fftw_destroy_plan(fwd);
      if (bwd) fftw_destroy_plan(bwd);
    }
  }

  void forward() { fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(buf_in.data()),
                                    reinterpret_cast<fftw_complex*>(buf_out.data())); }
  void backward() { fftw_execute_dft(bwd, reinterpret_cast<fftw_complex*>(buf_in.data()),
                                     reinterpret_cast<fftw_complex*>(buf_out.data())); }

  void do_bind(const RbmParams& p) {
    check_compatible(p, *lat);
    params = p;
    theta.resize(p.alpha, p.n);
    if (backend == Backend::fft) {
      const int n = p.n;
      wrev.resize(p.alpha, n);
      for (int c = 0; c < p.alpha; ++c) {
        for (int j = 0; j < n; ++j) buf_in[j] = p.weights(c, j);
        forward();
        for (int k = 0; k < n; ++k) wrev(c, k) = buf_out[rev_index[k]];
      }
    }
    bound = true;
  }

  // fills sigd with the canonical representative and theta for all channels
  void compute_theta(const SpinConfig& sigma) {
    require(bound, ErrorKind::missing_field, "evaluator has no bound parameters");
    const SpinConfig rep = canonicalize(sigma);
    require(static_cast<int>(rep.size()) == lat->n, ErrorKind::shape_mismatch,
            "configuration length does not match lattice size");
    const int n = lat->n;
    for (int j = 0; j < n; ++j) sigd[j] = rep[j];
    if (backend == Backend::direct) {
      theta_direct(params, *lat, sigd, st, theta);
      return;
    }
    for (int j = 0; j < n; ++j) buf_in[j] = sigd[j];
    forward();
    sig_dft.assign(buf_out.begin(), buf_out.end());
    const double inv_n = 1.0 / n;
    for (int c = 0; c < params.alpha; ++c) {
      for (int k = 0; k < n; ++k) buf_in[k] = wrev(c, k) * sig_dft[k];
      backward();
      for (int t = 0; t < n; ++t) theta(c, t) = buf_out[t] * inv_n + params.biases[c];
    }
  }

  // correlate u against the current configuration transform:
  // out_j = sum_t u_t sigd[T_t][j]; fft path reuses sig_dft from compute_theta
  void weight_accum_fft(const Eigen::RowVectorXcd& u, Eigen::VectorXcd& nu, int woff) {
    const int n = lat->n;
    for (int t = 0; t < n; ++t) buf_in[t] = u[t];
    forward();
    for (int k = 0; k < n; ++k) buf_in[k] = buf_out[rev_index[k]] * sig_dft[k];
    backward();
    const double inv_n = 1.0 / n;
    for (int j = 0; j < n; ++j) nu[woff + j] += buf_out[j] * inv_n;
  }
};

RbmEvaluator::RbmEvaluator(const LatticeSpec& lat, Backend backend)
    : impl_(std::make_unique<Impl>(lat, backend)) {}
RbmEvaluator::~RbmEvaluator() = default;
RbmEvaluator::RbmEvaluator(RbmEvaluator&&) noexcept = default;
RbmEvaluator& RbmEvaluator::operator=(RbmEvaluator&&) noexcept = default;

void RbmEvaluator::bind(const RbmParams& p) { impl_->do_bind(p); }
bool RbmEvaluator::bound() const { return impl_->bound; }
Backend RbmEvaluator::backend() const { return impl_->backend; }

cx RbmEvaluator::log_psi(const SpinConfig& sigma) {
  impl_->compute_theta(sigma);
  cx acc = 0;
  for (int c = 0; c < impl_->params.alpha; ++c)
    for (int t = 0; t < impl_->params.n; ++t) acc += spinvmc::log_cosh(impl_->theta(c, t));
  return acc;
}

double RbmEvaluator::log_weight(const SpinConfig& sigma) {
  impl_->compute_theta(sigma);
  double acc = 0;
  for (int c = 0; c < impl_->params.alpha; ++c)
    for (int t = 0; t < impl_->params.n; ++t) acc += re_log_cosh(impl_->theta(c, t));
  return 2.0 * acc;
}

Eigen::VectorXcd RbmEvaluator::log_derivatives(const SpinConfig& sigma) {
  impl_->compute_theta(sigma);
  const RbmParams& p = impl_->params;
  const int n = p.n;
  require_nonzero_amplitude(impl_->theta,
                            "log derivative undefined at a zero-amplitude configuration");
  Eigen::VectorXcd nu = Eigen::VectorXcd::Zero(p.param_count());
  if (impl_->backend == Backend::direct) {
    for (int t = 0; t < n; ++t) {
      const auto& src = impl_->lat->translations[t];
      for (int j = 0; j < n; ++j) impl_->st[j] = impl_->sigd[src[j]];
      for (int c = 0; c < p.alpha; ++c) {
        const cx u = tanh_stable(impl_->theta(c, t));
        for (int j = 0; j < n; ++j) nu[c * n + j] += u * impl_->st[j];
        nu[p.alpha * n + c] += u;
      }
    }
  } else {
    Eigen::RowVectorXcd u(n);
    for (int c = 0; c < p.alpha; ++c) {
      for (int t = 0; t < n; ++t) u[t] = tanh_stable(impl_->theta(c, t));
      impl_->weight_accum_fft(u, nu, c * n);
      nu[p.alpha * n + c] += u.sum();
    }
  }
  require(nu.allFinite(), ErrorKind::zero_amplitude,
          "log derivative undefined at a zero-amplitude configuration");
  return nu;
}

}  // namespace spinvmc
