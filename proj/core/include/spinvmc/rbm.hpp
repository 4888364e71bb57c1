#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "spinvmc/lattice.hpp"
#include "spinvmc/rng.hpp"
#include "spinvmc/spin_config.hpp"

namespace spinvmc {

using cx = std::complex<double>;

// Translation-invariant RBM over spin configurations,
//   log psi(sigma) = sum_c sum_t log cosh( sum_j w_{c,j} (T_t sigma)_j + b_c ),
// c = 1..alpha channels, T_t the n lattice translations. Every evaluation goes
// through the mostly-negative representative, which enforces
// psi(sigma) = psi(-sigma) bit-exactly. Note the representative tie-breaks on
// site 0 when sum(sigma) == 0, so translation invariance of the canonicalized
// wavefunction is exact only off the zero-magnetization shell.
struct RbmParams {
  int alpha = 0;
  int n = 0;
  Eigen::MatrixXcd weights;  // alpha x n
  Eigen::VectorXcd biases;   // alpha

  int param_count() const { return alpha * (n + 1); }
  // flattening order: weights row-major, then biases
  Eigen::VectorXcd flatten() const;
  static RbmParams unflatten(const Eigen::VectorXcd& v, int alpha, int n);
  void validate() const;  // shape + finiteness
};

inline constexpr std::uint64_t kDefaultParamSeed = 123;
inline constexpr double kDefaultInitScale = 1e-3;

// independent complex Gaussian entries, total variance `scale`
// (variance scale/2 in each of the real and imaginary parts)
RbmParams init_params(int alpha, int n, double scale = kDefaultInitScale,
                      std::uint64_t seed = kDefaultParamSeed);

// mostly-negative representative: keep sigma when 2*sum(sigma) + sigma_0 < 0,
// else return -sigma
SpinConfig canonicalize(const SpinConfig& sigma);

// stable log cosh branch: sign(Re z)*z - log 2 + log(1 + exp(-2 sign(Re z)*z)).
// The real part is exact for |Re z| up to ~700; the imaginary part may differ
// from the principal branch by multiples of 2*pi, which nothing downstream
// observes (derivatives, amplitude ratios and 2 Re log psi are all branch free).
cx log_cosh(cx z);

// Re log cosh(x+iy) = |x| - log 2 + log1p(exp(-4|x|) + 2 exp(-2|x|) cos 2y)/2;
// cheaper than the complex branch, used for acceptance ratios
double re_log_cosh(cx z);

cx log_psi(const RbmParams& p, const LatticeSpec& lat, const SpinConfig& sigma);
Eigen::VectorXcd log_derivatives(const RbmParams& p, const LatticeSpec& lat,
                                 const SpinConfig& sigma);
// dense alpha(n+1) x alpha(n+1) second-derivative matrix, block diagonal
// across channels; intended for exact diagnostics at small n
Eigen::MatrixXcd log_second_derivatives(const RbmParams& p, const LatticeSpec& lat,
                                        const SpinConfig& sigma);

// checkpoint: text header "alpha n", then alpha*(n+1) hexfloat "re im" lines in
// flattening order; lossless round trip
void save_checkpoint(const RbmParams& p, const std::string& path);
RbmParams load_checkpoint(const std::string& path);

enum class Backend { direct, fft };

// Reusable evaluation engine. bind() fixes the parameter set and caches the
// per-channel weight transforms used by the fft backend; both backends then
// produce identical results to tight tolerance (equivalence is a tested
// contract at 1e-12). Not thread safe; use one instance per worker.
class RbmEvaluator {
 public:
  explicit RbmEvaluator(const LatticeSpec& lat, Backend backend = Backend::direct);
  ~RbmEvaluator();
  RbmEvaluator(RbmEvaluator&&) noexcept;
  RbmEvaluator& operator=(RbmEvaluator&&) noexcept;

  void bind(const RbmParams& p);
  bool bound() const;
  Backend backend() const;

  // all take raw configurations and canonicalize internally;
  // zero-amplitude configurations yield log_weight == -inf
  cx log_psi(const SpinConfig& sigma);
  double log_weight(const SpinConfig& sigma);  // 2 Re log psi
  Eigen::VectorXcd log_derivatives(const SpinConfig& sigma);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spinvmc
