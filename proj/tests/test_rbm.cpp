#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "spinvmc/rbm.hpp"

using namespace spinvmc;

namespace {

SpinConfig random_config(int n, Rng& rng) {
  SpinConfig s(n);
  for (int i = 0; i < n; ++i) s[i] = rng.uniform_int(2) ? -1 : +1;
  return s;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("canonical representative rule") {
  // keep sigma when 2 sum + sigma_0 < 0, else negate
  SpinConfig pos(std::vector<std::int8_t>{+1, +1, -1});
  SpinConfig neg(std::vector<std::int8_t>{-1, -1, +1});
  CHECK(canonicalize(pos) == neg);
  CHECK(canonicalize(neg) == neg);

  // zero-magnetization shell tie-breaks on site 0
  SpinConfig a(std::vector<std::int8_t>{+1, -1, +1, -1});
  SpinConfig b(std::vector<std::int8_t>{-1, +1, -1, +1});
  CHECK(canonicalize(a) == b);
  CHECK(canonicalize(b) == b);

  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto sigma = random_config(7, rng);
    auto rep = canonicalize(sigma);
    CHECK(canonicalize(rep) == rep);                      // idempotent
    CHECK(canonicalize(sigma.negated()) == rep);          // sign-blind
    CHECK(2 * rep.total() + rep[0] < 0);                  // representative predicate
  }
}

TEST_CASE("spin-flip symmetry is bit-exact") {
  auto lat = build_lattice({8});
  auto p = init_params(2, 8, 1e-2, 5);
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto sigma = random_config(8, rng);
    cx a = log_psi(p, lat, sigma);
    cx b = log_psi(p, lat, sigma.negated());
    CHECK(a.real() == b.real());
    CHECK(a.imag() == b.imag());
  }
}

TEST_CASE("parameter flattening round trip") {
  auto p = init_params(3, 5, 1e-2, 9);
  CHECK(p.param_count() == 18);
  auto v = p.flatten();
  REQUIRE(v.size() == 18);
  // row-major weights first, then biases
  CHECK(v(0) == p.weights(0, 0));
  CHECK(v(4) == p.weights(0, 4));
  CHECK(v(5) == p.weights(1, 0));
  CHECK(v(15) == p.biases(0));
  CHECK(v(17) == p.biases(2));
  auto q = RbmParams::unflatten(v, 3, 5);
  CHECK(q.weights == p.weights);
  CHECK(q.biases == p.biases);

  try {
    RbmParams::unflatten(v, 2, 5);
    FAIL("expected shape_mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape_mismatch);
  }
}

TEST_CASE("parameter initialisation is seeded and scaled") {
  auto a = init_params(4, 30, 1e-3, 42);
  auto b = init_params(4, 30, 1e-3, 42);
  CHECK(a.weights == b.weights);
  CHECK(a.biases == b.biases);
  auto c = init_params(4, 30, 1e-3, 43);
  CHECK(a.weights != c.weights);

  // each real part carries variance scale/2; pool a few thousand entries
  auto big = init_params(20, 50, 1e-3, 7);
  double sum = 0, sum2 = 0;
  long count = 0;
  auto tally = [&](cx z) {
    sum += z.real() + z.imag();
    sum2 += z.real() * z.real() + z.imag() * z.imag();
    count += 2;
  };
  for (int i = 0; i < big.weights.rows(); ++i)
    for (int j = 0; j < big.weights.cols(); ++j) tally(big.weights(i, j));
  for (int i = 0; i < big.biases.size(); ++i) tally(big.biases(i));
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  CHECK(std::abs(mean) < 1.5e-3);  // 3 sigma for this entry count
  CHECK(var == doctest::Approx(0.5e-3).epsilon(0.1));
}

TEST_CASE("log cosh against the naive series") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const cx z(10 * (rng.uniform() - 0.5), 20 * (rng.uniform() - 0.5));
    const cx stable = log_cosh(z);
    const cx naive = oracle::naive_log_cosh(z);
    // imaginary parts may legitimately differ by multiples of 2 pi, so compare
    // through the exponential
    CHECK(std::abs(std::exp(stable - naive) - 1.0) < 1e-12);
    CHECK(stable.real() == doctest::Approx(naive.real()).epsilon(1e-12));
    CHECK(re_log_cosh(z) == doctest::Approx(naive.real()).epsilon(1e-12));
  }

  // far in the tails the function is sign(Re z) * z - log 2 to double precision
  const cx big(500.0, 0.3);
  CHECK(std::abs(log_cosh(big) - (big - std::log(2.0))) < 1e-12);
  CHECK(std::abs(log_cosh(-big) - (big - std::log(2.0))) < 1e-12);
  CHECK(re_log_cosh(big) == doctest::Approx(500.0 - std::log(2.0)).epsilon(1e-15));

  // purely imaginary arguments stay finite and real
  CHECK(re_log_cosh(cx(0, 0.7)) == doctest::Approx(std::log(std::cos(0.7))).epsilon(1e-12));
}

TEST_CASE("naive wavefunction agrees with the library") {
  auto lat = build_lattice({6});
  auto p = init_params(2, 6, 0.05, 13);
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    auto sigma = random_config(6, rng);
    cx mine = log_psi(p, lat, sigma);
    cx ref = oracle::naive_log_psi(p, lat, sigma);
    CHECK(std::abs(std::exp(mine - ref) - 1.0) < 1e-12);
  }
}

TEST_CASE("fft and direct backends match") {
  for (auto dims : {std::vector<int>{16}, {4, 4}}) {
    auto lat = build_lattice(dims);
    for (double scale : {0.01, 0.5}) {
      auto p = init_params(3, lat.n, scale, 17);
      RbmEvaluator direct(lat, Backend::direct);
      RbmEvaluator fft(lat, Backend::fft);
      direct.bind(p);
      fft.bind(p);
      Rng rng(51);
      for (int trial = 0; trial < 60; ++trial) {
        auto sigma = random_config(lat.n, rng);
        const cx a = direct.log_psi(sigma);
        const cx b = fft.log_psi(sigma);
        CHECK(std::abs(a.real() - b.real()) < 1e-9 * (1 + std::abs(a.real())));
        CHECK(std::abs(std::remainder(a.imag() - b.imag(), 2 * M_PI)) < 1e-9);
        CHECK(direct.log_weight(sigma) ==
              doctest::Approx(fft.log_weight(sigma)).epsilon(1e-10));
        const Eigen::VectorXcd da = direct.log_derivatives(sigma);
        const Eigen::VectorXcd db = fft.log_derivatives(sigma);
        CHECK((da - db).cwiseAbs().maxCoeff() < 1e-9 * (1 + da.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("log derivatives match finite differences") {
  auto lat = build_lattice({6});
  auto p = init_params(2, 6, 0.1, 19);
  Rng rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    auto sigma = random_config(6, rng);
    const Eigen::VectorXcd nu = log_derivatives(p, lat, sigma);
    REQUIRE(nu.size() == p.param_count());
    for (int i = 0; i < nu.size(); ++i) {
      const cx fd = oracle::fd_holomorphic(
          [&](const RbmParams& q) { return log_psi(q, lat, sigma); }, p, i, 1e-6);
      CHECK(std::abs(nu(i) - fd) < 1e-5);
    }
  }
}

TEST_CASE("second log derivatives match finite differences of the first") {
  auto lat = build_lattice({5});
  auto p = init_params(2, 5, 0.1, 23);
  Rng rng(71);
  auto sigma = random_config(5, rng);
  const Eigen::MatrixXcd ell = log_second_derivatives(p, lat, sigma);
  const int np = p.param_count();
  REQUIRE(ell.rows() == np);
  REQUIRE(ell.cols() == np);
  CHECK((ell - ell.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < np; ++j) {
    Eigen::VectorXcd fd(np);
    for (int i = 0; i < np; ++i)
      fd(i) = oracle::fd_holomorphic(
          [&, i](const RbmParams& q) { return log_derivatives(q, lat, sigma)(i); }, p, j,
          1e-5);
    CHECK((ell.col(j) - fd).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("translation invariance away from the zero-magnetization shell") {
  auto lat = build_lattice({6});
  auto p = init_params(2, 6, 0.05, 29);
  Rng rng(81);
  int checked = 0;
  while (checked < 30) {
    auto sigma = random_config(6, rng);
    if (sigma.total() == 0) continue;
    ++checked;
    const cx base = log_psi(p, lat, sigma);
    for (int t = 1; t < 6; ++t) {
      const cx shifted = log_psi(p, lat, apply_translation(lat, t, sigma));
      CHECK(std::abs(std::exp(shifted - base) - 1.0) < 1e-12);
    }
  }

  // on the shell the canonical tie-break can land the translated configuration
  // on the other representative, so invariance genuinely fails there
  SpinConfig onshell(std::vector<std::int8_t>{-1, +1, -1, -1, +1, +1});
  double worst = 0;
  const cx base = log_psi(p, lat, onshell);
  for (int t = 1; t < 6; ++t) {
    const cx shifted = log_psi(p, lat, apply_translation(lat, t, onshell));
    worst = std::max(worst, std::abs(std::exp(shifted - base) - 1.0));
  }
  CHECK(worst > 1e-8);
}

TEST_CASE("checkpoint round trip is lossless") {
  auto p = init_params(3, 8, 1e-2, 37);
  const std::string path = temp_path("spinvmc_test_roundtrip.ckpt");
  save_checkpoint(p, path);
  auto q = load_checkpoint(path);
  CHECK(q.alpha == 3);
  CHECK(q.n == 8);
  // hexfloat serialization must reproduce every bit
  CHECK(p.flatten() == q.flatten());

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "3 8");
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint error handling") {
  auto p = init_params(1, 4, 1e-2, 39);
  const std::string path = temp_path("spinvmc_test_broken.ckpt");

  auto expect_kind = [&](ErrorKind want) {
    try {
      load_checkpoint(path);
      FAIL("expected load failure");
    } catch (const Error& e) {
      CHECK(e.kind() == want);
    }
  };

  save_checkpoint(p, path);
  {  // drop the last line
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    in.close();
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    std::ofstream(path) << text;
  }
  expect_kind(ErrorKind::data_error);

  save_checkpoint(p, path);
  {  // trailing garbage
    std::ofstream out(path, std::ios::app);
    out << "0x1p0 0x1p0\n";
  }
  expect_kind(ErrorKind::data_error);

  save_checkpoint(p, path);
  {  // corrupt a number
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    in.close();
    auto pos = text.find("0x");
    text.replace(pos, 2, "zz");
    std::ofstream(path) << text;
  }
  expect_kind(ErrorKind::data_error);

  std::filesystem::remove(path);
  expect_kind(ErrorKind::io_error);

  try {
    save_checkpoint(p, "/nonexistent_dir_spinvmc/x.ckpt");
    FAIL("expected io_error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io_error);
  }
}

TEST_CASE("zero-amplitude configurations are flagged") {
  auto lat = build_lattice({2});
  RbmParams p;
  p.alpha = 1;
  p.n = 2;
  p.weights.resize(1, 2);
  // theta of the canonical representative of (+,-) lands exactly on i pi / 2,
  // a zero of cosh
  p.weights(0, 0) = cx(0, -M_PI / 4);
  p.weights(0, 1) = cx(0, M_PI / 4);
  p.biases = Eigen::VectorXcd::Zero(1);

  SpinConfig dead(std::vector<std::int8_t>{+1, -1});
  SpinConfig alive(std::vector<std::int8_t>{+1, +1});

  RbmEvaluator eval(lat);
  eval.bind(p);
  CHECK(std::isinf(eval.log_weight(dead)));
  CHECK(eval.log_weight(dead) < 0);
  CHECK(std::isfinite(eval.log_weight(alive)));
  CHECK(std::isinf(log_psi(p, lat, dead).real()));

  try {
    eval.log_derivatives(dead);
    FAIL("expected zero_amplitude");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::zero_amplitude);
  }
}

TEST_CASE("parameter validation") {
  auto p = init_params(2, 4, 1e-2, 41);
  p.weights(1, 2) = cx(std::nan(""), 0);
  try {
    p.validate();
    FAIL("expected data_error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data_error);
  }

  RbmParams bad;
  bad.alpha = 2;
  bad.n = 4;
  bad.weights.resize(2, 3);
  bad.weights.setZero();
  bad.biases = Eigen::VectorXcd::Zero(2);
  try {
    bad.validate();
    FAIL("expected shape_mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape_mismatch);
  }
}
