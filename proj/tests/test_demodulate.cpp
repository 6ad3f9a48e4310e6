#include <doctest.h>

#include <Eigen/Dense>

#include <chrono>

#include "fringebos/demodulate.hpp"
#include "fringebos/normalize.hpp"
#include "fringebos/parallel.hpp"
#include "fringebos/simulate.hpp"
#include "helpers.hpp"

using namespace fringebos;
using namespace fringebos::demodulate;

namespace {

// Circular complex Gaussian noise with E|n|^2 = sigma^2.
ComplexField noisy_plane(std::size_t s, double a0, double a1, double a2, double sigma, Rng& rng) {
  auto f = testutil::plane_wave(s, s, a0, a1, a2);
  std::normal_distribution<double> n(0.0, sigma / std::sqrt(2.0));
  for (auto& v : f.data()) v += Complex(n(rng), n(rng));
  return f;
}

ComplexField random_matrix(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexField m(n, n);
  for (auto& v : m.data()) v = Complex(g(rng), g(rng));
  return m;
}

SquareMatrixView view(const ComplexField& m) { return {m.data(), m.width()}; }

}  // namespace

TEST_SUITE("demodulate") {

TEST_CASE("analytic signal of a pure cosine") {
  const std::size_t w = 250, h = 3;
  RealField f(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) f(x, y) = std::cos(2 * M_PI * 0.1 * x);
  }
  const auto a = analytic_signal(f);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      CHECK(std::abs(a(x, y) - std::polar(1.0, 2 * M_PI * 0.1 * x)) < 1e-6);
    }
  }
}

TEST_CASE("real part of the analytic signal reproduces the input") {
  for (std::size_t w : {1u, 2u, 7u, 64u, 129u}) {
    const auto f = testutil::random_field(w, 5, w);
    const auto a = analytic_signal(f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(a.data()[i].real() - f.data()[i]) < 1e-12);
    const auto e = analytic_signal_extended(f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(e.data()[i].real() - f.data()[i]) < 1e-9);
  }
}

TEST_CASE("row extension reduces the end error on a non-periodic row") {
  const std::size_t w = 256;
  RealField f(w, 1);
  auto phase = [](double x) { return 2 * M_PI * 0.047 * x + 2e-5 * x * x; };
  for (std::size_t x = 0; x < w; ++x) f(x, 0) = std::cos(phase(x));
  const auto plain = analytic_signal(f);
  const auto ext = analytic_signal_extended(f);
  double err_plain = 0.0, err_ext = 0.0;
  for (std::size_t x = 0; x < w; ++x) {
    const Complex truth = std::polar(1.0, phase(x));
    err_plain = std::max(err_plain, std::abs(plain(x, 0) - truth));
    err_ext = std::max(err_ext, std::abs(ext(x, 0) - truth));
  }
  CHECK(err_ext < 0.25 * err_plain);
  CHECK(err_ext < 0.05);
}

TEST_CASE("analytic magnitude after classical normalization") {
  // per pixel at 30 dB: the noise alone moves a few pixels past +-10%
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    simulate::EvalSceneParams p;
    p.modulation = simulate::ModulationKind::Uniform;
    p.snr_db = 30.0;
    const auto scene = simulate::make_eval_scene(p, seed);
    const auto a = analytic_signal_extended(normalize::classical_normalize(simulate::synth_fringe(scene)));
    const std::size_t m = 16;
    std::size_t inside = 0, total = 0;
    for (std::size_t y = m; y + m < a.height(); ++y) {
      for (std::size_t x = m; x + m < a.width(); ++x) {
        const double mag = std::abs(a(x, y));
        inside += mag >= 0.9 && mag <= 1.1;
        ++total;
        CHECK(mag > 0.75);
        CHECK(mag < 1.25);
      }
    }
    CHECK(static_cast<double>(inside) / static_cast<double>(total) > 0.97);
  }
}

TEST_CASE("local fringe amplitude after classical normalization at 20 dB") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    simulate::EvalSceneParams p;
    p.modulation = simulate::ModulationKind::Uniform;
    p.snr_db = 20.0;
    const auto scene = simulate::make_eval_scene(p, seed);
    const auto a = analytic_signal_extended(normalize::classical_normalize(simulate::synth_fringe(scene)));
    // local amplitude: magnitude averaged over a 9x9 neighbourhood
    const std::size_t m = 16, r = 4;
    for (std::size_t y = m; y + m < a.height(); ++y) {
      for (std::size_t x = m; x + m < a.width(); ++x) {
        double s = 0.0;
        for (std::size_t v = y - r; v <= y + r; ++v) {
          for (std::size_t u = x - r; u <= x + r; ++u) s += std::abs(a(u, v));
        }
        const double local = s / 81.0;
        CHECK(local >= 0.8);
        CHECK(local <= 1.2);
      }
    }
  }
}

TEST_CASE("estimate_window is exact on linear phase") {
  const auto win = testutil::plane_wave(11, 11, 0.3, 0.1, 0.2);
  for (auto mode : {SvdMode::Full, SvdMode::PowerIteration}) {
    const auto e = estimate_window(win, mode);
    CHECK(std::abs(e.a0 - 0.3) < 1e-8);
    CHECK(std::abs(e.a1 - 0.1) < 1e-8);
    CHECK(std::abs(e.a2 - 0.2) < 1e-8);
  }
  const auto c = estimate_window(ComplexField(11, 11, std::polar(1.0, 0.7)));
  CHECK(std::abs(c.a0 - 0.7) < 1e-10);
  CHECK(std::abs(c.a1) < 1e-10);
  CHECK(std::abs(c.a2) < 1e-10);
}

TEST_CASE("estimate_window error paths") {
  try {
    estimate_window(ComplexField(5, 5));
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  auto bad = testutil::plane_wave(5, 5, 0, 0.1, 0.1);
  bad(2, 2) = Complex(NAN, 0.0);
  try {
    estimate_window(bad);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}

TEST_CASE("estimate_window Monte Carlo at sigma 0.3") {
  Rng rng(17);
  double err = 0.0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const auto w = noisy_plane(11, 0.3, 0.1, 0.2, 0.3, rng);
    err += std::abs(estimate_window(w).a1 - 0.1);
  }
  CHECK(err / trials < 0.01);
}

TEST_CASE("phase-shift equivariance and conjugation antisymmetry") {
  Rng rng(23);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int t = 0; t < 20; ++t) {
    const auto w = noisy_plane(11, u(rng), u(rng), u(rng), 0.2, rng);
    const auto e = estimate_window(w, SvdMode::Full);
    const double c = u(rng) * 3.0;
    ComplexField shifted = w, conj = w;
    for (auto& v : shifted.data()) v *= std::polar(1.0, c);
    for (auto& v : conj.data()) v = std::conj(v);
    const auto es = estimate_window(shifted, SvdMode::Full);
    CHECK(testutil::angle_diff(es.a0, e.a0 + c) < 1e-8);
    CHECK(std::abs(es.a1 - e.a1) < 1e-8);
    CHECK(std::abs(es.a2 - e.a2) < 1e-8);
    const auto ec = estimate_window(conj, SvdMode::Full);
    CHECK(testutil::angle_diff(ec.a0, -e.a0) < 1e-8);
    CHECK(testutil::angle_diff(ec.a1, -e.a1) < 1e-8);
    CHECK(testutil::angle_diff(ec.a2, -e.a2) < 1e-8);
  }
}

TEST_CASE("noise-subspace separation on a noiseless window") {
  const auto w = testutil::plane_wave(11, 11, 1.1, -0.4, 0.25);
  const auto sv = singular_values(view(w));
  REQUIRE(sv.size() == 11);
  CHECK(sv[1] / sv[0] < 1e-10);
  CHECK(sv[0] == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("dominant_svd on rank-1 and random matrices") {
  Rng rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 9;
  std::vector<Complex> p(n), q(n);
  for (auto& v : p) v = Complex(g(rng), g(rng));
  for (auto& v : q) v = Complex(g(rng), g(rng));
  ComplexField m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) m(c, r) = p[r] * std::conj(q[c]);
  }
  double np = 0, nq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    np += std::norm(p[i]);
    nq += std::norm(q[i]);
  }
  for (auto mode : {SvdMode::Full, SvdMode::PowerIteration}) {
    const auto t = dominant_svd(view(m), mode);
    CHECK(t.sigma == doctest::Approx(std::sqrt(np * nq)).epsilon(1e-10));
    // u parallel to p: |<u, p>| = |p|
    Complex ip = 0;
    for (std::size_t i = 0; i < n; ++i) ip += std::conj(t.u[i]) * p[i];
    CHECK(std::abs(ip) == doctest::Approx(std::sqrt(np)).epsilon(1e-10));
  }

  // windows as the estimator sees them: a plane wave plus noise, kept when
  // the leading singular value is separated by more than 1.5
  int compared = 0;
  std::uniform_real_distribution<double> u(-1.0, 1.0), level(0.2, 2.5);
  for (int k = 0; k < 300; ++k) {
    const auto a = noisy_plane(11, u(rng) * M_PI, u(rng), u(rng), level(rng), rng);
    const auto sv = singular_values(view(a));
    ComplexField ah(11, 11);
    for (std::size_t r = 0; r < 11; ++r) {
      for (std::size_t c = 0; c < 11; ++c) ah(c, r) = std::conj(a(r, c));
    }
    const auto full = dominant_svd(view(a), SvdMode::Full);
    CHECK(std::abs(full.sigma - dominant_svd(view(ah), SvdMode::Full).sigma) < 1e-10 * full.sigma);
    CHECK(full.sigma == doctest::Approx(sv[0]).epsilon(1e-12));
    if (sv[0] / sv[1] <= 1.5) continue;
    ++compared;
    const auto pow = dominant_svd(view(a), SvdMode::PowerIteration, 30);
    CHECK(std::abs(pow.sigma - full.sigma) < 1e-8 * full.sigma);
  }
  CHECK(compared > 200);
}

TEST_CASE("full mode agrees with an Eigen reference") {
  Rng rng(37);
  for (int k = 0; k < 20; ++k) {
    const auto a = random_matrix(11, rng);
    Eigen::MatrixXcd e(11, 11);
    for (std::size_t r = 0; r < 11; ++r) {
      for (std::size_t c = 0; c < 11; ++c) e(r, c) = a(c, r);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(e);
    const auto sv = singular_values(view(a));
    for (int i = 0; i < 11; ++i) CHECK(sv[i] == doctest::Approx(svd.singularValues()[i]).epsilon(1e-12));
  }
}

TEST_CASE("demodulate_subspace on exact fields") {
  const std::size_t n = 48;
  ComplexField carrier(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) carrier(x, y) = std::polar(1.0, 2 * M_PI * 0.05 * x);
  }
  SubspaceConfig cfg;
  const auto res = demodulate_subspace(carrier, cfg);
  CHECK(res.flagged == 0);
  for (std::size_t y = 6; y + 6 < n; ++y) {
    for (std::size_t x = 6; x + 6 < n; ++x) {
      CHECK(testutil::angle_diff(res.wrapped(x, y), 2 * M_PI * 0.05 * x) < 1e-6);
    }
  }
  for (double v : res.wrapped.data()) CHECK(v > -M_PI);
  for (double v : res.wrapped.data()) CHECK(v <= M_PI);

  const auto flat = demodulate_subspace(ComplexField(20, 20, std::polar(1.0, 1.0)), cfg);
  for (double v : flat.wrapped.data()) CHECK(std::abs(v - 1.0) < 1e-10);
}

TEST_CASE("axis calibration over all sign combinations") {
  for (double a : {-0.3, -0.1, 0.1, 0.3}) {
    for (double b : {-0.3, -0.1, 0.1, 0.3}) {
      const auto f = testutil::plane_wave(32, 24, 0.0, a, b, false);
      const auto res = demodulate_subspace(f, {});
      for (std::size_t y = 6; y + 6 < 24; ++y) {
        for (std::size_t x = 6; x + 6 < 32; ++x) {
          CHECK(std::abs(res.freq_x(x, y) - a) < 1e-6);
          CHECK(std::abs(res.freq_y(x, y) - b) < 1e-6);
          CHECK(testutil::angle_diff(res.wrapped(x, y), a * x + b * y) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("zero regions are flagged and filled") {
  auto f = testutil::plane_wave(40, 40, 0.0, 0.2, 0.0, false);
  for (std::size_t y = 10; y < 30; ++y) {
    for (std::size_t x = 10; x < 30; ++x) f(x, y) = 0.0;
  }
  const auto res = demodulate_subspace(f, {});
  CHECK(res.flagged > 0);
  for (double v : res.wrapped.data()) CHECK(std::isfinite(v));
}

TEST_CASE("subspace output does not depend on the worker count") {
  Rng rng(41);
  const auto f = noisy_plane(64, 0.2, 0.31, -0.12, 0.5, rng);
  set_thread_count(1);
  const auto a = demodulate_subspace(f, {});
  set_thread_count(4);
  const auto b = demodulate_subspace(f, {});
  set_thread_count(0);
  CHECK(a.wrapped == b.wrapped);
  CHECK(a.freq_x == b.freq_x);
}

TEST_CASE("config validation") {
  SubspaceConfig cfg;
  cfg.half_window = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.half_window = 1;
  CHECK_NOTHROW(cfg.validate());
  cfg.power_iters = 4;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.svd_mode = SvdMode::Full;
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(demodulate_subspace(ComplexField(8, 8, 1.0), SubspaceConfig{}), Error);
}

TEST_CASE("carrier estimation") {
  ComplexField f(256, 256), g(256, 256);
  for (std::size_t y = 0; y < 256; ++y) {
    for (std::size_t x = 0; x < 256; ++x) {
      f(x, y) = std::polar(1.0, 2 * M_PI * 0.05 * x);
      g(x, y) = std::polar(1.0, 2 * M_PI * 0.0625 * x);
    }
  }
  CHECK(std::abs(estimate_carrier(f) - 0.05) < 2e-4);
  CHECK(std::abs(estimate_carrier(g) - 0.0625) < 1e-12);

  simulate::EvalSceneParams p;
  p.fx = 0.047;
  p.snr_db = 20.0;
  p.modulation = simulate::ModulationKind::Uniform;
  const auto img = simulate::synth_fringe(simulate::make_eval_scene(p, 2));
  CHECK(std::abs(estimate_carrier(img) - 0.047) < 1e-3);

  try {
    estimate_carrier(ComplexField(64, 64, 1.0));
    FAIL("expected NoPeak");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPeak);
  }
  CHECK_THROWS_AS(estimate_carrier(ComplexField(32, 32, 1.0)), Error);
}

TEST_CASE("remove_carrier") {
  const auto w = testutil::random_field(30, 7, 3, -M_PI + 1e-9, M_PI);
  CHECK(remove_carrier(w, 0.0) == w);
  RealField c(30, 7);
  for (std::size_t y = 0; y < 7; ++y) {
    for (std::size_t x = 0; x < 30; ++x) c(x, y) = wrap_phase(2 * M_PI * 0.07 * x);
  }
  for (double v : remove_carrier(c, 0.07).data()) CHECK(std::abs(v) < 1e-12);
}

}
