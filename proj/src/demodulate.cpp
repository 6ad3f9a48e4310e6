#include "fringebos/demodulate.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <tuple>

#include "fringebos/fft.hpp"
#include "fringebos/parallel.hpp"

namespace fringebos::demodulate {

using std::numbers::pi;

void SubspaceConfig::validate() const {
  if (window() < 3) throw Error(ErrorCode::BadArguments, "window size must be >= 3");
  if (svd_mode == SvdMode::PowerIteration && power_iters < 5) {
    throw Error(ErrorCode::BadArguments, "power_iters must be >= 5");
  }
  if (carrier_fx && !(std::isfinite(*carrier_fx) && std::abs(*carrier_fx) < 0.5)) {
    throw Error(ErrorCode::BadArguments, "carrier must lie in (-0.5, 0.5)");
  }
}

namespace {

// Scratch buffers reused across windows by one worker.
struct Workspace {
  std::vector<Complex> gram;
  std::vector<Complex> u, w, v;

  explicit Workspace(std::size_t n) : gram(n * n), u(n), w(n), v(n) {}
};

double norm2(std::span<const Complex> x) {
  double s = 0.0;
  for (const auto& c : x) s += std::norm(c);
  return std::sqrt(s);
}

// Power iteration on G = M M^H. Leaves u, v, sigma in the workspace.
struct PowerOutcome {
  double sigma;
  bool converged;
  std::size_t iterations;
};

PowerOutcome power_triple(const Complex* m, std::size_t n, std::size_t iters, Workspace& ws) {
  // Hermitian Gram matrix, upper triangle mirrored
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) {
      Complex s = 0.0;
      const Complex* mr = m + r * n;
      const Complex* mc = m + c * n;
      for (std::size_t k = 0; k < n; ++k) s += mr[k] * std::conj(mc[k]);
      ws.gram[r * n + c] = s;
      ws.gram[c * n + r] = std::conj(s);
    }
  }
  // start from the strongest column of M
  std::size_t best = 0;
  double best_norm = -1.0;
  for (std::size_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += std::norm(m[r * n + c]);
    if (s > best_norm) {
      best_norm = s;
      best = c;
    }
  }
  if (!(best_norm > 0.0)) return {0.0, true, 0};
  for (std::size_t r = 0; r < n; ++r) ws.u[r] = m[r * n + best];
  double scale = 1.0 / norm2(ws.u);
  for (auto& x : ws.u) x *= scale;

  double lambda = 0.0, lambda_prev = 0.0;
  std::size_t it = 0;
  for (; it < iters; ++it) {
    for (std::size_t r = 0; r < n; ++r) {
      Complex s = 0.0;
      const Complex* gr = ws.gram.data() + r * n;
      for (std::size_t k = 0; k < n; ++k) s += gr[k] * ws.u[k];
      ws.w[r] = s;
    }
    lambda_prev = lambda;
    lambda = norm2(ws.w);
    if (!(lambda > 0.0)) return {0.0, true, it + 1};
    double change = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const Complex next = ws.w[r] / lambda;
      change += std::norm(next - ws.u[r]);
      ws.u[r] = next;
    }
    if (change < 1e-26) {
      ++it;
      break;
    }
  }
  // v = M^H u / sigma with sigma = |M^H u|
  for (std::size_t c = 0; c < n; ++c) {
    Complex s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += std::conj(m[r * n + c]) * ws.u[r];
    ws.v[c] = s;
  }
  const double sigma = norm2(ws.v);
  if (sigma > 0.0) {
    for (auto& x : ws.v) x /= sigma;
  }
  const bool converged =
      it < iters || std::abs(lambda - lambda_prev) <= 1e-10 * std::max(lambda, 1e-300);
  return {sigma, converged, it};
}

double full_triple(const Complex* m, std::size_t n, Workspace& ws) {
  Eigen::MatrixXcd mat(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) mat(r, c) = m[r * n + c];
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  for (std::size_t i = 0; i < n; ++i) {
    ws.u[i] = svd.matrixU()(i, 0);
    ws.v[i] = svd.matrixV()(i, 0);
  }
  return svd.singularValues()(0);
}

// Shift-invariance phase: arg of <x[0..n-2], x[1..n-1]>, i.e. arg(X1^+ X2).
double shift_phase(std::span<const Complex> x) {
  Complex s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += std::conj(x[i]) * x[i + 1];
  return std::arg(s);
}

struct WindowOutcome {
  WindowEstimate est;
  bool converged;
};

WindowOutcome estimate_impl(const Complex* m, std::size_t n, SvdMode mode, std::size_t iters,
                            Workspace& ws) {
  for (std::size_t i = 0; i < n * n; ++i) {
    if (!std::isfinite(m[i].real()) || !std::isfinite(m[i].imag())) {
      throw Error(ErrorCode::NonFinite, "window contains non-finite samples");
    }
  }
  double sigma;
  bool converged = true;
  if (mode == SvdMode::Full) {
    sigma = full_triple(m, n, ws);
  } else {
    const auto p = power_triple(m, n, iters, ws);
    sigma = p.sigma;
    converged = p.converged;
  }
  if (!(sigma > 0.0)) throw Error(ErrorCode::RankDeficient, "window has zero energy");

  // u spans the row (y) direction; v* spans the column (x) direction because
  // M = sigma u v^H.
  WindowEstimate est;
  est.a2 = shift_phase(ws.u);
  for (auto& x : ws.v) x = std::conj(x);
  est.a1 = shift_phase(ws.v);

  const auto half = static_cast<double>(n / 2);
  Complex acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double y = static_cast<double>(r) - half;
    Complex row_acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double x = static_cast<double>(c) - half;
      row_acc += m[r * n + c] * std::polar(1.0, -est.a1 * x);
    }
    acc += row_acc * std::polar(1.0, -est.a2 * y);
  }
  if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag())) {
    throw Error(ErrorCode::NonFinite, "non-finite phase accumulator");
  }
  est.a0 = wrap_phase(std::arg(acc));
  return {est, converged};
}

// reflect-101 index into [0, n)
std::ptrdiff_t mirror(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

DominantTriple dominant_svd(SquareMatrixView m, SvdMode mode, std::size_t iters) {
  if (m.n < 2 || m.data.size() != m.n * m.n) {
    throw Error(ErrorCode::BadArguments, "dominant_svd needs a square matrix with n >= 2");
  }
  Workspace ws(m.n);
  DominantTriple out;
  if (mode == SvdMode::Full) {
    out.sigma = full_triple(m.data.data(), m.n, ws);
  } else {
    const auto p = power_triple(m.data.data(), m.n, iters, ws);
    out.sigma = p.sigma;
    out.converged = p.converged;
    out.iterations = p.iterations;
  }
  out.u = ws.u;
  out.v = ws.v;
  return out;
}

std::vector<double> singular_values(SquareMatrixView m) {
  Eigen::MatrixXcd mat(m.n, m.n);
  for (std::size_t r = 0; r < m.n; ++r) {
    for (std::size_t c = 0; c < m.n; ++c) mat(r, c) = m(r, c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

ComplexField analytic_signal(const RealField& fringe) {
  const std::size_t n = fringe.width();
  fft::PlanRows forward(n, fringe.height(), fft::Direction::Forward);
  fft::PlanRows inverse(n, fringe.height(), fft::Direction::Inverse);
  auto buf = forward.buffer();
  for (std::size_t i = 0; i < fringe.size(); ++i) buf[i] = fringe.data()[i];
  forward.execute();

  std::vector<double> gain(n, 0.0);
  gain[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n) gain[k] = 2.0;
    else if (2 * k == n) gain[k] = 1.0;
  }
  auto ibuf = inverse.buffer();
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t y = 0; y < fringe.height(); ++y) {
    for (std::size_t k = 0; k < n; ++k) ibuf[y * n + k] = buf[y * n + k] * (gain[k] * scale);
  }
  inverse.execute();
  return ComplexField(n, fringe.height(), std::vector<Complex>(ibuf.begin(), ibuf.end()));
}

namespace {

// Least-squares line through the unwrapped phase of a[x0, x0 + len) of row y.
std::pair<double, double> edge_phase_line(const ComplexField& a, std::size_t y, std::size_t x0,
                                          std::size_t len, double& amplitude) {
  double phase = 0.0, last = 0.0;
  double sx = 0.0, sp = 0.0, sxx = 0.0, sxp = 0.0;
  amplitude = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const Complex v = a(x0 + i, y);
    const double p = std::arg(v);
    phase = i == 0 ? p : phase + std::remainder(p - last, 2.0 * std::numbers::pi);
    last = p;
    const double x = static_cast<double>(x0 + i);
    sx += x;
    sp += phase;
    sxx += x * x;
    sxp += x * phase;
    amplitude += std::abs(v);
  }
  const double n = static_cast<double>(len);
  amplitude /= n;
  const double slope = (n * sxp - sx * sp) / (n * sxx - sx * sx);
  return {slope, (sp - slope * sx) / n};
}

}  // namespace

ComplexField analytic_signal_extended(const RealField& fringe, const RowExtension& ext) {
  const std::size_t w = fringe.width(), h = fringe.height();
  if (ext.length == 0 || ext.fit_length < 2 || w < 2 * (ext.fit_offset + ext.fit_length)) {
    return analytic_signal(fringe);
  }
  const ComplexField first = analytic_signal(fringe);
  const std::size_t e = ext.length;
  RealField padded(w + 2 * e, h);
  for (std::size_t y = 0; y < h; ++y) {
    std::copy(fringe.row(y).begin(), fringe.row(y).end(), padded.row(y).begin() + static_cast<std::ptrdiff_t>(e));
    double amp = 0.0;
    auto [slope, icpt] = edge_phase_line(first, y, ext.fit_offset, ext.fit_length, amp);
    for (std::size_t k = 1; k <= e; ++k) {
      padded(e - k, y) = amp * std::cos(icpt - slope * static_cast<double>(k));
    }
    std::tie(slope, icpt) = edge_phase_line(first, y, w - ext.fit_offset - ext.fit_length, ext.fit_length, amp);
    for (std::size_t k = 1; k <= e; ++k) {
      padded(w - 1 + k + e, y) = amp * std::cos(icpt + slope * static_cast<double>(w - 1 + k));
    }
  }
  const ComplexField full = analytic_signal(padded);
  ComplexField out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out(x, y) = full(x + e, y);
  }
  return out;
}

WindowEstimate estimate_window(const ComplexField& window, SvdMode mode, std::size_t power_iters) {
  if (window.width() != window.height() || window.width() < 3) {
    throw Error(ErrorCode::BadArguments, "window must be square with S >= 3");
  }
  Workspace ws(window.width());
  return estimate_impl(window.data().data(), window.width(), mode, power_iters, ws).est;
}

SubspaceResult demodulate_subspace(const ComplexField& field, const SubspaceConfig& cfg) {
  cfg.validate();
  const std::size_t s = cfg.window();
  const std::size_t half = cfg.half_window;
  const std::size_t width = field.width(), height = field.height();
  if (width < s || height < s) {
    throw Error(ErrorCode::DegenerateSize, "field smaller than the analysis window");
  }

  // mirror-padded copy
  const std::size_t pw = width + 2 * half, ph = height + 2 * half;
  std::vector<Complex> padded(pw * ph);
  for (std::size_t py = 0; py < ph; ++py) {
    const auto sy = static_cast<std::size_t>(
        mirror(static_cast<std::ptrdiff_t>(py) - static_cast<std::ptrdiff_t>(half),
               static_cast<std::ptrdiff_t>(height)));
    for (std::size_t px = 0; px < pw; ++px) {
      const auto sx = static_cast<std::size_t>(
          mirror(static_cast<std::ptrdiff_t>(px) - static_cast<std::ptrdiff_t>(half),
                 static_cast<std::ptrdiff_t>(width)));
      padded[py * pw + px] = field(sx, sy);
    }
  }

  SubspaceResult out{RealField(width, height), RealField(width, height), RealField(width, height)};
  std::vector<std::uint8_t> valid(width * height, 1);
  std::vector<std::uint8_t> unconverged(width * height, 0);

  parallel_for(0, height, [&](std::size_t y) {
    Workspace ws(s);
    std::vector<Complex> win(s * s);
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t r = 0; r < s; ++r) {
        const Complex* src = padded.data() + (y + r) * pw + x;
        std::copy(src, src + s, win.data() + r * s);
      }
      const std::size_t idx = y * width + x;
      try {
        const auto res = estimate_impl(win.data(), s, cfg.svd_mode, cfg.power_iters, ws);
        out.wrapped.data()[idx] = res.est.a0;
        out.freq_x.data()[idx] = res.est.a1;
        out.freq_y.data()[idx] = res.est.a2;
        unconverged[idx] = res.converged ? 0 : 1;
      } catch (const Error&) {
        valid[idx] = 0;
      }
    }
  });

  for (auto u : unconverged) out.unconverged += u;
  for (auto v : valid) out.flagged += (v == 0);
  if (out.flagged == width * height) {
    throw Error(ErrorCode::RankDeficient, "no pixel produced a valid estimate");
  }
  if (out.flagged > 0) {
    // multi-source BFS from valid pixels: each flagged pixel copies its nearest valid neighbour
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < valid.size(); ++i) {
      if (valid[i]) queue.push_back(i);
    }
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const std::size_t x = i % width, y = i / width;
      const std::size_t nbrs[4] = {x > 0 ? i - 1 : i, x + 1 < width ? i + 1 : i,
                                   y > 0 ? i - width : i, y + 1 < height ? i + width : i};
      for (std::size_t j : nbrs) {
        if (valid[j]) continue;
        valid[j] = 1;
        out.wrapped.data()[j] = out.wrapped.data()[i];
        out.freq_x.data()[j] = out.freq_x.data()[i];
        out.freq_y.data()[j] = out.freq_y.data()[i];
        queue.push_back(j);
      }
    }
  }
  return out;
}

namespace {

double estimate_carrier_impl(const ComplexField& field, bool positive_only) {
  const std::size_t width = field.width(), height = field.height();
  if (width < 64 || height < 64) {
    throw Error(ErrorCode::NoPeak, "carrier estimation needs at least 64x64 samples");
  }
  const std::size_t len = 8 * width;
  fft::PlanRows plan(len, height, fft::Direction::Forward);
  auto buf = plan.buffer();
  std::fill(buf.begin(), buf.end(), Complex(0.0));
  std::vector<double> hann(width);
  for (std::size_t i = 0; i < width; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(width - 1));
  }
  // row means removed first: window leakage from a strong DC term would
  // otherwise reach past the exclusion zone and pose as a peak
  double scale = 0.0;
  for (std::size_t y = 0; y < height; ++y) {
    Complex m = 0.0;
    for (std::size_t x = 0; x < width; ++x) m += field(x, y);
    m /= static_cast<double>(width);
    for (std::size_t x = 0; x < width; ++x) {
      buf[y * len + x] = (field(x, y) - m) * hann[x];
      scale += std::abs(field(x, y)) * hann[x];
    }
  }
  scale /= static_cast<double>(height);
  plan.execute();
  std::vector<double> spectrum(len, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t k = 0; k < len; ++k) spectrum[k] += std::abs(buf[y * len + k]);
  }
  for (auto& v : spectrum) v /= static_cast<double>(height);

  std::size_t peak = len;
  double peak_value = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double f = fft::bin_frequency(k, len);
    if (std::abs(f) < 0.01) continue;
    if (positive_only && f <= 0.0) continue;
    if (spectrum[k] > peak_value) {
      peak_value = spectrum[k];
      peak = k;
    }
  }
  if (peak == len || !(peak_value > 1e-9 * scale) || !std::isfinite(peak_value)) {
    throw Error(ErrorCode::NoPeak, "no spectral peak away from DC");
  }
  const double lm = std::log(std::max(spectrum[(peak + len - 1) % len], 1e-300));
  const double lc = std::log(peak_value);
  const double lp = std::log(std::max(spectrum[(peak + 1) % len], 1e-300));
  const double denom = lm - 2.0 * lc + lp;
  const double delta = denom < 0.0 ? 0.5 * (lm - lp) / denom : 0.0;
  return fft::bin_frequency(peak, len) + delta / static_cast<double>(len);
}

}  // namespace

double estimate_carrier(const ComplexField& field) { return estimate_carrier_impl(field, false); }

double estimate_carrier(const RealField& field) {
  return estimate_carrier_impl(to_complex(field), true);
}

RealField remove_carrier(const RealField& wrapped, double fx) {
  RealField out(wrapped.width(), wrapped.height());
  for (std::size_t y = 0; y < wrapped.height(); ++y) {
    for (std::size_t x = 0; x < wrapped.width(); ++x) {
      out(x, y) = wrap_phase(wrapped(x, y) - 2.0 * pi * fx * static_cast<double>(x));
    }
  }
  return out;
}

}  // namespace fringebos::demodulate
