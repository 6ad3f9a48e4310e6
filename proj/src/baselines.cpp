#include "fringebos/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "fringebos/demodulate.hpp"
#include "fringebos/fft.hpp"
#include "fringebos/parallel.hpp"

namespace fringebos::baselines {

using std::numbers::pi;

ComplexField ft_sideband(const RealField& img, const FtConfig& cfg) {
  const double fc = cfg.band_center ? *cfg.band_center : demodulate::estimate_carrier(img);
  const double hw = cfg.band_halfwidth ? *cfg.band_halfwidth : 0.8 * fc;
  if (!(fc - hw > 0.0) || !(hw > 0.0)) {
    throw Error(ErrorCode::NoCarrier, "sideband band overlaps DC (center " + std::to_string(fc) +
                                          ", halfwidth " + std::to_string(hw) + ")");
  }
  const double sigma_f = hw / 2.0;
  auto spectrum = fft::transform2d(to_complex(img), fft::Direction::Forward);
  for (std::size_t ky = 0; ky < img.height(); ++ky) {
    const double fy = fft::bin_frequency(ky, img.height());
    for (std::size_t kx = 0; kx < img.width(); ++kx) {
      const double fx = fft::bin_frequency(kx, img.width());
      const double d2 = (fx - fc) * (fx - fc) + fy * fy;
      spectrum(kx, ky) *= d2 <= hw * hw ? std::exp(-d2 / (2.0 * sigma_f * sigma_f)) : 0.0;
    }
  }
  auto side = fft::inverse2d(spectrum);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      side(x, y) *= std::polar(1.0, -2.0 * pi * fc * static_cast<double>(x));
    }
  }
  return side;
}

RealField ft_demodulate(const RealField& img, const FtConfig& cfg) {
  return arg(ft_sideband(img, cfg));
}

void WftConfig::validate() const {
  if (!(sigma > 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::BadArguments, "WFT sigma and step must be positive");
  }
  if (step > 1.0 / sigma) {
    throw Error(ErrorCode::BadArguments, "WFT step must not exceed 1 / sigma");
  }
  if (wx_max < wx_min || wy_max < wy_min) {
    throw Error(ErrorCode::BadArguments, "empty WFT frequency range");
  }
  if (tile == 0) throw Error(ErrorCode::BadArguments, "WFT tile must be positive");
}

namespace {

std::size_t grid_count(double lo, double hi, double step) {
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

std::size_t smooth_size(std::size_t n) {
  for (;; ++n) {
    std::size_t m = n;
    for (std::size_t p : {2, 3, 5, 7}) {
      while (m % p == 0) m /= p;
    }
    if (m == 1) return n;
  }
}

// 1D window taps over u = -K..K with unit energy.
std::vector<double> window_taps(double sigma, std::size_t k) {
  std::vector<double> g(2 * k + 1);
  double energy = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double u = static_cast<double>(i) - static_cast<double>(k);
    g[i] = std::exp(-u * u / (2.0 * sigma * sigma));
    energy += g[i] * g[i];
  }
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& v : g) v *= scale;
  return g;
}

// table[i * n + k] = sum_u g(u) cos((omega_k - w_i) u): the DFT of g(u) exp(j w_i u)
// at bin k (real because g is symmetric).
std::vector<double> kernel_spectra(const std::vector<double>& taps, std::size_t n,
                                   const std::vector<double>& freqs) {
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  std::vector<double> table(freqs.size() * n);
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double omega = 2.0 * pi * fft::bin_frequency(k, n) - freqs[i];
      double s = taps[static_cast<std::size_t>(half)];
      for (std::ptrdiff_t u = 1; u <= half; ++u) {
        s += 2.0 * taps[static_cast<std::size_t>(half + u)] * std::cos(omega * static_cast<double>(u));
      }
      table[i * n + k] = s;
    }
  }
  return table;
}

struct TileBest {
  std::vector<double> mag;
  std::vector<std::size_t> index;
  std::vector<double> phase;
};

}  // namespace

WftResult wft_ridges(const ComplexField& field, const WftConfig& cfg) {
  cfg.validate();
  const std::size_t width = field.width(), height = field.height();
  if (static_cast<double>(std::min(width, height)) < 4.0 * cfg.sigma) {
    throw Error(ErrorCode::DegenerateSize, "field must span at least 4 sigma per axis");
  }
  const auto k = static_cast<std::size_t>(std::ceil(3.0 * cfg.sigma));
  const std::size_t tile = std::min({cfg.tile, width, height});
  const std::size_t n = smooth_size(tile + 2 * k);

  const std::size_t nwx = grid_count(cfg.wx_min, cfg.wx_max, cfg.step);
  const std::size_t nwy = grid_count(cfg.wy_min, cfg.wy_max, cfg.step);
  std::vector<double> wx(nwx), wy(nwy);
  for (std::size_t i = 0; i < nwx; ++i) wx[i] = cfg.wx_min + cfg.step * static_cast<double>(i);
  for (std::size_t i = 0; i < nwy; ++i) wy[i] = cfg.wy_min + cfg.step * static_cast<double>(i);

  const auto taps = window_taps(cfg.sigma, k);
  const auto gx = kernel_spectra(taps, n, wx);
  const auto gy = kernel_spectra(taps, n, wy);
  std::vector<double> abs_gx(gx.size()), abs_gy(gy.size());
  std::transform(gx.begin(), gx.end(), abs_gx.begin(), [](double v) { return std::abs(v); });
  std::transform(gy.begin(), gy.end(), abs_gy.begin(), [](double v) { return std::abs(v); });

  const std::size_t tiles_x = (width + tile - 1) / tile;
  const std::size_t tiles_y = (height + tile - 1) / tile;

  WftResult out{RealField(width, height), RealField(width, height), RealField(width, height), 0};
  std::vector<std::size_t> evaluated(tiles_x * tiles_y, 0);
  const double inv_n2 = 1.0 / static_cast<double>(n * n);

  parallel_for(0, tiles_x * tiles_y, [&](std::size_t t) {
    const std::size_t x0 = (t % tiles_x) * tile, y0 = (t / tiles_x) * tile;
    const std::size_t tw = std::min(tile, width - x0), th = std::min(tile, height - y0);
    // region origin in image coordinates: (x0 - k, y0 - k)
    fft::Plan2d forward(n, n, fft::Direction::Forward);
    fft::Plan2d inverse(n, n, fft::Direction::Inverse);
    auto fbuf = forward.buffer();
    std::fill(fbuf.begin(), fbuf.end(), Complex(0.0));
    for (std::size_t ry = 0; ry < th + 2 * k; ++ry) {
      const auto iy = static_cast<std::ptrdiff_t>(y0 + ry) - static_cast<std::ptrdiff_t>(k);
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
      for (std::size_t rx = 0; rx < tw + 2 * k; ++rx) {
        const auto ix = static_cast<std::ptrdiff_t>(x0 + rx) - static_cast<std::ptrdiff_t>(k);
        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) continue;
        fbuf[ry * n + rx] = field(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
      }
    }
    forward.execute();
    const std::vector<Complex> spectrum(fbuf.begin(), fbuf.end());
    std::vector<double> abs_f(n * n);
    for (std::size_t i = 0; i < n * n; ++i) abs_f[i] = std::abs(spectrum[i]);

    // upper bound on |response| at every pixel, per grid frequency
    std::vector<double> partial(n * nwx, 0.0);  // [ky][ix]
    for (std::size_t ky = 0; ky < n; ++ky) {
      for (std::size_t ix = 0; ix < nwx; ++ix) {
        const double* g = abs_gx.data() + ix * n;
        const double* f = abs_f.data() + ky * n;
        double s = 0.0;
        for (std::size_t kx = 0; kx < n; ++kx) s += f[kx] * g[kx];
        partial[ky * nwx + ix] = s;
      }
    }
    const std::size_t nfreq = nwx * nwy;
    std::vector<double> bound(nfreq, 0.0);
    for (std::size_t iy = 0; iy < nwy; ++iy) {
      const double* g = abs_gy.data() + iy * n;
      for (std::size_t ky = 0; ky < n; ++ky) {
        const double w = g[ky];
        const double* p = partial.data() + ky * nwx;
        double* b = bound.data() + iy * nwx;
        for (std::size_t ix = 0; ix < nwx; ++ix) b[ix] += w * p[ix];
      }
    }
    for (auto& b : bound) b *= inv_n2;
    std::vector<std::size_t> order(nfreq);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (bound[a] != bound[b]) return bound[a] > bound[b];
      return a < b;
    });

    TileBest best{std::vector<double>(tw * th, -1.0), std::vector<std::size_t>(tw * th, nfreq),
                  std::vector<double>(tw * th, 0.0)};
    double floor_mag = -1.0;  // min over tile pixels of the current best
    auto ibuf = inverse.buffer();
    std::size_t done = 0;
    for (std::size_t pos = 0; pos < nfreq; ++pos) {
      const std::size_t fi = order[pos];
      if (bound[fi] * (1.0 + 1e-9) < floor_mag) break;
      const std::size_t ix = fi % nwx, iy = fi / nwx;
      const double* gxr = gx.data() + ix * n;
      const double* gyr = gy.data() + iy * n;
      for (std::size_t ky = 0; ky < n; ++ky) {
        const double wyk = gyr[ky] * inv_n2;
        for (std::size_t kx = 0; kx < n; ++kx) {
          ibuf[ky * n + kx] = spectrum[ky * n + kx] * (gxr[kx] * wyk);
        }
      }
      inverse.execute();
      for (std::size_t ty = 0; ty < th; ++ty) {
        for (std::size_t tx = 0; tx < tw; ++tx) {
          const Complex r = ibuf[(ty + k) * n + (tx + k)];
          const double mag = std::abs(r);
          const std::size_t p = ty * tw + tx;
          if (mag > best.mag[p] || (mag == best.mag[p] && fi < best.index[p])) {
            best.mag[p] = mag;
            best.index[p] = fi;
            best.phase[p] = std::arg(r);
          }
        }
      }
      ++done;
      // refresh the pruning floor every few frequencies
      if (done % 8 == 0) floor_mag = *std::min_element(best.mag.begin(), best.mag.end());
    }
    evaluated[t] = done;
    for (std::size_t ty = 0; ty < th; ++ty) {
      for (std::size_t tx = 0; tx < tw; ++tx) {
        const std::size_t p = ty * tw + tx;
        const std::size_t fi = best.index[p];
        out.wrapped(x0 + tx, y0 + ty) = wrap_phase(best.phase[p]);
        out.ridge_wx(x0 + tx, y0 + ty) = wx[fi % nwx];
        out.ridge_wy(x0 + tx, y0 + ty) = wy[fi / nwx];
      }
    }
  });
  out.frequencies_evaluated = std::accumulate(evaluated.begin(), evaluated.end(), std::size_t{0});
  return out;
}

RealField wft_demodulate(const ComplexField& field, const WftConfig& cfg) {
  return wft_ridges(field, cfg).wrapped;
}

}  // namespace fringebos::baselines
