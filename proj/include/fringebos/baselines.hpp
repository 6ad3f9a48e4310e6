#pragma once

#include <cstddef>
#include <optional>

#include "fringebos/field.hpp"

namespace fringebos::baselines {

struct FtConfig {
  std::optional<double> band_center;     // cycles / pixel; default: estimated carrier
  std::optional<double> band_halfwidth;  // cycles / pixel; default: 0.8 * band_center
};

/// Carrier-removed sideband of the Fourier-transform method: Gaussian band
/// mask (sigma = halfwidth / 2) around (band_center, 0), zero beyond the
/// halfwidth so DC and the conjugate sideband are excluded, inverse transform,
/// demodulated by exp(-j 2 pi band_center x).
ComplexField ft_sideband(const RealField& img, const FtConfig& cfg = {});

/// arg of ft_sideband: wrapped phase with the carrier removed.
RealField ft_demodulate(const RealField& img, const FtConfig& cfg = {});

struct WftConfig {
  double sigma = 10.0;  // Gaussian window, pixels
  double wx_min = -2.0, wx_max = 2.0;  // rad / pixel
  double wy_min = -2.0, wy_max = 2.0;
  double step = 0.025;  // rad / pixel
  std::size_t tile = 64;

  void validate() const;
};

struct WftResult {
  RealField wrapped;   // arg of the ridge response, (-pi, pi]
  RealField ridge_wx;  // rad / pixel
  RealField ridge_wy;
  std::size_t frequencies_evaluated = 0;  // summed over tiles
};

/// Windowed Fourier ridges: for each pixel, the frequency on the (wx, wy)
/// grid maximizing |sum_u f(p - u) g(u) exp(j w.u)| (ties: lowest grid index)
/// and the phase of that response. Frequencies whose spectral upper bound
/// falls below every pixel's current best in a tile are skipped, which does
/// not change the result.
WftResult wft_ridges(const ComplexField& field, const WftConfig& cfg = {});

RealField wft_demodulate(const ComplexField& field, const WftConfig& cfg = {});

}  // namespace fringebos::baselines
