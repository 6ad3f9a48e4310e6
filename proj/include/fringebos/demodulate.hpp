#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fringebos/field.hpp"

namespace fringebos::demodulate {

/// Local linear phase a0 + a1 x + a2 y over a window with centered
/// coordinates x, y in [-W, W]; x is the column axis.
struct WindowEstimate {
  double a0 = 0.0;  // rad, (-pi, pi]
  double a1 = 0.0;  // rad / pixel along x (columns), carrier included
  double a2 = 0.0;  // rad / pixel along y (rows)
};

enum class SvdMode { Full, PowerIteration };

struct SubspaceConfig {
  std::size_t half_window = 5;  // W; window S = 2W + 1
  SvdMode svd_mode = SvdMode::PowerIteration;
  std::size_t power_iters = 30;
  /// Carrier used by callers for carrier removal; nullopt means estimate it.
  std::optional<double> carrier_fx;

  std::size_t window() const noexcept { return 2 * half_window + 1; }
  void validate() const;
};

/// Column-major-free view of a square complex matrix: element (r, c) is
/// data[r * n + c].
struct SquareMatrixView {
  std::span<const Complex> data;
  std::size_t n = 0;
  Complex operator()(std::size_t r, std::size_t c) const { return data[r * n + c]; }
};

struct DominantTriple {
  double sigma = 0.0;
  std::vector<Complex> u;  // left singular vector, length n
  std::vector<Complex> v;  // right singular vector, length n
  bool converged = true;   // power mode: relative sigma change <= 1e-10 at exit
  std::size_t iterations = 0;
};

/// Leading singular triple of M = sigma u v^H. Full mode runs a complete SVD;
/// power mode iterates on M M^H.
DominantTriple dominant_svd(SquareMatrixView m, SvdMode mode, std::size_t iters = 30);

/// All singular values, descending (full SVD). Used for diagnostics and tests.
std::vector<double> singular_values(SquareMatrixView m);

/// Per-row analytic signal: forward transform along x, zero negative
/// frequencies, double positive ones, keep DC and Nyquist, inverse.
ComplexField analytic_signal(const RealField& fringe);

struct RowExtension {
  std::size_t length = 64;      // samples added beyond each row end
  std::size_t fit_offset = 8;   // phase line fitted on [offset, offset + fit_length)
  std::size_t fit_length = 24;  // samples from each end
};

/// analytic_signal with reduced row-end error: a first pass gives the local
/// phase near each end, the rows are extended by a cosine following that
/// phase line, and the extended rows are transformed again and cropped.
ComplexField analytic_signal_extended(const RealField& fringe, const RowExtension& ext = {});

/// Subspace estimate for one S x S window (row index = y). Throws
/// RankDeficient when the window is all zero and NonFinite on bad input.
WindowEstimate estimate_window(const ComplexField& window, SvdMode mode = SvdMode::PowerIteration,
                               std::size_t power_iters = 30);

struct SubspaceResult {
  RealField wrapped;       // a0 per pixel, (-pi, pi]
  RealField freq_x;        // a1 per pixel
  RealField freq_y;        // a2 per pixel
  std::size_t flagged = 0;       // pixels that failed and were filled
  std::size_t unconverged = 0;   // power iteration did not meet tolerance
};

/// Slides an S x S window (mirror-padded at the borders) over every pixel.
SubspaceResult demodulate_subspace(const ComplexField& field, const SubspaceConfig& cfg);

/// Carrier frequency (cycles / pixel) from the row-averaged spectrum
/// magnitude: mean-removed, Hann-windowed, 8x zero-padded rows, peak refined
/// by 3-point parabolic interpolation, DC neighbourhood (|f| < 0.01)
/// excluded. NoPeak when nothing is left away from DC.
double estimate_carrier(const ComplexField& field);
/// Real-valued overload: only positive frequencies are searched.
double estimate_carrier(const RealField& field);

/// wrap(wrapped - 2 pi fx x).
RealField remove_carrier(const RealField& wrapped, double fx);

}  // namespace fringebos::demodulate
