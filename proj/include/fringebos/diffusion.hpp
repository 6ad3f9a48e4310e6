#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fringebos/field.hpp"

namespace fringebos::diffusion {

/// Column range [begin, end).
struct ColumnRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
};

/// Leftmost `fraction` of the columns (at least one).
ColumnRange far_field_band(std::size_t width, double fraction = 0.1);

/// phi_t1 - phi_t2 minus the median of that difference over the band.
RealField phase_difference(const RealField& phi_t1, const RealField& phi_t2,
                           std::optional<ColumnRange> band = std::nullopt);

/// A (exp(-(x - x0)^2 / (4 D t1)) / (2 sqrt(D t1)) - same at t2).
double model_dphi(double x, double d, double amplitude, double x0, double t1, double t2);

struct DiffusionFit {
  double d = 0.0;          // m^2 / s
  double amplitude = 0.0;
  double x0 = 0.0;         // m
  double r2 = 0.0;
  std::size_t row = 0;
  std::size_t iterations = 0;
  bool converged = false;  // relative cost change fell below 1e-12
};

struct DiffusionAggregate {
  double mean_d = 0.0;
  double sd_d = 0.0;  // sample standard deviation over rows
  std::vector<DiffusionFit> fits;
};

/// Levenberg-Marquardt fit of model_dphi to samples at positions x (m).
/// Starts from x0 at the extremum, D = 1e-9 and the amplitude matching the
/// extremum value. Throws DegenerateWindow for flat data.
DiffusionFit fit_samples(std::span<const double> x, std::span<const double> dphi, double t1,
                         double t2);

/// Fits columns [window.begin, window.end) of one row, x = column * px.
DiffusionFit fit_row(std::span<const double> dphi_row, double px, double t1, double t2,
                     ColumnRange window);

struct DiffusionOptions {
  std::size_t first = 0;   // frame indices of the pair
  std::size_t second = 5;
  std::vector<std::size_t> rows{150, 350, 502, 650, 800};
  std::optional<ColumnRange> window;  // default: window_half around the extremum
  std::size_t window_half = 400;
  std::optional<ColumnRange> band;    // piston band, default leftmost 10%
};

DiffusionAggregate fit_diffusion(const std::vector<RealField>& frames,
                                 const std::vector<double>& times, double px,
                                 const DiffusionOptions& opts = {});

}  // namespace fringebos::diffusion
