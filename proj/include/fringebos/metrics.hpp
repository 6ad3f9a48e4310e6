#pragma once

#include <cstddef>

#include "fringebos/field.hpp"

namespace fringebos::metrics {

enum class SsimRange {
  Truth,  // L = max(truth) - min(truth); asymmetric in its arguments
  Pair,   // L from the joint range of both maps; symmetric
};

struct MetricOptions {
  /// Border excluded from both metrics (default W + 2 for W = 5).
  std::size_t margin = 7;
  SsimRange range = SsimRange::Truth;
};

struct EvalReport {
  double rmse = 0.0;            // rad
  double ssim = 0.0;            // [-1, 1]
  double piston_removed = 0.0;  // rad
  double valid_fraction = 0.0;  // evaluated pixels / all pixels
};

/// Piston mean(est - truth) over the evaluated interior.
double piston(const RealField& est, const RealField& truth, std::size_t margin);

/// sqrt(mean((est - c - truth)^2)) over the interior, c the piston.
double rmse_phase(const RealField& est, const RealField& truth, const MetricOptions& opts = {});

/// Single-scale SSIM (11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03),
/// averaged over valid window positions inside the interior, piston removed.
double ssim_phase(const RealField& est, const RealField& truth, const MetricOptions& opts = {});

/// SSIM of two equally sized maps with an explicit dynamic range; no
/// piston handling or cropping.
double ssim_raw(const RealField& a, const RealField& b, double dynamic_range);

EvalReport evaluate(const RealField& est, const RealField& truth, const MetricOptions& opts = {});

}  // namespace fringebos::metrics
