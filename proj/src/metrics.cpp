#include "fringebos/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fringebos::metrics {
namespace {

constexpr std::size_t kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::array<double, kWin> gaussian_taps() {
  std::array<double, kWin> taps{};
  double sum = 0.0;
  for (std::size_t i = 0; i < kWin; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

void check_shapes(const RealField& est, const RealField& truth, std::size_t margin) {
  require_same_shape(est, truth, "metric");
  if (est.width() <= 2 * margin || est.height() <= 2 * margin) {
    throw Error(ErrorCode::DimensionMismatch, "margin leaves no interior");
  }
}

RealField interior(const RealField& f, std::size_t margin) {
  return crop(f, margin, margin, f.width() - 2 * margin, f.height() - 2 * margin);
}

// Valid-mode separable Gaussian filter.
RealField filter_valid(const RealField& f, const std::array<double, kWin>& taps) {
  const std::size_t ow = f.width() - kWin + 1, oh = f.height() - kWin + 1;
  RealField rows(ow, f.height());
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kWin; ++k) s += taps[k] * f(x + k, y);
      rows(x, y) = s;
    }
  }
  RealField out(ow, oh);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kWin; ++k) s += taps[k] * rows(x, y + k);
      out(x, y) = s;
    }
  }
  return out;
}

}  // namespace

double piston(const RealField& est, const RealField& truth, std::size_t margin) {
  check_shapes(est, truth, margin);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t y = margin; y < est.height() - margin; ++y) {
    for (std::size_t x = margin; x < est.width() - margin; ++x) {
      s += est(x, y) - truth(x, y);
      ++count;
    }
  }
  return s / static_cast<double>(count);
}

double rmse_phase(const RealField& est, const RealField& truth, const MetricOptions& opts) {
  const double c = piston(est, truth, opts.margin);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t y = opts.margin; y < est.height() - opts.margin; ++y) {
    for (std::size_t x = opts.margin; x < est.width() - opts.margin; ++x) {
      const double d = est(x, y) - c - truth(x, y);
      s += d * d;
      ++count;
    }
  }
  return std::sqrt(s / static_cast<double>(count));
}

double ssim_raw(const RealField& a, const RealField& b, double dynamic_range) {
  require_same_shape(a, b, "ssim");
  if (a.width() < kWin || a.height() < kWin) {
    throw Error(ErrorCode::DimensionMismatch, "SSIM needs at least 11x11 samples");
  }
  if (!(dynamic_range > 0.0) || !std::isfinite(dynamic_range)) {
    throw Error(ErrorCode::DegenerateRange, "SSIM dynamic range must be positive");
  }
  static const auto taps = gaussian_taps();
  RealField aa(a.width(), a.height()), bb(a.width(), a.height()), ab(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa.data()[i] = a.data()[i] * a.data()[i];
    bb.data()[i] = b.data()[i] * b.data()[i];
    ab.data()[i] = a.data()[i] * b.data()[i];
  }
  const RealField mu_a = filter_valid(a, taps), mu_b = filter_valid(b, taps);
  const RealField m_aa = filter_valid(aa, taps), m_bb = filter_valid(bb, taps),
                  m_ab = filter_valid(ab, taps);
  const double c1 = (kK1 * dynamic_range) * (kK1 * dynamic_range);
  const double c2 = (kK2 * dynamic_range) * (kK2 * dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.data()[i], mb = mu_b.data()[i];
    const double va = m_aa.data()[i] - ma * ma;
    const double vb = m_bb.data()[i] - mb * mb;
    const double cov = m_ab.data()[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim_phase(const RealField& est, const RealField& truth, const MetricOptions& opts) {
  const double c = piston(est, truth, opts.margin);
  RealField shifted = interior(est, opts.margin);
  RealField t = interior(truth, opts.margin);
  for (auto& v : shifted.data()) v -= c;
  double lo = min_value(t), hi = max_value(t);
  if (opts.range == SsimRange::Pair) {
    // shared convention: both maps centered, range over both
    const double mt = mean(t);
    for (auto& v : t.data()) v -= mt;
    for (auto& v : shifted.data()) v -= mt;
    lo = std::min(min_value(t), min_value(shifted));
    hi = std::max(max_value(t), max_value(shifted));
  }
  if (!(hi > lo)) throw Error(ErrorCode::DegenerateRange, "truth map is constant");
  return ssim_raw(shifted, t, hi - lo);
}

EvalReport evaluate(const RealField& est, const RealField& truth, const MetricOptions& opts) {
  EvalReport r;
  r.piston_removed = piston(est, truth, opts.margin);
  r.rmse = rmse_phase(est, truth, opts);
  r.ssim = ssim_phase(est, truth, opts);
  const double inner = static_cast<double>((est.width() - 2 * opts.margin) *
                                           (est.height() - 2 * opts.margin));
  r.valid_fraction = inner / static_cast<double>(est.size());
  return r;
}

}  // namespace fringebos::metrics
