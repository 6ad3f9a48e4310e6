#include "fringebos/diffusion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fringebos/parallel.hpp"

namespace fringebos::diffusion {

namespace {

constexpr double kDScale = 1e-9;
constexpr double kInitialD = 1e-9;
constexpr std::size_t kMaxIterations = 200;
constexpr double kRelTol = 1e-12;
constexpr std::size_t kMinSamples = 30;

void check_times(double t1, double t2) {
  if (!(t1 > 0.0) || !(t2 > t1) || !std::isfinite(t2)) {
    throw Error(ErrorCode::BadArguments, "times must satisfy 0 < t1 < t2");
  }
}

double profile(double dx, double d, double t) {
  return std::exp(-dx * dx / (4.0 * d * t)) / (2.0 * std::sqrt(d * t));
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

}  // namespace

ColumnRange far_field_band(std::size_t width, double fraction) {
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(width)));
  return {0, std::clamp<std::size_t>(n, 1, std::max<std::size_t>(width, 1))};
}

RealField phase_difference(const RealField& phi_t1, const RealField& phi_t2,
                           std::optional<ColumnRange> band) {
  require_same_shape(phi_t1, phi_t2, "phase_difference");
  const ColumnRange b = band ? *band : far_field_band(phi_t1.width());
  if (b.size() == 0 || b.end > phi_t1.width()) {
    throw Error(ErrorCode::DimensionMismatch, "piston band outside the frame");
  }
  RealField diff(phi_t1.width(), phi_t1.height());
  for (std::size_t i = 0; i < diff.size(); ++i) diff.data()[i] = phi_t1.data()[i] - phi_t2.data()[i];
  std::vector<double> samples;
  samples.reserve(b.size() * diff.height());
  for (std::size_t y = 0; y < diff.height(); ++y) {
    for (std::size_t x = b.begin; x < b.end; ++x) samples.push_back(diff(x, y));
  }
  const double c = median(std::move(samples));
  for (auto& v : diff.data()) v -= c;
  return diff;
}

double model_dphi(double x, double d, double amplitude, double x0, double t1, double t2) {
  check_times(t1, t2);
  if (!(d > 0.0)) throw Error(ErrorCode::BadArguments, "D must be positive");
  const double dx = x - x0;
  return amplitude * (profile(dx, d, t1) - profile(dx, d, t2));
}

DiffusionFit fit_samples(std::span<const double> x, std::span<const double> dphi, double t1,
                         double t2) {
  check_times(t1, t2);
  const std::size_t n = x.size();
  if (n != dphi.size()) throw Error(ErrorCode::DimensionMismatch, "x and dphi lengths differ");
  if (n < kMinSamples) {
    throw Error(ErrorCode::DegenerateWindow, "fit window needs at least 30 samples");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(dphi[i])) {
      throw Error(ErrorCode::NonFinite, "non-finite sample in fit window");
    }
  }
  const double mean = std::accumulate(dphi.begin(), dphi.end(), 0.0) / static_cast<double>(n);
  double ss_tot = 0.0;
  for (double v : dphi) ss_tot += (v - mean) * (v - mean);
  if (ss_tot < 1e-12) throw Error(ErrorCode::DegenerateWindow, "flat phase difference");

  std::size_t ext = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(dphi[i]) > std::abs(dphi[ext])) ext = i;
  }
  const double xe = x[ext];
  const double dx = std::abs(x[n - 1] - x[0]) / static_cast<double>(n - 1);
  const double a0 = dphi[ext] / (profile(0.0, kInitialD, t1) - profile(0.0, kInitialD, t2));

  // scaled parameters q = (D / 1e-9, A / a0, (x0 - xe) / dx)
  using Vec3 = Eigen::Vector3d;
  auto unpack = [&](const Vec3& q) {
    return std::array<double, 3>{q[0] * kDScale, q[1] * a0, xe + q[2] * dx};
  };
  auto residuals = [&](const Vec3& q, Eigen::VectorXd& r) {
    const auto [d, a, c] = unpack(q);
    for (std::size_t i = 0; i < n; ++i) {
      const double ddx = x[i] - c;
      r[static_cast<Eigen::Index>(i)] = dphi[i] - a * (profile(ddx, d, t1) - profile(ddx, d, t2));
    }
    return r.squaredNorm();
  };

  Vec3 q(kInitialD / kDScale, 1.0, 0.0);
  Eigen::VectorXd r(static_cast<Eigen::Index>(n)), r_try(static_cast<Eigen::Index>(n)),
      r_step(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 3);
  double cost = residuals(q, r);
  double lambda = 1e-3;
  DiffusionFit fit;

  while (fit.iterations < kMaxIterations) {
    ++fit.iterations;
    // forward differences of the model (= minus the residual differences)
    for (int j = 0; j < 3; ++j) {
      Vec3 qh = q;
      const double h = 1e-6 * std::max(std::abs(q[j]), 1.0);
      qh[j] += h;
      residuals(qh, r_step);
      jac.col(j) = (r - r_step) / h;
    }
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Vec3 jtr = jac.transpose() * r;
    bool accepted = false;
    while (!accepted && lambda < 1e20) {
      Eigen::Matrix3d a = jtj;
      for (int j = 0; j < 3; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-30);
      const Vec3 step = a.ldlt().solve(jtr);
      const Vec3 q_try = q + step;
      if (step.allFinite() && q_try[0] > 0.0) {
        const double cost_try = residuals(q_try, r_try);
        if (std::isfinite(cost_try) && cost_try < cost) {
          const double rel = (cost - cost_try) / cost;
          q = q_try;
          r.swap(r_try);
          cost = cost_try;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          if (rel < kRelTol) fit.converged = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    // no downhill step left at any damping: at the minimum to working precision
    if (!accepted) fit.converged = true;
    if (fit.converged || cost == 0.0) {
      fit.converged = true;
      break;
    }
  }
  const auto [d, a, c] = unpack(q);
  if (!(d > 0.0) || !std::isfinite(d) || !std::isfinite(a) || !std::isfinite(c)) {
    throw Error(ErrorCode::NoConvergence, "diffusion fit diverged");
  }
  fit.d = d;
  fit.amplitude = a;
  fit.x0 = c;
  fit.r2 = 1.0 - cost / ss_tot;
  return fit;
}

DiffusionFit fit_row(std::span<const double> dphi_row, double px, double t1, double t2,
                     ColumnRange window) {
  if (!(px > 0.0)) throw Error(ErrorCode::BadArguments, "pixel size must be positive");
  if (window.end > dphi_row.size() || window.size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "fit window outside the row");
  }
  std::vector<double> x(window.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(window.begin + i) * px;
  return fit_samples(x, dphi_row.subspan(window.begin, window.size()), t1, t2);
}

DiffusionAggregate fit_diffusion(const std::vector<RealField>& frames,
                                 const std::vector<double>& times, double px,
                                 const DiffusionOptions& opts) {
  if (frames.size() < 2 || frames.size() != times.size()) {
    throw Error(ErrorCode::BadArguments, "need at least two frames with matching times");
  }
  if (opts.first >= frames.size() || opts.second >= frames.size() || opts.first == opts.second) {
    throw Error(ErrorCode::BadArguments, "frame pair out of range");
  }
  if (opts.rows.size() < 2) throw Error(ErrorCode::BadArguments, "aggregate needs at least two rows");
  std::size_t a = opts.first, b = opts.second;
  if (times[a] > times[b]) std::swap(a, b);
  const RealField dphi = phase_difference(frames[a], frames[b], opts.band);
  for (auto row : opts.rows) {
    if (row >= dphi.height()) {
      throw Error(ErrorCode::BadArguments, "row " + std::to_string(row) + " outside the frame");
    }
  }

  ColumnRange window;
  if (opts.window) {
    window = *opts.window;
  } else {
    std::vector<double> profile_mean(dphi.width(), 0.0);
    for (auto row : opts.rows) {
      for (std::size_t x = 0; x < dphi.width(); ++x) profile_mean[x] += dphi(x, row);
    }
    std::size_t ext = 0;
    for (std::size_t x = 1; x < dphi.width(); ++x) {
      if (std::abs(profile_mean[x]) > std::abs(profile_mean[ext])) ext = x;
    }
    window.begin = ext > opts.window_half ? ext - opts.window_half : 0;
    window.end = std::min(dphi.width(), ext + opts.window_half + 1);
  }

  DiffusionAggregate agg;
  agg.fits.resize(opts.rows.size());
  parallel_for(0, opts.rows.size(), [&](std::size_t i) {
    agg.fits[i] = fit_row(dphi.row(opts.rows[i]), px, times[a], times[b], window);
    agg.fits[i].row = opts.rows[i];
  });
  double sum = 0.0;
  for (const auto& f : agg.fits) sum += f.d;
  agg.mean_d = sum / static_cast<double>(agg.fits.size());
  double ss = 0.0;
  for (const auto& f : agg.fits) ss += (f.d - agg.mean_d) * (f.d - agg.mean_d);
  agg.sd_d = std::sqrt(ss / static_cast<double>(agg.fits.size() - 1));
  return agg;
}

}  // namespace fringebos::diffusion
