#pragma once

#include <cstddef>
#include <span>

#include "fringebos/field.hpp"

namespace fringebos::fft {

enum class Direction { Forward, Inverse };

/// Owns an FFTW plan and an aligned scratch buffer for one transform shape.
/// Transforms are unnormalized in both directions. Instances are not shared
/// between threads; planning is serialised internally.
class Plan2d {
 public:
  Plan2d(std::size_t width, std::size_t height, Direction dir);
  ~Plan2d();
  Plan2d(const Plan2d&) = delete;
  Plan2d& operator=(const Plan2d&) = delete;

  std::span<Complex> buffer() noexcept;
  void execute();

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

 private:
  std::size_t width_;
  std::size_t height_;
  void* buf_ = nullptr;
  void* plan_ = nullptr;
};

/// Batched 1D transforms along every row (the x axis).
class PlanRows {
 public:
  PlanRows(std::size_t width, std::size_t height, Direction dir);
  ~PlanRows();
  PlanRows(const PlanRows&) = delete;
  PlanRows& operator=(const PlanRows&) = delete;

  std::span<Complex> buffer() noexcept;
  void execute();

 private:
  std::size_t width_;
  std::size_t height_;
  void* buf_ = nullptr;
  void* plan_ = nullptr;
};

/// Unnormalized 2D transform of a whole field.
ComplexField transform2d(const ComplexField& in, Direction dir);
/// Inverse 2D transform scaled by 1/N.
ComplexField inverse2d(const ComplexField& spectrum);

/// Unnormalized 1D transform of each row.
ComplexField transform_rows(const ComplexField& in, Direction dir);

/// Signed frequency (cycles/sample) of DFT bin k for length n.
inline double bin_frequency(std::size_t k, std::size_t n) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (2 * k < n) ? kk / nn : (kk - nn) / nn;
}

}  // namespace fringebos::fft
