#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fringebos/error.hpp"

namespace fringebos {

using Complex = std::complex<double>;

/// Row-major 2D raster. sample(x, y) = data[y * width + x]; x is the column
/// (carrier) axis, y the row axis.
template <typename T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  Field(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}
  Field(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(width_) + "x" + std::to_string(height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

  std::span<T> row(std::size_t y) { return {data_.data() + y * width_, width_}; }
  std::span<const T> row(std::size_t y) const { return {data_.data() + y * width_, width_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const Field& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U>
  bool same_shape(const Field<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Field&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

/// Throws DimensionMismatch unless a and b have equal width and height.
template <typename A, typename B>
void require_same_shape(const Field<A>& a, const Field<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

bool all_finite(const RealField& f);
bool all_finite(const ComplexField& f);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double phi);
RealField wrap_phase(const RealField& phi);

RealField real_part(const ComplexField& f);
RealField arg(const ComplexField& f);
RealField abs(const ComplexField& f);
ComplexField to_complex(const RealField& f);

double mean(const RealField& f);
double min_value(const RealField& f);
double max_value(const RealField& f);

/// Copy of the sub-rectangle [x0, x0 + w) x [y0, y0 + h).
RealField crop(const RealField& f, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h);

}  // namespace fringebos
