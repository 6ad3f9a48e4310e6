#include "fringebos/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fringebos {

bool all_finite(const RealField& f) {
  return std::all_of(f.data().begin(), f.data().end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const ComplexField& f) {
  return std::all_of(f.data().begin(), f.data().end(), [](const Complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

double wrap_phase(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(phi, two_pi);
  // remainder() returns [-pi, pi]; fold -pi onto +pi
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

RealField wrap_phase(const RealField& phi) {
  RealField out(phi.width(), phi.height());
  std::transform(phi.data().begin(), phi.data().end(), out.data().begin(),
                 [](double v) { return wrap_phase(v); });
  return out;
}

RealField real_part(const ComplexField& f) {
  RealField out(f.width(), f.height());
  std::transform(f.data().begin(), f.data().end(), out.data().begin(),
                 [](const Complex& c) { return c.real(); });
  return out;
}

RealField arg(const ComplexField& f) {
  RealField out(f.width(), f.height());
  std::transform(f.data().begin(), f.data().end(), out.data().begin(),
                 [](const Complex& c) { return wrap_phase(std::arg(c)); });
  return out;
}

RealField abs(const ComplexField& f) {
  RealField out(f.width(), f.height());
  std::transform(f.data().begin(), f.data().end(), out.data().begin(),
                 [](const Complex& c) { return std::abs(c); });
  return out;
}

ComplexField to_complex(const RealField& f) {
  ComplexField out(f.width(), f.height());
  std::transform(f.data().begin(), f.data().end(), out.data().begin(),
                 [](double v) { return Complex(v, 0.0); });
  return out;
}

double mean(const RealField& f) {
  if (f.empty()) return 0.0;
  double s = 0.0;
  for (double v : f.data()) s += v;
  return s / static_cast<double>(f.size());
}

double min_value(const RealField& f) {
  return f.empty() ? 0.0 : *std::min_element(f.data().begin(), f.data().end());
}

double max_value(const RealField& f) {
  return f.empty() ? 0.0 : *std::max_element(f.data().begin(), f.data().end());
}

RealField crop(const RealField& f, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
  if (x0 + w > f.width() || y0 + h > f.height()) {
    throw Error(ErrorCode::DimensionMismatch, "crop rectangle outside field");
  }
  RealField out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    auto src = f.row(y0 + y).subspan(x0, w);
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

}  // namespace fringebos
