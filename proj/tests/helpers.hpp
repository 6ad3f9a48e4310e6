#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "fringebos/field.hpp"
#include "fringebos/rng.hpp"

namespace testutil {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fringebos_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fringebos::RealField random_field(std::size_t w, std::size_t h, std::uint64_t seed,
                                         double lo = -1.0, double hi = 1.0) {
  fringebos::Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  fringebos::RealField f(w, h);
  for (auto& v : f.data()) v = u(rng);
  return f;
}

// exp(j (a0 + a1 x + a2 y)) with x, y centred on the field middle.
inline fringebos::ComplexField plane_wave(std::size_t w, std::size_t h, double a0, double a1,
                                          double a2, bool centred = true) {
  fringebos::ComplexField f(w, h);
  const double cx = centred ? (static_cast<double>(w) - 1) / 2 : 0.0;
  const double cy = centred ? (static_cast<double>(h) - 1) / 2 : 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      f(x, y) = std::polar(1.0, a0 + a1 * (static_cast<double>(x) - cx) + a2 * (static_cast<double>(y) - cy));
    }
  }
  return f;
}

inline double max_abs_diff(const fringebos::RealField& a, const fringebos::RealField& b,
                           std::size_t margin = 0) {
  double m = 0.0;
  for (std::size_t y = margin; y + margin < a.height(); ++y) {
    for (std::size_t x = margin; x + margin < a.width(); ++x) m = std::max(m, std::abs(a(x, y) - b(x, y)));
  }
  return m;
}

// Distance between two angles on the circle.
inline double angle_diff(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * M_PI)); }

}  // namespace testutil
