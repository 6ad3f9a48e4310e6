#include "fringebos/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "fringebos/error.hpp"
#include "fringebos/raster_io.hpp"

namespace fringebos::plot {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr std::array<Rgb, 6> kPalette{{{31, 119, 180}, {214, 39, 40}, {44, 160, 44},
                                       {255, 127, 14}, {148, 103, 189}, {140, 86, 75}}};

// 3x5 glyphs, one row per 3-bit nibble, for tick labels.
std::array<std::uint8_t, 5> glyph(char c) {
  switch (c) {
    case '0': return {7, 5, 5, 5, 7};
    case '1': return {2, 6, 2, 2, 7};
    case '2': return {7, 1, 7, 4, 7};
    case '3': return {7, 1, 7, 1, 7};
    case '4': return {5, 5, 7, 1, 1};
    case '5': return {7, 4, 7, 1, 7};
    case '6': return {7, 4, 7, 5, 7};
    case '7': return {7, 1, 1, 1, 1};
    case '8': return {7, 5, 7, 5, 7};
    case '9': return {7, 5, 7, 1, 7};
    case '.': return {0, 0, 0, 0, 2};
    case '-': return {0, 0, 7, 0, 0};
    case 'e': return {0, 7, 7, 4, 7};
    case '+': return {0, 2, 7, 2, 0};
    default: return {0, 0, 0, 0, 0};
  }
}

class Canvas {
 public:
  Canvas(std::size_t w, std::size_t h) : w_(w), h_(h), px_(w * h * 3, 255) {}

  void set(long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(w_) || y >= static_cast<long>(h_)) return;
    auto* p = px_.data() + (static_cast<std::size_t>(y) * w_ + static_cast<std::size_t>(x)) * 3;
    std::copy(c.begin(), c.end(), p);
  }

  void line(double x0, double y0, double x1, double y1, Rgb c, int thick = 1) {
    const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const long x = std::lround(x0 + t * (x1 - x0)), y = std::lround(y0 + t * (y1 - y0));
      for (int dy = -(thick / 2); dy <= thick / 2; ++dy) {
        for (int dx = -(thick / 2); dx <= thick / 2; ++dx) set(x + dx, y + dy, c);
      }
    }
  }

  void text(long x, long y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const auto g = glyph(ch);
      for (int r = 0; r < 5; ++r) {
        for (int b = 0; b < 3; ++b) {
          if (g[r] & (4 >> b)) {
            for (int sy = 0; sy < 2; ++sy) {
              for (int sx = 0; sx < 2; ++sx) set(x + 2 * b + sx, y + 2 * r + sy, c);
            }
          }
        }
      }
      x += 8;
    }
  }

  const std::vector<std::uint8_t>& pixels() const { return px_; }

 private:
  std::size_t w_, h_;
  std::vector<std::uint8_t> px_;
};

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void write_line_chart(const std::vector<Series>& series, const std::filesystem::path& path,
                      std::size_t width, std::size_t height) {
  if (width < 120 || height < 100) throw Error(ErrorCode::BadArguments, "chart too small");
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::DimensionMismatch, "series x/y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!(xhi >= xlo)) xlo = 0, xhi = 1;
  if (!(yhi >= ylo)) ylo = 0, yhi = 1;
  if (xhi == xlo) xlo -= 0.5, xhi += 0.5;
  if (yhi == ylo) ylo -= 0.5, yhi += 0.5;
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;

  Canvas canvas(width, height);
  const double left = 60, right = static_cast<double>(width) - 20, top = 20,
               bottom = static_cast<double>(height) - 40;
  auto sx = [&](double x) { return left + (x - xlo) / (xhi - xlo) * (right - left); };
  auto sy = [&](double y) { return bottom - (y - ylo) / (yhi - ylo) * (bottom - top); };

  const Rgb grid{225, 225, 225}, axis{60, 60, 60};
  for (int i = 0; i <= 4; ++i) {
    const double gx = left + i * (right - left) / 4, gy = top + i * (bottom - top) / 4;
    canvas.line(gx, top, gx, bottom, grid);
    canvas.line(left, gy, right, gy, grid);
  }
  canvas.line(left, bottom, right, bottom, axis);
  canvas.line(left, top, left, bottom, axis);
  canvas.text(static_cast<long>(left), static_cast<long>(bottom) + 8, label(xlo), axis);
  const std::string xh = label(xhi);
  canvas.text(static_cast<long>(right) - 8 * static_cast<long>(xh.size()), static_cast<long>(bottom) + 8, xh, axis);
  canvas.text(4, static_cast<long>(bottom) - 10, label(ylo), axis);
  canvas.text(4, static_cast<long>(top), label(yhi), axis);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Rgb c = kPalette[k % kPalette.size()];
    const auto& s = series[k];
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.y[i + 1])) continue;
      canvas.line(sx(s.x[i]), sy(s.y[i]), sx(s.x[i + 1]), sy(s.y[i + 1]), c, 2);
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const long cx = std::lround(sx(s.x[i])), cy = std::lround(sy(s.y[i]));
      for (long dy = -3; dy <= 3; ++dy) {
        for (long dx = -3; dx <= 3; ++dx) canvas.set(cx + dx, cy + dy, c);
      }
    }
    // legend swatch
    const long ly = 24 + 14 * static_cast<long>(k);
    for (long dy = 0; dy < 8; ++dy) {
      for (long dx = 0; dx < 20; ++dx) canvas.set(static_cast<long>(right) - 24 + dx, ly + dy, c);
    }
  }
  write_png_rgb8(canvas.pixels(), width, height, path);
}

}  // namespace fringebos::plot
