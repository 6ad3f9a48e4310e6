#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace fringebos::plot {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line chart: axes, grid, min/max tick labels and one coloured
/// polyline with markers per series. Series colours follow their order.
void write_line_chart(const std::vector<Series>& series, const std::filesystem::path& path,
                      std::size_t width = 640, std::size_t height = 400);

}  // namespace fringebos::plot
