#include "fringebos/unwrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

namespace fringebos::unwrap {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t mirror(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  if (i < 0) return static_cast<std::size_t>(-i);
  if (static_cast<std::size_t>(i) >= n) return 2 * (n - 1) - static_cast<std::size_t>(i);
  return static_cast<std::size_t>(i);
}

}  // namespace

RealField reliability(const RealField& w) {
  const std::size_t width = w.width(), height = w.height();
  RealField out(width, height);
  auto at = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    return w(mirror(x, width), mirror(y, height));
  };
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const auto ix = static_cast<std::ptrdiff_t>(x), iy = static_cast<std::ptrdiff_t>(y);
      const double c = w(x, y);
      auto second = [&](double before, double after) {
        return wrap_phase(before - c) - wrap_phase(c - after);
      };
      const double h = second(at(ix - 1, iy), at(ix + 1, iy));
      const double v = second(at(ix, iy - 1), at(ix, iy + 1));
      const double d1 = second(at(ix - 1, iy - 1), at(ix + 1, iy + 1));
      const double d2 = second(at(ix - 1, iy + 1), at(ix + 1, iy - 1));
      out(x, y) = 1.0 / (h * h + v * v + d1 * d1 + d2 * d2 + 1e-30);
    }
  }
  return out;
}

RealField unwrap2d(const RealField& wrapped) {
  const std::size_t width = wrapped.width(), height = wrapped.height();
  if (width < 2 || height < 2) {
    throw Error(ErrorCode::DegenerateSize, "unwrap2d needs at least 2x2 samples");
  }
  const std::size_t n = width * height;
  const RealField rel = reliability(wrapped);

  // edge 2i joins pixel i to its right neighbour, 2i+1 to the one below
  struct Edge {
    double score;
    std::uint64_t index;
  };
  std::vector<Edge> edges;
  edges.reserve(2 * n);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t i = y * width + x;
      if (x + 1 < width) edges.push_back({rel.data()[i] + rel.data()[i + 1], 2 * i});
      if (y + 1 < height) edges.push_back({rel.data()[i] + rel.data()[i + width], 2 * i + 1});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });

  std::vector<std::int64_t> turns(n, 0);  // output = wrapped + 2 pi * turns
  std::vector<std::size_t> group(n);
  std::iota(group.begin(), group.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  for (const Edge& e : edges) {
    const std::size_t a = e.index / 2;
    const std::size_t b = (e.index % 2 == 0) ? a + 1 : a + width;
    std::size_t ga = group[a], gb = group[b];
    if (ga == gb) continue;
    const double diff = wrapped.data()[a] - wrapped.data()[b] +
                        kTwoPi * static_cast<double>(turns[a] - turns[b]);
    auto k = static_cast<std::int64_t>(std::llround(diff / kTwoPi));
    // shift the smaller group; k moves b's group toward a
    if (members[ga].size() < members[gb].size()) {
      std::swap(ga, gb);
      k = -k;
    }
    for (std::size_t p : members[gb]) {
      turns[p] += k;
      group[p] = ga;
    }
    members[ga].insert(members[ga].end(), members[gb].begin(), members[gb].end());
    members[gb].clear();
    members[gb].shrink_to_fit();
  }

  RealField out(width, height);
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = wrapped.data()[i] + kTwoPi * static_cast<double>(turns[i]);
  }
  return out;
}

}  // namespace fringebos::unwrap
