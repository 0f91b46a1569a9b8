#include "bubbleglare/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace bubbleglare {

std::vector<PixelRun> fill_even_odd(std::span<const Polygon> polygons, Index width, Index height, double offset) {
  std::vector<std::vector<double>> crossings(static_cast<std::size_t>(std::max<Index>(height, 0)));
  for (const auto& poly : polygons) {
    const std::size_t n = poly.size();
    if (n < 3) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      if (a.x() == b.x()) continue;
      // Rows whose sample line y satisfies min <= y < max (half-open).
      const double lo = std::min(a.x(), b.x());
      const double hi = std::max(a.x(), b.x());
      const Index r0 = std::max<Index>(0, static_cast<Index>(std::ceil(lo - offset)));
      const Index r1 = std::min<Index>(height - 1, static_cast<Index>(std::ceil(hi - offset)) - 1);
      for (Index r = r0; r <= r1; ++r) {
        const double y = static_cast<double>(r) + offset;
        if (y < lo || y >= hi) continue;
        const double t = (y - a.x()) / (b.x() - a.x());
        crossings[static_cast<std::size_t>(r)].push_back(a.y() + t * (b.y() - a.y()));
      }
    }
  }
  std::vector<PixelRun> runs;
  for (Index r = 0; r < height; ++r) {
    auto& xs = crossings[static_cast<std::size_t>(r)];
    if (xs.size() < 2) continue;
    std::sort(xs.begin(), xs.end());
    // A sample x is inside when an odd number of crossings lie strictly to its right,
    // i.e. xs[2i] <= x < xs[2i+1].
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      const Index c0 = std::max<Index>(0, static_cast<Index>(std::ceil(xs[i] - offset)));
      const Index c1 = std::min<Index>(width, static_cast<Index>(std::ceil(xs[i + 1] - offset)));
      if (c1 > c0) runs.push_back({r, c0, c1});
    }
  }
  return runs;
}

Index run_area(std::span<const PixelRun> runs) {
  Index total = 0;
  for (const auto& run : runs) total += run.col_end - run.col_begin;
  return total;
}

void paint_runs(MaskGrid& mask, std::span<const PixelRun> runs, bool value) {
  for (const auto& run : runs) mask.row(run.row).segment(run.col_begin, run.col_end - run.col_begin).setConstant(value);
}

bool point_in_polygon(const Point& p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.x() > p.x()) != (b.x() > p.x())) {
      const double x = a.y() + (p.x() - a.x()) * (b.y() - a.y()) / (b.x() - a.x());
      if (p.y() < x) inside = !inside;
    }
  }
  return inside;
}

double signed_area(const Polygon& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    twice += a.y() * b.x() - b.y() * a.x();
  }
  return 0.5 * twice;
}

}  // namespace bubbleglare
