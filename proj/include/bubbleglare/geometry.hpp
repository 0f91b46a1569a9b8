#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "bubbleglare/image.hpp"

namespace bubbleglare {

/// (row, col) position in pixel units.
using Point = Eigen::Vector2d;
using Polygon = std::vector<Point>;

/// Columns [col_begin, col_end) of one row.
struct PixelRun {
  Index row;
  Index col_begin;
  Index col_end;
  bool operator==(const PixelRun&) const = default;
};

/// Pixels whose sample point (row + offset, col + offset) lies inside the
/// union of `polygons` under the even-odd rule. Polygons may be open or
/// closed; the closing edge is implied. Use offset 0.5 for polygons in
/// continuous image coordinates and 0 when vertices are pixel centres.
std::vector<PixelRun> fill_even_odd(std::span<const Polygon> polygons, Index width, Index height, double offset);

Index run_area(std::span<const PixelRun> runs);
void paint_runs(MaskGrid& mask, std::span<const PixelRun> runs, bool value = true);

/// Even-odd point-in-polygon test.
bool point_in_polygon(const Point& p, const Polygon& poly);

/// Shoelace area; sign depends on orientation.
double signed_area(const Polygon& poly);

}  // namespace bubbleglare
