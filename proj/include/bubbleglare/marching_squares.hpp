#pragma once

#include <array>
#include <vector>

#include "bubbleglare/geometry.hpp"
#include "bubbleglare/image.hpp"

namespace bubbleglare {

/// How a cell whose two bright corners sit on a diagonal is split.
enum class SaddleRule {
  /// Always cut the bright corners off separately, so diagonal neighbours
  /// never merge (foreground regions are 4-connected).
  SeparateBright,
  /// Join the bright corners through the cell when the mean of the four
  /// corners reaches the threshold.
  CellAverage,
};

struct ContourInstance {
  int instance_id = 0;
  /// Closed outer boundary (front == back), vertices in pixel-centre (row, col).
  Polygon contour;
  /// Closed boundaries of holes inside the region.
  std::vector<Polygon> holes;
  /// Pixels whose centres fall inside the boundary (even-odd over contour and holes).
  Index area = 0;
  /// (row0, col0, row1, col1) enclosing every contour vertex.
  std::array<double, 4> bbox{};
  /// Mean of the input grid over the region.
  double region_mean = 0.0;
  std::vector<PixelRun> region;
};

/// Iso-contours of `gray` at `threshold` (vertex is foreground when
/// value >= threshold). The grid is treated as surrounded by background so
/// every contour closes. Crossing points are linearly interpolated and kept
/// strictly inside their grid edge. Each closed foreground region becomes
/// one instance, numbered from 1 in raster order of discovery.
/// Throws std::invalid_argument for grids smaller than 2x2.
std::vector<ContourInstance> marching_squares(const Grid& gray, double threshold,
                                              SaddleRule saddle = SaddleRule::SeparateBright);

/// Threshold at the mean of the whole grid.
std::vector<ContourInstance> marching_squares(const Grid& gray, SaddleRule saddle = SaddleRule::SeparateBright);

}  // namespace bubbleglare
