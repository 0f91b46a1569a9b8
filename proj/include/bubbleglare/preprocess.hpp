#pragma once

#include <Eigen/Core>

#include "bubbleglare/image.hpp"

namespace bubbleglare {

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  /// Multiple of the uniform bin height (tile_pixels / bins) a bin may reach.
  double clip_limit = 3.0;
  int bins = 256;

  void validate() const;
  bool operator==(const ClaheParams&) const = default;
};

struct CoordParams {
  /// Value the largest row / column index maps to.
  double coord_scale = 255.0;
  /// Feature-space multiplier for X and Y; 0 removes spatial influence.
  double weight_xy = 1.0;

  void validate() const;
  bool operator==(const CoordParams&) const = default;
};

int histogram_bin(double value, const ValueRange& range, int bins);

/// Clips every bin at `limit` and hands the excess back uniformly to the
/// bins still below the limit, so no bin ends above it. Total mass is kept
/// whenever limit * bins >= total.
Eigen::VectorXd clip_histogram(const Eigen::VectorXd& hist, double limit);

/// Per-bin output value lo + span * cdf(bin) / total.
Eigen::VectorXd equalization_lut(const Eigen::VectorXd& hist, const ValueRange& range);

/// Lookup for one tile. A tile whose pixels all fall into one bin maps every
/// value to itself.
struct TileMapping {
  bool identity = true;
  Eigen::VectorXd lut;

  double operator()(double value, const ValueRange& range) const {
    return identity ? value : lut[histogram_bin(value, range, static_cast<int>(lut.size()))];
  }
};

/// Mapping of a rectangular block of `channel` under `params`.
TileMapping tile_mapping(const Eigen::Ref<const Grid>& tile, const ValueRange& range, const ClaheParams& params);

/// Contrast-limited adaptive histogram equalization. Tile mappings are blended
/// bilinearly between tile centres; output stays inside `range`. Throws
/// std::invalid_argument when a tile would be smaller than 2x2 pixels.
Grid clahe(const Grid& channel, const ValueRange& range, const ClaheParams& params);

/// clahe() on every channel; names and ranges are unchanged.
PlanarImage apply_clahe(const PlanarImage& img, const ClaheParams& params);

/// Appends channels X (column) and Y (row), each a linear ramp from 0 at
/// index 0 to coord_scale at the last index.
PlanarImage add_coordinate_channels(const PlanarImage& img, const CoordParams& params);

}  // namespace bubbleglare
