#pragma once

#include <vector>

#include "bubbleglare/cluster.hpp"
#include "bubbleglare/image.hpp"
#include "bubbleglare/marching_squares.hpp"

namespace bubbleglare {

/// Area limit given either as a fraction of the image area or in pixels.
struct AreaBound {
  double value = 0.0;
  bool absolute = false;

  double pixels(Index image_area) const { return absolute ? value : value * static_cast<double>(image_area); }
  bool operator==(const AreaBound&) const = default;
};

struct GlareExtractionParams {
  /// A cluster is bright when its brightness exceeds mean + alpha * std over clusters.
  double brightness_alpha = 1.0;
  /// Clusters whose mean row lies below this fraction of the height are excluded.
  double exclusion_row_frac = 0.8;
  int erosion_radius = 1;
  int erosion_iters = 1;
  AreaBound area_min{0.0005, false};
  AreaBound area_max{0.25, false};
  SaddleRule saddle = SaddleRule::SeparateBright;

  void validate() const;
  bool operator==(const GlareExtractionParams&) const = default;
};

struct DetectionResult {
  /// Bright clusters minus excluded clusters.
  BinaryMask raw_mask;
  BinaryMask eroded_mask;
  /// Eroded mask after grayscale intersection and region averaging.
  BinaryMask refined_mask;
  /// Union of the kept instances' regions (or the eroded mask when the
  /// sub-mask chain is skipped).
  BinaryMask final_mask;
  std::vector<ContourInstance> instances;
  std::vector<ContourInstance> suppressed;

  std::size_t total_instances() const { return instances.size() + suppressed.size(); }
};

/// Per-cluster brightness: color-channel means normalised by their ranges
/// and averaged. Coordinate channels (X, Y) are skipped.
Eigen::VectorXd cluster_brightness(const ClusterModel& model);

/// Pixels of clusters that are bright but not in the lower exclusion band.
/// No-glare models give an empty mask.
BinaryMask extract_glare_mask(const ClusterModel& model, const GlareExtractionParams& params);

/// Erosion by a (2r+1) x (2r+1) square, repeated `iters` times. Pixels
/// outside the mask count as background.
BinaryMask erode(const BinaryMask& mask, int radius, int iters);

/// Luma of `original` inside the mask, 0 elsewhere.
Grid masked_grayscale(const BinaryMask& mask, const PlanarImage& original);

/// Keeps masked pixels whose gray value is at least the mean over the mask.
BinaryMask region_average_binarize(const Grid& gray, const BinaryMask& mask);

struct AreaSplit {
  std::vector<ContourInstance> kept;
  std::vector<ContourInstance> suppressed;
};

/// kept: area_min <= area <= area_max.
AreaSplit filter_by_area(std::vector<ContourInstance> instances, double area_min, double area_max);

/// Extraction and erosion only; final_mask is the eroded mask.
DetectionResult extract_and_erode(const ClusterModel& model, const GlareExtractionParams& params);

/// Full chain: extraction, erosion, grayscale intersection, region
/// averaging, marching squares and area filtering.
DetectionResult detect(const PlanarImage& img_rgb, const ClusterModel& model, const GlareExtractionParams& params);

/// Instance color, fixed per id.
Eigen::Vector3d instance_color(int instance_id);

/// Tints final_mask pixels and strokes kept contours. An empty result leaves
/// the input unchanged.
PlanarImage render_overlay(const PlanarImage& img_rgb, const DetectionResult& result);

}  // namespace bubbleglare
