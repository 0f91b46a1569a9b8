#include "bubbleglare/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubbleglare/colorspace.hpp"

namespace bubbleglare {

void GlareExtractionParams::validate() const {
  if (!(exclusion_row_frac > 0.0 && exclusion_row_frac <= 1.0))
    throw std::invalid_argument("exclusion_row_frac must be in (0, 1]");
  if (erosion_radius < 0 || erosion_iters < 0) throw std::invalid_argument("erosion parameters must be >= 0");
  if (area_min.value < 0.0 || area_max.value < 0.0) throw std::invalid_argument("area bounds must be >= 0");
  if (area_min.absolute == area_max.absolute && !(area_min.value < area_max.value))
    throw std::invalid_argument("area_min must be below area_max");
}

namespace {

bool is_coordinate(const std::string& name) { return name == "X" || name == "Y"; }

}  // namespace

Eigen::VectorXd cluster_brightness(const ClusterModel& model) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(model.k);
  int colors = 0;
  for (std::size_t d = 0; d < model.channel_names.size(); ++d) {
    if (is_coordinate(model.channel_names[d])) continue;
    const ValueRange& range = model.channel_ranges[d];
    const double span = range.span() > 0.0 ? range.span() : 1.0;
    b += ((model.per_channel_cluster_means.col(static_cast<Index>(d)).array() - range.min) / span).matrix();
    ++colors;
  }
  if (colors > 0) b /= colors;
  return b;
}

BinaryMask extract_glare_mask(const ClusterModel& model, const GlareExtractionParams& params) {
  params.validate();
  BinaryMask mask(model.labels.cols(), model.labels.rows());
  if (model.no_glare()) return mask;

  const Eigen::VectorXd b = cluster_brightness(model);
  const double mean = b.mean();
  const double stddev = std::sqrt((b.array() - mean).square().mean());
  const double threshold = mean + params.brightness_alpha * stddev;

  std::vector<char> selected(static_cast<std::size_t>(model.k), 0);
  for (int c = 0; c < model.k; ++c) selected[c] = b[c] > threshold;

  // The lower band is judged from each cluster's mean row on the Y channel.
  for (std::size_t d = 0; d < model.channel_names.size(); ++d) {
    if (model.channel_names[d] != "Y") continue;
    const double scale = model.channel_ranges[d].max;
    const double height = static_cast<double>(model.labels.rows());
    for (int c = 0; c < model.k; ++c) {
      const double y = model.per_channel_cluster_means(c, static_cast<Index>(d));
      const double row = scale > 0.0 ? y / scale * (height - 1.0) : 0.0;
      if (row > params.exclusion_row_frac * height) selected[c] = 0;
    }
  }

  for (Index r = 0; r < model.labels.rows(); ++r)
    for (Index c = 0; c < model.labels.cols(); ++c) mask(r, c) = selected[model.labels(r, c)] != 0;
  return mask;
}

namespace {

// One pass of a 1-D erosion along rows of `in`, window 2r+1, outside = false.
MaskGrid erode_rows(const MaskGrid& in, int radius) {
  const Index h = in.rows();
  const Index w = in.cols();
  MaskGrid out(h, w);
  const Index win = 2 * radius + 1;
  std::vector<Index> prefix(static_cast<std::size_t>(w) + 1);
  for (Index r = 0; r < h; ++r) {
    prefix[0] = 0;
    for (Index c = 0; c < w; ++c) prefix[c + 1] = prefix[c] + (in(r, c) ? 1 : 0);
    for (Index c = 0; c < w; ++c) {
      const Index lo = c - radius;
      const Index hi = c + radius + 1;
      out(r, c) = lo >= 0 && hi <= w && prefix[hi] - prefix[lo] == win;
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int radius, int iters) {
  if (radius < 0 || iters < 0) throw std::invalid_argument("erosion radius and iterations must be >= 0");
  if (radius == 0 || iters == 0) return mask;
  MaskGrid bits = mask.bits();
  for (int i = 0; i < iters; ++i) {
    bits = erode_rows(bits, radius);
    MaskGrid t = bits.transpose();
    bits = erode_rows(t, radius).transpose();
  }
  return BinaryMask(std::move(bits));
}

Grid masked_grayscale(const BinaryMask& mask, const PlanarImage& original) {
  if (mask.width() != original.width() || mask.height() != original.height())
    throw std::invalid_argument("mask and image dimensions differ");
  return mask.bits().select(grayscale(original), 0.0);
}

BinaryMask region_average_binarize(const Grid& gray, const BinaryMask& mask) {
  if (gray.rows() != mask.height() || gray.cols() != mask.width())
    throw std::invalid_argument("mask and grid dimensions differ");
  const Index n = mask.count();
  if (n == 0) return BinaryMask(mask.width(), mask.height());
  const double mean = mask.bits().select(gray, 0.0).sum() / static_cast<double>(n);
  // Summation rounding can lift the mean of a flat region above its value.
  const double threshold = std::min(mean, mask.bits().select(gray, -std::numeric_limits<double>::infinity()).maxCoeff());
  return BinaryMask(mask.bits() && (gray >= threshold));
}

AreaSplit filter_by_area(std::vector<ContourInstance> instances, double area_min, double area_max) {
  AreaSplit split;
  for (auto& inst : instances) {
    const double a = static_cast<double>(inst.area);
    if (a >= area_min && a <= area_max)
      split.kept.push_back(std::move(inst));
    else
      split.suppressed.push_back(std::move(inst));
  }
  return split;
}

DetectionResult extract_and_erode(const ClusterModel& model, const GlareExtractionParams& params) {
  DetectionResult result;
  result.raw_mask = extract_glare_mask(model, params);
  result.eroded_mask = erode(result.raw_mask, params.erosion_radius, params.erosion_iters);
  result.refined_mask = result.eroded_mask;
  result.final_mask = result.eroded_mask;
  return result;
}

DetectionResult detect(const PlanarImage& img_rgb, const ClusterModel& model, const GlareExtractionParams& params) {
  if (img_rgb.width() != model.labels.cols() || img_rgb.height() != model.labels.rows())
    throw std::invalid_argument("cluster model does not match the image shape");
  DetectionResult result = extract_and_erode(model, params);
  const Grid gray = masked_grayscale(result.eroded_mask, img_rgb);
  result.refined_mask = region_average_binarize(gray, result.eroded_mask);
  result.final_mask = BinaryMask(img_rgb.width(), img_rgb.height());
  if (result.refined_mask.empty() || img_rgb.width() < 2 || img_rgb.height() < 2) return result;

  const Grid refined_gray = result.refined_mask.bits().select(gray, 0.0);
  auto split = filter_by_area(marching_squares(refined_gray, params.saddle), params.area_min.pixels(img_rgb.pixel_count()),
                              params.area_max.pixels(img_rgb.pixel_count()));
  result.instances = std::move(split.kept);
  result.suppressed = std::move(split.suppressed);
  for (const auto& inst : result.instances) paint_runs(result.final_mask.bits(), inst.region);
  return result;
}

Eigen::Vector3d instance_color(int instance_id) {
  static const std::array<Eigen::Vector3d, 8> palette = {
      Eigen::Vector3d(255, 64, 64),  Eigen::Vector3d(64, 255, 64),  Eigen::Vector3d(255, 220, 0),
      Eigen::Vector3d(255, 64, 255), Eigen::Vector3d(0, 200, 255),  Eigen::Vector3d(255, 140, 0),
      Eigen::Vector3d(160, 96, 255), Eigen::Vector3d(255, 255, 255),
  };
  if (instance_id <= 0) return {255, 0, 200};
  return palette[static_cast<std::size_t>((instance_id - 1) % static_cast<int>(palette.size()))];
}

PlanarImage render_overlay(const PlanarImage& img_rgb, const DetectionResult& result) {
  if (img_rgb.channel_count() != 3) throw std::invalid_argument("overlay needs an RGB image");
  if (result.final_mask.width() != img_rgb.width() || result.final_mask.height() != img_rgb.height())
    throw std::invalid_argument("detection result does not match the image shape");
  std::array<Grid, 3> out = {img_rgb.channel(0).data, img_rgb.channel(1).data, img_rgb.channel(2).data};
  const Index h = img_rgb.height();
  const Index w = img_rgb.width();

  auto tint = [&](Index r, Index c, const Eigen::Vector3d& color) {
    for (int k = 0; k < 3; ++k) out[k](r, c) = 0.5 * img_rgb.channel(k).data(r, c) + 0.5 * color[k];
  };
  auto stroke = [&](const Polygon& poly, const Eigen::Vector3d& color) {
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
      const Point& a = poly[i];
      const Point& b = poly[i + 1];
      const int steps = std::max(1, static_cast<int>(std::ceil(2.0 * (b - a).lpNorm<Eigen::Infinity>())));
      for (int s = 0; s <= steps; ++s) {
        const Point p = a + (b - a) * (static_cast<double>(s) / steps);
        const Index r = static_cast<Index>(std::lround(p.x()));
        const Index c = static_cast<Index>(std::lround(p.y()));
        if (r < 0 || c < 0 || r >= h || c >= w) continue;
        for (int k = 0; k < 3; ++k) out[k](r, c) = color[k];
      }
    }
  };

  MaskGrid covered = MaskGrid::Zero(h, w);
  for (const auto& inst : result.instances) {
    const Eigen::Vector3d color = instance_color(inst.instance_id);
    for (const auto& run : inst.region)
      for (Index c = run.col_begin; c < run.col_end; ++c) {
        tint(run.row, c, color);
        covered(run.row, c) = true;
      }
  }
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c)
      if (result.final_mask(r, c) && !covered(r, c)) tint(r, c, instance_color(0));
  for (const auto& inst : result.instances) {
    const Eigen::Vector3d color = instance_color(inst.instance_id);
    stroke(inst.contour, color);
    for (const auto& hole : inst.holes) stroke(hole, color);
  }
  return make_rgb(std::move(out[0]), std::move(out[1]), std::move(out[2]));
}

}  // namespace bubbleglare
