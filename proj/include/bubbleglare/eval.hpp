#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bubbleglare/geometry.hpp"
#include "bubbleglare/image.hpp"
#include "bubbleglare/manifest.hpp"

namespace bubbleglare {

/// Polygon annotations in continuous (row, col) image coordinates of an
/// image of size width x height. Stored as
/// {"size": [w, h], "polygons": [[[r, c], ...], ...]}.
struct GroundTruth {
  std::vector<Polygon> polygons;
  Index width = 0;
  Index height = 0;

  void validate() const;
  static GroundTruth parse(std::string_view json);
  static GroundTruth load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Even-odd fill at pixel centres after scaling the polygons to w x h.
/// Polygons with no area after scaling add nothing and append a warning.
BinaryMask rasterize(const GroundTruth& gt, Index width, Index height, std::vector<std::string>* warnings = nullptr);

/// |pred & truth| / |pred | truth|. Two empty masks score 0: every labeled
/// frame contains glare, so an empty prediction there is a miss.
double iou(const BinaryMask& pred, const BinaryMask& truth);

/// Arithmetic mean. Throws std::invalid_argument on an empty list.
double miou(std::span<const double> ious);

/// Percentage of scores strictly below `threshold`.
double undetection_rate(std::span<const double> ious, double threshold);

struct ImageScore {
  int frame = 0;
  double iou = 0.0;
  /// Marching-squares regions found before area filtering.
  int instances = 0;
  bool operator==(const ImageScore&) const = default;
};

struct UndetectionRate {
  double threshold = 0.0;
  double percent = 0.0;
  bool operator==(const UndetectionRate&) const = default;
};

struct EvalReport {
  std::string spec_name;
  bool submask_enabled = true;
  /// Empty for the plain configuration, otherwise e.g. "no-coords".
  std::string variant;
  std::vector<ImageScore> per_image;
  double miou = 0.0;
  std::vector<UndetectionRate> undetection;
  int n_images = 0;
  /// Manifest frames without ground truth; not scored.
  int n_unlabeled = 0;

  /// Row label used in the tables.
  std::string row_name() const { return variant.empty() ? spec_name : spec_name + " [" + variant + "]"; }
  bool operator==(const EvalReport&) const = default;
};

struct FramePrediction {
  BinaryMask mask;
  int instances = 0;
};

/// Scores every manifest frame with ground truth against its prediction,
/// rasterizing truth at the prediction's resolution. Throws
/// EvaluationError when a labeled frame has no prediction or when nothing
/// is labeled.
EvalReport evaluate_run(const DatasetManifest& manifest, const std::map<int, FramePrediction>& predictions,
                        std::span<const double> thresholds);

/// Aggregates already computed scores into a report.
EvalReport summarize(std::vector<ImageScore> scores, std::span<const double> thresholds);

struct ReportTables {
  std::string text;
  std::string json;
};

/// mIoU per combination with and without the sub-mask chain, and
/// undetection rates per threshold (taken from the sub-mask run when
/// present). Standard combinations come first in their usual order.
ReportTables emit_report_tables(std::span<const EvalReport> reports);

/// Reads back the "reports" array of emit_report_tables() JSON.
std::vector<EvalReport> parse_reports_json(std::string_view json);

std::string report_to_json(const EvalReport& report);

}  // namespace bubbleglare
