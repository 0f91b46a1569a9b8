#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bubbleglare/cluster.hpp"
#include "bubbleglare/colorspace.hpp"
#include "bubbleglare/manifest.hpp"
#include "bubbleglare/postprocess.hpp"
#include "bubbleglare/preprocess.hpp"

namespace bubbleglare {

struct PipelineConfig {
  ChannelSpec channel_spec = ChannelSpec::parse("(R)GB+L(ab)");
  int resize_target = 480;
  std::optional<ClaheParams> clahe = ClaheParams{};
  std::optional<CoordParams> coords = CoordParams{};
  ClusterParams cluster;
  /// Per-channel weight overrides keyed by letter, qualified name or index.
  std::vector<std::pair<std::string, double>> weights;
  GlareExtractionParams extraction;
  bool submask_enabled = true;
  std::filesystem::path output_dir = "out";
  /// 0 selects the hardware thread count.
  int workers = 0;

  void validate() const;
  /// Applies one `key = value` setting; throws ParseError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  std::string serialize() const;
  static PipelineConfig parse(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Clustering weight for each feature channel, fused channels first then X, Y.
  std::vector<double> feature_weights() const;
  int worker_count() const;

  bool operator==(const PipelineConfig& o) const;
};

/// Frame after preprocessing: features for clustering, the resized RGB image
/// for grayscale and overlays, and the resized HSV value channel.
struct PreparedFrame {
  PlanarImage rgb;
  PlanarImage features;
  Grid value;
};

PreparedFrame prepare_frame(const PlanarImage& rgb_full, const PipelineConfig& config);

ClusterModel cluster_frame(const PreparedFrame& frame, const PipelineConfig& config);

/// Full sub-mask chain or extract + erode, depending on `submask`.
DetectionResult detect_frame(const PreparedFrame& frame, const ClusterModel& model, const GlareExtractionParams& params,
                             bool submask);

std::string instances_json(int frame, const ClusterModel& model, const DetectionResult& result);

std::string frame_stem(int frame);

struct FrameRecord {
  int frame = 0;
  bool ok = false;
  std::string error;
  int k_raw = 0;
  int k = 0;
  int iterations = 0;
  int instances = 0;
  double seconds = 0.0;
};

struct RunSummary {
  std::vector<FrameRecord> frames;
  int failures() const;
  int exit_code() const { return failures() == 0 ? 0 : 1; }
};

/// Processes every manifest frame and writes `<stem>_mask.png`,
/// `<stem>_overlay.png` and `<stem>_instances.json` plus `run.json` to the
/// output directory. Per-frame timing goes to `log` only, so the output tree
/// depends on nothing but inputs and configuration.
RunSummary run_pipeline(const PipelineConfig& config, const DatasetManifest& manifest, std::ostream* log = nullptr);

}  // namespace bubbleglare
