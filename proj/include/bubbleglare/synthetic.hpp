#pragma once

#include <cstdint>
#include <filesystem>

#include "bubbleglare/eval.hpp"
#include "bubbleglare/image.hpp"
#include "bubbleglare/manifest.hpp"

namespace bubbleglare {

struct SyntheticOptions {
  Index width = 480;
  Index height = 360;
  int min_blobs = 1;
  int max_blobs = 4;
  /// Blobs stay inside the top `blob_zone` fraction of the rows.
  double blob_zone = 0.7;
  /// Height of the bright floor band as a fraction of the rows.
  double floor_band = 0.15;
  /// Fraction of pixels replaced by bright speckles.
  double speckle_rate = 0.002;
  double noise_sigma = 4.0;
  /// Extra noise on the red channel.
  double red_noise_sigma = 25.0;

  void validate() const;
};

struct SyntheticFrame {
  PlanarImage rgb;
  GroundTruth truth;
};

/// First row of the floor band.
Index floor_band_start(const SyntheticOptions& options);

SyntheticFrame synthesize_frame(std::uint64_t seed, int index, const SyntheticOptions& options = {});

/// Writes `images/frame_NNNNNN.png`, `truth/frame_NNNNNN.json` and
/// `manifest.jsonl` under `out`.
DatasetManifest gen_synthetic(std::uint64_t seed, int n_frames, const std::filesystem::path& out,
                              const SyntheticOptions& options = {});

}  // namespace bubbleglare
