#pragma once

#include <string>
#include <vector>

#include "bubbleglare/eval.hpp"
#include "bubbleglare/manifest.hpp"
#include "bubbleglare/pipeline.hpp"

namespace bubbleglare {

struct AblationOptions {
  /// Channel combinations to run; empty selects the eight standard ones.
  std::vector<std::string> specs;
  /// Also run the base combination without coordinates and without erosion.
  bool variants = true;
  std::vector<double> thresholds{0.1, 0.4};
};

struct AblationResult {
  std::vector<EvalReport> reports;
  ReportTables tables;
};

/// Every selected combination with and without the sub-mask chain, sharing
/// one clustering per frame. Variants use the base combination with the
/// sub-mask chain enabled.
AblationResult run_ablation_suite(const PipelineConfig& base, const DatasetManifest& manifest,
                                  const AblationOptions& options = {});

/// Scores for one configuration over the labeled frames of a manifest,
/// without writing artifacts.
EvalReport evaluate_config(const PipelineConfig& config, const DatasetManifest& manifest,
                           const std::vector<double>& thresholds);

}  // namespace bubbleglare
