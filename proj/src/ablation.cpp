#include "bubbleglare/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "bubbleglare/codec.hpp"
#include "bubbleglare/errors.hpp"

namespace bubbleglare {

namespace {

struct Cell {
  GlareExtractionParams params;
  bool submask = true;
};

/// predictions[cell][frame] for every labeled frame, clustering once per frame.
std::vector<std::map<int, FramePrediction>> predict(const PipelineConfig& config, const DatasetManifest& manifest,
                                                    const std::vector<Cell>& cells) {
  std::vector<const ManifestEntry*> labeled;
  for (const auto& e : manifest.entries())
    if (e.truth) labeled.push_back(&e);
  if (labeled.empty()) throw EvaluationError("manifest has no labeled frames");

  std::vector<std::vector<FramePrediction>> per_frame(labeled.size());
  std::vector<std::string> errors(labeled.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < labeled.size(); i = next++) {
      try {
        const PreparedFrame f = prepare_frame(read_image(labeled[i]->image), config);
        const ClusterModel model = cluster_frame(f, config);
        for (const auto& cell : cells) {
          DetectionResult det = detect_frame(f, model, cell.params, cell.submask);
          per_frame[i].push_back({std::move(det.final_mask), static_cast<int>(det.total_instances())});
        }
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
  };
  const int n = std::min<int>(config.worker_count(), static_cast<int>(labeled.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < labeled.size(); ++i)
    if (!errors[i].empty())
      throw EvaluationError("frame " + std::to_string(labeled[i]->frame) + ": " + errors[i]);

  std::vector<std::map<int, FramePrediction>> out(cells.size());
  for (std::size_t i = 0; i < labeled.size(); ++i)
    for (std::size_t c = 0; c < cells.size(); ++c) out[c].emplace(labeled[i]->frame, std::move(per_frame[i][c]));
  return out;
}

EvalReport score(const DatasetManifest& manifest, const std::map<int, FramePrediction>& preds,
                 const std::vector<double>& thresholds, const std::string& spec, bool submask,
                 const std::string& variant) {
  EvalReport r = evaluate_run(manifest, preds, thresholds);
  r.spec_name = spec;
  r.submask_enabled = submask;
  r.variant = variant;
  return r;
}

}  // namespace

EvalReport evaluate_config(const PipelineConfig& config, const DatasetManifest& manifest,
                           const std::vector<double>& thresholds) {
  config.validate();
  const auto preds = predict(config, manifest, {{config.extraction, config.submask_enabled}});
  return score(manifest, preds[0], thresholds, config.channel_spec.display_name(), config.submask_enabled, "");
}

AblationResult run_ablation_suite(const PipelineConfig& base, const DatasetManifest& manifest,
                                  const AblationOptions& options) {
  base.validate();
  const std::vector<std::string> specs = options.specs.empty() ? standard_channel_specs() : options.specs;
  const std::string base_name = base.channel_spec.display_name();

  GlareExtractionParams no_erosion = base.extraction;
  no_erosion.erosion_radius = 0;
  no_erosion.erosion_iters = 0;

  AblationResult result;
  for (const auto& name : specs) {
    PipelineConfig cfg = base;
    cfg.channel_spec = ChannelSpec::parse(name);
    const std::string display = cfg.channel_spec.display_name();
    std::vector<Cell> cells{{base.extraction, false}, {base.extraction, true}};
    const bool run_variants = options.variants && display == base_name;
    if (run_variants) cells.push_back({no_erosion, true});
    const auto preds = predict(cfg, manifest, cells);
    result.reports.push_back(score(manifest, preds[0], options.thresholds, display, false, ""));
    result.reports.push_back(score(manifest, preds[1], options.thresholds, display, true, ""));
    if (run_variants) result.reports.push_back(score(manifest, preds[2], options.thresholds, display, true, "no-erosion"));
  }

  if (options.variants) {
    const bool have_no_erosion = std::any_of(result.reports.begin(), result.reports.end(),
                                             [](const EvalReport& r) { return r.variant == "no-erosion"; });
    if (!have_no_erosion) {
      const auto preds = predict(base, manifest, {{no_erosion, true}});
      result.reports.push_back(score(manifest, preds[0], options.thresholds, base_name, true, "no-erosion"));
    }
    PipelineConfig cfg = base;
    cfg.coords.reset();
    const auto preds = predict(cfg, manifest, {{base.extraction, true}});
    result.reports.push_back(score(manifest, preds[0], options.thresholds, base_name, true, "no-coords"));
  }

  result.tables = emit_report_tables(result.reports);
  return result;
}

}  // namespace bubbleglare
