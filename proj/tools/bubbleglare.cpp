#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bubbleglare/ablation.hpp"
#include "bubbleglare/codec.hpp"
#include "bubbleglare/errors.hpp"
#include "bubbleglare/eval.hpp"
#include "bubbleglare/pipeline.hpp"
#include "bubbleglare/synthetic.hpp"

namespace fs = std::filesystem;
using namespace bubbleglare;

namespace {

constexpr int kConfigError = 2;

/// Pipeline flags layered over an optional config file; flags win.
struct PipelineFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool no_clahe = false;
  bool no_coords = false;
  bool no_submask = false;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    const std::pair<const char*, const char*> flags[] = {
        {"colorspace", "Channel combination, e.g. \"(R)GB+L(ab)\""},
        {"resize", "Longest side after resizing"},
        {"clahe-tiles", "CLAHE tile grid, e.g. 8x8"},
        {"clahe-clip", "CLAHE clip limit"},
        {"clahe-bins", "CLAHE histogram bins"},
        {"coord-scale", "Scale of the X/Y channels"},
        {"coord-weight", "Clustering weight of the X/Y channels"},
        {"weights", "Per-channel weights, e.g. g=1,b=1,l=1,x=1,y=1"},
        {"k", "Cluster count override, or auto"},
        {"k-min", "Lower clamp for the cluster count"},
        {"k-max", "Upper clamp for the cluster count"},
        {"k-divisor", "Divisor applied to the squared brightness range"},
        {"seed", "Clustering seed"},
        {"max-iters", "K-means iteration cap"},
        {"tol", "K-means centroid shift tolerance"},
        {"init", "random or kmeans++"},
        {"alpha", "Brightness threshold in standard deviations"},
        {"exclusion-frac", "Clusters centred below this row fraction are dropped"},
        {"erosion", "RADIUSxITERATIONS or off"},
        {"area-min", "Minimum instance area (fraction, or pixels with px suffix)"},
        {"area-max", "Maximum instance area (fraction, or pixels with px suffix)"},
        {"saddle", "separate or average"},
        {"workers", "Worker threads, 0 for all cores"},
    };
    for (const auto& [name, help] : flags) app->add_option(std::string("--") + name, values[name], help);
    app->add_flag("--no-clahe", no_clahe, "Skip contrast equalization");
    app->add_flag("--no-coords", no_coords, "Cluster without coordinate channels");
    app->add_flag("--no-submask", no_submask, "Stop after extraction and erosion");
  }

  PipelineConfig build(CLI::App* app) const {
    PipelineConfig c = config_file.empty() ? PipelineConfig{} : PipelineConfig::load(config_file);
    for (const auto& [name, value] : values) {
      if (app->count("--" + name) == 0) continue;
      std::string key = name;
      for (auto& ch : key)
        if (ch == '-') ch = '_';
      c.set(key, value);
    }
    if (no_clahe) c.clahe.reset();
    if (no_coords) c.coords.reset();
    if (no_submask) c.submask_enabled = false;
    c.validate();
    return c;
  }
};

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw ParseError("bad threshold '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("no thresholds given");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// `out/tables`, `out/tables.txt` and `out/tables.{txt,json}` all name the same pair.
void write_tables(const std::string& target, const ReportTables& tables) {
  std::string base = target;
  for (const char* suffix : {".{txt,json}", ".txt", ".json"}) {
    const std::string s(suffix);
    if (base.size() > s.size() && base.compare(base.size() - s.size(), s.size(), s) == 0) {
      base.resize(base.size() - s.size());
      break;
    }
  }
  write_text(base + ".txt", tables.text);
  write_text(base + ".json", tables.json);
}

std::map<int, FramePrediction> load_predictions(const fs::path& dir, const DatasetManifest& manifest) {
  std::map<int, FramePrediction> preds;
  for (const auto& e : manifest.entries()) {
    const fs::path mask = dir / (frame_stem(e.frame) + "_mask.png");
    if (!fs::exists(mask)) continue;
    FramePrediction p{read_mask(mask), 0};
    const fs::path inst = dir / (frame_stem(e.frame) + "_instances.json");
    if (fs::exists(inst)) {
      std::ifstream in(inst);
      const auto j = nlohmann::json::parse(in);
      p.instances = static_cast<int>(j.at("instances").size() + j.value("suppressed", nlohmann::json::array()).size());
    }
    preds.emplace(e.frame, std::move(p));
  }
  return preds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Glare detection for underwater frames"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Detect glare in every manifest frame");
  std::string run_manifest, run_out = "out", run_log;
  PipelineFlags run_flags;
  run->add_option("--manifest", run_manifest, "JSONL manifest")->required();
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--log", run_log, "Per-frame log file (default: stderr)");
  run_flags.add(run);

  auto* eval = app.add_subcommand("eval", "Score predicted masks against ground truth");
  std::string eval_manifest, eval_pred, eval_thresholds = "0.1,0.4", eval_table, eval_name;
  eval->add_option("--manifest", eval_manifest, "JSONL manifest")->required();
  eval->add_option("--pred-dir", eval_pred, "Directory written by run")->required();
  eval->add_option("--thresholds", eval_thresholds, "Undetection thresholds");
  eval->add_option("--table", eval_table, "Write <path>.txt and <path>.json");
  eval->add_option("--name", eval_name, "Row label (default: combination recorded in run.json)");

  auto* ablate = app.add_subcommand("ablate", "Compare channel combinations and pipeline variants");
  std::string abl_manifest, abl_thresholds = "0.1,0.4", abl_table;
  std::vector<std::string> abl_specs;
  bool abl_no_variants = false;
  PipelineFlags abl_flags;
  ablate->add_option("--manifest", abl_manifest, "JSONL manifest with ground truth")->required();
  ablate->add_option("--specs", abl_specs, "Restrict to these combinations")->delimiter(',');
  ablate->add_flag("--no-variants", abl_no_variants, "Skip the coordinate and erosion variants");
  ablate->add_option("--thresholds", abl_thresholds, "Undetection thresholds");
  ablate->add_option("--table", abl_table, "Write <path>.txt and <path>.json");
  abl_flags.add(ablate);

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic sequence");
  std::uint64_t syn_seed = 1;
  int syn_frames = 50;
  std::string syn_out = "synthetic";
  SyntheticOptions syn_opts;
  synth->add_option("--seed", syn_seed, "Generator seed");
  synth->add_option("--frames", syn_frames, "Number of frames");
  synth->add_option("--out", syn_out, "Output directory");
  synth->add_option("--width", syn_opts.width, "Frame width");
  synth->add_option("--height", syn_opts.height, "Frame height");
  synth->add_option("--speckle-rate", syn_opts.speckle_rate, "Fraction of speckled pixels");
  synth->add_option("--red-noise", syn_opts.red_noise_sigma, "Noise level of the red channel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  PipelineConfig config;
  DatasetManifest manifest;
  std::vector<double> thresholds;
  try {
    if (*run) {
      config = run_flags.build(run);
      config.output_dir = run_out;
      manifest = DatasetManifest::load(run_manifest);
    } else if (*ablate) {
      config = abl_flags.build(ablate);
      thresholds = parse_thresholds(abl_thresholds);
      manifest = DatasetManifest::load(abl_manifest);
    } else if (*eval) {
      thresholds = parse_thresholds(eval_thresholds);
      manifest = DatasetManifest::load(eval_manifest);
    } else {
      syn_opts.validate();
    }
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kConfigError;
  }

  try {
    if (*run) {
      std::ofstream log_file;
      if (!run_log.empty()) log_file.open(run_log);
      const RunSummary summary = run_pipeline(config, manifest, run_log.empty() ? &std::cerr : &log_file);
      if (summary.failures() > 0)
        std::cerr << summary.failures() << " of " << summary.frames.size() << " frames failed\n";
      return summary.exit_code();
    }
    if (*eval) {
      EvalReport report = evaluate_run(manifest, load_predictions(eval_pred, manifest), thresholds);
      report.spec_name = eval_name;
      const fs::path run_json = fs::path(eval_pred) / "run.json";
      if (fs::exists(run_json)) {
        std::ifstream in(run_json);
        const PipelineConfig recorded = PipelineConfig::parse(nlohmann::json::parse(in).at("config").get<std::string>());
        if (report.spec_name.empty()) report.spec_name = recorded.channel_spec.display_name();
        report.submask_enabled = recorded.submask_enabled;
      }
      const ReportTables tables = emit_report_tables(std::span(&report, 1));
      std::cout << tables.text;
      if (!eval_table.empty()) write_tables(eval_table, tables);
      return 0;
    }
    if (*ablate) {
      AblationOptions opts;
      opts.specs = abl_specs;
      opts.variants = !abl_no_variants;
      opts.thresholds = thresholds;
      const AblationResult result = run_ablation_suite(config, manifest, opts);
      std::cout << result.tables.text;
      if (!abl_table.empty()) write_tables(abl_table, result.tables);
      return 0;
    }
    const DatasetManifest m = gen_synthetic(syn_seed, syn_frames, syn_out, syn_opts);
    std::cout << "wrote " << m.size() << " frames to " << syn_out << "\n";
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
