#include "bubbleglare/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "bubbleglare/ablation.hpp"
#include "bubbleglare/codec.hpp"
#include "bubbleglare/errors.hpp"
#include "bubbleglare/synthetic.hpp"

namespace bubbleglare {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "bubbleglare_pipeline_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SyntheticOptions small_frames() {
  SyntheticOptions o;
  o.width = 160;
  o.height = 120;
  return o;
}

PipelineConfig small_config(const fs::path& out) {
  PipelineConfig c;
  c.resize_target = 160;
  c.output_dir = out;
  c.workers = 1;
  return c;
}

std::vector<std::string> list_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

TEST(ConfigTest, RoundTrip) {
  PipelineConfig c;
  EXPECT_EQ(PipelineConfig::parse(c.serialize()), c);

  c.channel_spec = ChannelSpec::parse("(R)B(G)+L(ab)+(HS)V");
  c.clahe->clip_limit = 2.5;
  c.clahe->tiles_x = 4;
  c.coords.reset();
  c.cluster.k_override = 7;
  c.cluster.seed = 18446744073709551615ull;
  c.cluster.tol = 1e-7;
  c.cluster.init = KMeansInit::PlusPlus;
  c.weights = {{"b", 2.0}, {"Lab.L", 0.1}};
  c.extraction.erosion_radius = 0;
  c.extraction.erosion_iters = 0;
  c.extraction.area_min = {40, true};
  c.extraction.saddle = SaddleRule::CellAverage;
  c.submask_enabled = false;
  c.output_dir = "some dir/out";
  c.workers = 3;
  const PipelineConfig back = PipelineConfig::parse(c.serialize());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.serialize(), c.serialize());

  PipelineConfig off;
  off.clahe.reset();
  EXPECT_EQ(PipelineConfig::parse(off.serialize()), off);
}

TEST(ConfigTest, ParseErrors) {
  EXPECT_THROW(PipelineConfig::parse("colour = RGB\n"), ParseError);
  EXPECT_THROW(PipelineConfig::parse("k_max = many\n"), ParseError);
  EXPECT_THROW(PipelineConfig::parse("colorspace = (RGB)\n"), ParseError);
  EXPECT_THROW(PipelineConfig::parse("justtext\n"), ParseError);
  const PipelineConfig c = PipelineConfig::parse("# comment\n\nerosion = 2x3  # trailing\nk = auto\n");
  EXPECT_EQ(c.extraction.erosion_radius, 2);
  EXPECT_EQ(c.extraction.erosion_iters, 3);
}

TEST(ConfigTest, FeatureWeights) {
  PipelineConfig c;
  EXPECT_EQ(c.feature_weights(), (std::vector<double>{1, 1, 1, 1, 1}));
  c.set("weights", "g=1,b=2,l=3,x=0.5,y=0.25");
  EXPECT_EQ(c.feature_weights(), (std::vector<double>{1, 2, 3, 0.5, 0.25}));
  c.coords->weight_xy = 0;
  c.set("weights", "2=4");
  EXPECT_EQ(c.feature_weights(), (std::vector<double>{1, 1, 4, 0, 0}));
  c.channel_spec = ChannelSpec::parse("(R)GB+(HS)V");
  c.set("weights", "hsv.v=2");
  EXPECT_EQ(c.feature_weights()[2], 2);
  c.channel_spec = ChannelSpec::parse("RGB+(HS)V");
  c.set("weights", "v=2");
  EXPECT_NO_THROW(c.feature_weights());
  c.channel_spec = ChannelSpec::parse("(R)GB+(HS)V+(YU)V");
  EXPECT_THROW(c.feature_weights(), std::invalid_argument);
  c.set("weights", "q=1");
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(PrepareFrameTest, OrderAndShapes) {
  const SyntheticFrame f = synthesize_frame(3, 0, small_frames());
  PipelineConfig c;
  c.resize_target = 80;
  const PreparedFrame p = prepare_frame(f.rgb, c);
  EXPECT_EQ(p.features.width(), 80);
  EXPECT_EQ(p.features.height(), 60);
  ASSERT_EQ(p.features.channel_count(), 5u);
  EXPECT_EQ(p.features.channel(3).name, "X");
  EXPECT_EQ(p.value.rows(), 60);
  // Fuse, resize, then equalize each channel.
  const PlanarImage expect = apply_clahe(resize(fuse_channels(f.rgb, c.channel_spec), 80, 60), *c.clahe);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE((p.features.channel(i).data == expect.channel(i).data).all());
  const Grid v = resize_grid(rgb_to_hsv(f.rgb).channel(2).data, 80, 60);
  EXPECT_TRUE((p.value == v).all());
}

TEST(RunPipelineTest, FlatFrameWritesEmptyMask) {
  const fs::path dir = scratch("flat");
  const PlanarImage flat = make_rgb(Grid::Constant(60, 80, 30), Grid::Constant(60, 80, 120), Grid::Constant(60, 80, 160));
  write_image(dir / "flat.png", flat);
  const DatasetManifest m({{dir / "flat.png", std::nullopt, 0}});
  const RunSummary s = run_pipeline(small_config(dir / "out"), m);
  EXPECT_EQ(s.exit_code(), 0);
  EXPECT_TRUE(read_mask(dir / "out" / "frame_000000_mask.png").empty());
  EXPECT_TRUE(fs::exists(dir / "out" / "frame_000000_overlay.png"));
}

TEST(RunPipelineTest, MissingFrameIsSkipped) {
  const fs::path dir = scratch("missing");
  const DatasetManifest data = gen_synthetic(5, 2, dir / "data", small_frames());
  std::vector<ManifestEntry> entries = data.entries();
  entries.insert(entries.begin() + 1, ManifestEntry{dir / "nope.png", std::nullopt, 0});
  entries[1].frame = 1;
  entries[2].frame = 2;
  const RunSummary s = run_pipeline(small_config(dir / "out"), DatasetManifest(entries));
  EXPECT_EQ(s.failures(), 1);
  EXPECT_NE(s.exit_code(), 0);
  EXPECT_FALSE(s.frames[1].ok);
  EXPECT_TRUE(s.frames[2].ok);
  EXPECT_FALSE(fs::exists(dir / "out" / "frame_000001_mask.png"));
  EXPECT_TRUE(fs::exists(dir / "out" / "frame_000002_mask.png"));
}

TEST(RunPipelineTest, TenFrameSequence) {
  const fs::path dir = scratch("ten");
  const DatasetManifest data = gen_synthetic(11, 10, dir / "data", small_frames());
  PipelineConfig c = small_config(dir / "out");
  c.workers = 2;
  const RunSummary s = run_pipeline(c, data);
  EXPECT_EQ(s.exit_code(), 0);
  const auto files = list_files(dir / "out");
  EXPECT_EQ(files.size(), 31u);
  for (int f = 0; f < 10; ++f)
    for (const char* suffix : {"_mask.png", "_overlay.png", "_instances.json"})
      EXPECT_TRUE(std::binary_search(files.begin(), files.end(), frame_stem(f) + suffix));

  // The same run single-threaded produces the same bytes.
  PipelineConfig one = c;
  one.output_dir = dir / "out1";
  one.workers = 1;
  run_pipeline(one, data);
  // run.json records the worker count, so only the per-frame files compare.
  for (const auto& name : files)
    if (name != "run.json") {
      EXPECT_EQ(read_file(dir / "out" / name), read_file(dir / "out1" / name)) << name;
    }
}

TEST(SyntheticTest, DeterministicFilesAndArity) {
  const fs::path dir = scratch("synth");
  const DatasetManifest a = gen_synthetic(42, 5, dir / "a", small_frames());
  const DatasetManifest b = gen_synthetic(42, 5, dir / "b", small_frames());
  EXPECT_EQ(list_files(dir / "a" / "images").size(), 5u);
  EXPECT_EQ(list_files(dir / "a" / "truth").size(), 5u);
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.jsonl"));
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(read_file(a.entries()[i].image), read_file(b.entries()[i].image));
    EXPECT_EQ(read_file(*a.entries()[i].truth), read_file(*b.entries()[i].truth));
  }
  EXPECT_EQ(read_file(dir / "a" / "manifest.jsonl"), read_file(dir / "b" / "manifest.jsonl"));
  const DatasetManifest c = gen_synthetic(43, 1, dir / "c", small_frames());
  EXPECT_NE(read_file(c.entries()[0].image), read_file(a.entries()[0].image));
  EXPECT_THROW(gen_synthetic(1, 0, dir / "d", small_frames()), std::invalid_argument);
}

TEST(SyntheticTest, TruthAboveFloorBand) {
  const SyntheticOptions o;
  const double floor_row = static_cast<double>(floor_band_start(o));
  for (int i = 0; i < 40; ++i) {
    const SyntheticFrame f = synthesize_frame(7, i, o);
    EXPECT_GE(f.truth.polygons.size(), 1u);
    EXPECT_LE(f.truth.polygons.size(), 4u);
    for (const auto& poly : f.truth.polygons)
      for (const auto& p : poly) EXPECT_LT(p.x(), floor_row);
  }
}

TEST(DetectSceneTest, CoversBlobsAndSparesFloor) {
  const SyntheticOptions o;
  const Index floor_row = floor_band_start(o);
  const PipelineConfig c;
  double covered = 0, total = 0;
  int clean_floor = 0;
  const int frames = 8;
  for (int i = 0; i < frames; ++i) {
    const SyntheticFrame f = synthesize_frame(21, i, o);
    const PreparedFrame p = prepare_frame(f.rgb, c);
    const DetectionResult r = detect_frame(p, cluster_frame(p, c), c.extraction, true);
    // Blob cores: the ellipses shrunk to 85% of their axes.
    GroundTruth core = f.truth;
    for (auto& poly : core.polygons) {
      Point centre = Point::Zero();
      for (const auto& q : poly) centre += q;
      centre /= static_cast<double>(poly.size());
      for (auto& q : poly) q = centre + 0.85 * (q - centre);
    }
    const BinaryMask blob = rasterize(core, o.width, o.height);
    covered += static_cast<double>((blob.bits() && r.final_mask.bits()).count());
    total += static_cast<double>(blob.count());
    clean_floor += r.final_mask.bits().bottomRows(o.height - floor_row).count() == 0;
  }
  EXPECT_GE(covered / total, 0.9);
  EXPECT_GE(clean_floor, frames - 1);
}

TEST(DetectSceneTest, ErosionReducesSpeckleInstances) {
  const PipelineConfig c;
  GlareExtractionParams off = c.extraction;
  off.erosion_radius = off.erosion_iters = 0;
  for (int i = 0; i < 3; ++i) {
    const PreparedFrame p = prepare_frame(synthesize_frame(8, i).rgb, c);
    const ClusterModel m = cluster_frame(p, c);
    EXPECT_LT(detect_frame(p, m, c.extraction, true).total_instances(), detect_frame(p, m, off, true).total_instances());
  }
}

TEST(DetectSceneTest, Deterministic) {
  PipelineConfig c;
  c.resize_target = 160;
  const PreparedFrame p = prepare_frame(synthesize_frame(2, 0, small_frames()).rgb, c);
  const DetectionResult a = detect_frame(p, cluster_frame(p, c), c.extraction, true);
  const DetectionResult b = detect_frame(p, cluster_frame(p, c), c.extraction, true);
  EXPECT_EQ(a.final_mask, b.final_mask);
  EXPECT_EQ(a.total_instances(), b.total_instances());
}

TEST(AblationTest, StructureAndCellAgreement) {
  const fs::path dir = scratch("ablate");
  const DatasetManifest data = gen_synthetic(13, 3, dir / "data", small_frames());
  PipelineConfig base = small_config(dir / "out");

  AblationOptions one;
  one.specs = {"(R)GB+L(ab)"};
  one.variants = false;
  const AblationResult r = run_ablation_suite(base, data, one);
  ASSERT_EQ(r.reports.size(), 2u);

  // A cell equals an independent single-spec run scored from its files.
  const RunSummary s = run_pipeline(base, data);
  ASSERT_EQ(s.exit_code(), 0);
  std::map<int, FramePrediction> preds;
  for (const auto& e : data.entries())
    preds[e.frame] = {read_mask(base.output_dir / (frame_stem(e.frame) + "_mask.png")), 0};
  const EvalReport direct = evaluate_run(data, preds, one.thresholds);
  const EvalReport& cell = r.reports[1];
  ASSERT_TRUE(cell.submask_enabled);
  ASSERT_EQ(cell.per_image.size(), direct.per_image.size());
  for (std::size_t i = 0; i < direct.per_image.size(); ++i) EXPECT_EQ(cell.per_image[i].iou, direct.per_image[i].iou);
  EXPECT_EQ(cell.miou, direct.miou);
  EXPECT_EQ(evaluate_config(base, data, one.thresholds).miou, direct.miou);

  base.submask_enabled = false;
  EXPECT_EQ(evaluate_config(base, data, one.thresholds).miou, r.reports[0].miou);
}

TEST(AblationTest, FullSuiteShape) {
  const fs::path dir = scratch("ablate_full");
  SyntheticOptions o = small_frames();
  o.width = 96;
  o.height = 72;
  const DatasetManifest data = gen_synthetic(14, 2, dir / "data", o);
  PipelineConfig base = small_config(dir / "out");
  base.clahe->tiles_x = base.clahe->tiles_y = 4;
  const AblationResult r = run_ablation_suite(base, data);
  int cells = 0;
  for (const auto& rep : r.reports) cells += rep.variant.empty();
  EXPECT_EQ(cells, 16);
  EXPECT_EQ(r.reports.size(), 18u);
  EXPECT_EQ(parse_reports_json(r.tables.json), r.reports);
}

}  // namespace
}  // namespace bubbleglare
