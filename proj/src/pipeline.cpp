#include "bubbleglare/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bubbleglare/codec.hpp"
#include "bubbleglare/errors.hpp"

namespace bubbleglare {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ParseError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError(std::string(key) + ": expected a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

bool parse_switch(std::string_view key, std::string_view text) {
  const std::string v = lower(trim(text));
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ParseError(std::string(key) + ": expected on/off, got '" + std::string(text) + "'");
}

std::pair<int, int> parse_pair(std::string_view key, std::string_view text) {
  text = trim(text);
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) throw ParseError(std::string(key) + ": expected AxB, got '" + std::string(text) + "'");
  return {static_cast<int>(parse_int(key, text.substr(0, x))), static_cast<int>(parse_int(key, text.substr(x + 1)))};
}

AreaBound parse_area(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text.size() > 2 && lower(text.substr(text.size() - 2)) == "px")
    return {parse_double(key, text.substr(0, text.size() - 2)), true};
  return {parse_double(key, text), false};
}

std::string fmt_area(const AreaBound& a) { return fmt_double(a.value) + (a.absolute ? "px" : ""); }

std::vector<std::string> feature_channel_names(const PipelineConfig& c) {
  std::vector<std::string> names;
  for (const auto& sel : c.channel_spec.selections()) names.push_back(channel_name(sel.space, sel.channel));
  if (c.coords) {
    names.emplace_back("X");
    names.emplace_back("Y");
  }
  return names;
}

}  // namespace

void PipelineConfig::validate() const {
  if (channel_spec.size() == 0) throw std::invalid_argument("channel spec is empty");
  if (resize_target < 1) throw std::invalid_argument("resize target must be positive");
  if (clahe) clahe->validate();
  if (coords) coords->validate();
  cluster.validate();
  extraction.validate();
  if (workers < 0) throw std::invalid_argument("workers must be non-negative");
  if (!cluster.channel_weights.empty())
    throw std::invalid_argument("set clustering weights through the weights key");
  feature_weights();
}

std::vector<double> PipelineConfig::feature_weights() const {
  const auto names = feature_channel_names(*this);
  std::vector<double> w(names.size(), 1.0);
  if (coords) w[names.size() - 2] = w[names.size() - 1] = coords->weight_xy;
  for (const auto& [key, value] : weights) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("weight for '" + key + "' must be >= 0");
    const std::string k = lower(key);
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string n = lower(names[i]);
      const auto dot = n.find('.');
      const std::string letter = dot == std::string::npos ? n : n.substr(dot + 1);
      if (k == n || k == std::to_string(i)) {
        hits = {i};
        break;
      }
      if (k == letter) hits.push_back(i);
    }
    if (hits.empty()) throw std::invalid_argument("weight key '" + key + "' matches no feature channel");
    if (hits.size() > 1) throw std::invalid_argument("weight key '" + key + "' is ambiguous; use a qualified name");
    w[hits.front()] = value;
  }
  return w;
}

int PipelineConfig::worker_count() const {
  if (workers > 0) return workers;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void PipelineConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = lower(trim(key_in));
  const std::string_view value = trim(value_in);
  auto need_clahe = [&]() -> ClaheParams& {
    if (!clahe) clahe = ClaheParams{};
    return *clahe;
  };
  auto need_coords = [&]() -> CoordParams& {
    if (!coords) coords = CoordParams{};
    return *coords;
  };
  try {
    if (key == "colorspace") {
      channel_spec = ChannelSpec::parse(value);
    } else if (key == "resize") {
      resize_target = static_cast<int>(parse_int(key, value));
    } else if (key == "clahe") {
      if (parse_switch(key, value))
        need_clahe();
      else
        clahe.reset();
    } else if (key == "clahe_tiles") {
      auto [tx, ty] = parse_pair(key, value);
      need_clahe().tiles_x = tx;
      need_clahe().tiles_y = ty;
    } else if (key == "clahe_clip") {
      need_clahe().clip_limit = parse_double(key, value);
    } else if (key == "clahe_bins") {
      need_clahe().bins = static_cast<int>(parse_int(key, value));
    } else if (key == "coords") {
      if (parse_switch(key, value))
        need_coords();
      else
        coords.reset();
    } else if (key == "coord_scale") {
      need_coords().coord_scale = parse_double(key, value);
    } else if (key == "coord_weight") {
      need_coords().weight_xy = parse_double(key, value);
    } else if (key == "weights") {
      weights.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ParseError("weights: expected name=value, got '" + std::string(item) + "'");
        weights.emplace_back(std::string(trim(item.substr(0, eq))), parse_double(key, item.substr(eq + 1)));
      }
    } else if (key == "k") {
      if (lower(value) == "auto")
        cluster.k_override.reset();
      else
        cluster.k_override = static_cast<int>(parse_int(key, value));
    } else if (key == "k_min") {
      cluster.k_min = static_cast<int>(parse_int(key, value));
    } else if (key == "k_max") {
      cluster.k_max = static_cast<int>(parse_int(key, value));
    } else if (key == "k_divisor") {
      cluster.k_divisor = parse_double(key, value);
    } else if (key == "seed") {
      cluster.seed = parse_u64(key, value);
    } else if (key == "max_iters") {
      cluster.max_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "tol") {
      cluster.tol = parse_double(key, value);
    } else if (key == "init") {
      const std::string v = lower(value);
      if (v == "random")
        cluster.init = KMeansInit::Random;
      else if (v == "kmeans++")
        cluster.init = KMeansInit::PlusPlus;
      else
        throw ParseError("init: expected random or kmeans++");
    } else if (key == "alpha") {
      extraction.brightness_alpha = parse_double(key, value);
    } else if (key == "exclusion_frac") {
      extraction.exclusion_row_frac = parse_double(key, value);
    } else if (key == "erosion") {
      if (lower(value) == "off") {
        extraction.erosion_radius = 0;
        extraction.erosion_iters = 0;
      } else {
        auto [r, i] = parse_pair(key, value);
        extraction.erosion_radius = r;
        extraction.erosion_iters = i;
      }
    } else if (key == "area_min") {
      extraction.area_min = parse_area(key, value);
    } else if (key == "area_max") {
      extraction.area_max = parse_area(key, value);
    } else if (key == "saddle") {
      const std::string v = lower(value);
      if (v == "separate")
        extraction.saddle = SaddleRule::SeparateBright;
      else if (v == "average")
        extraction.saddle = SaddleRule::CellAverage;
      else
        throw ParseError("saddle: expected separate or average");
    } else if (key == "submask") {
      submask_enabled = parse_switch(key, value);
    } else if (key == "output_dir") {
      output_dir = std::string(value);
    } else if (key == "workers") {
      workers = static_cast<int>(parse_int(key, value));
    } else {
      throw ParseError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument& ex) {
    throw ParseError(key + ": " + ex.what());
  }
}

std::string PipelineConfig::serialize() const {
  std::ostringstream out;
  out << "colorspace = " << channel_spec.display_name() << "\n";
  out << "resize = " << resize_target << "\n";
  out << "clahe = " << (clahe ? "on" : "off") << "\n";
  if (clahe) {
    out << "clahe_tiles = " << clahe->tiles_x << "x" << clahe->tiles_y << "\n";
    out << "clahe_clip = " << fmt_double(clahe->clip_limit) << "\n";
    out << "clahe_bins = " << clahe->bins << "\n";
  }
  out << "coords = " << (coords ? "on" : "off") << "\n";
  if (coords) {
    out << "coord_scale = " << fmt_double(coords->coord_scale) << "\n";
    out << "coord_weight = " << fmt_double(coords->weight_xy) << "\n";
  }
  out << "weights = ";
  for (std::size_t i = 0; i < weights.size(); ++i)
    out << (i ? "," : "") << weights[i].first << "=" << fmt_double(weights[i].second);
  out << "\n";
  out << "k = " << (cluster.k_override ? std::to_string(*cluster.k_override) : "auto") << "\n";
  out << "k_min = " << cluster.k_min << "\n";
  out << "k_max = " << cluster.k_max << "\n";
  out << "k_divisor = " << fmt_double(cluster.k_divisor) << "\n";
  out << "seed = " << cluster.seed << "\n";
  out << "max_iters = " << cluster.max_iters << "\n";
  out << "tol = " << fmt_double(cluster.tol) << "\n";
  out << "init = " << (cluster.init == KMeansInit::Random ? "random" : "kmeans++") << "\n";
  out << "alpha = " << fmt_double(extraction.brightness_alpha) << "\n";
  out << "exclusion_frac = " << fmt_double(extraction.exclusion_row_frac) << "\n";
  if (extraction.erosion_radius == 0 && extraction.erosion_iters == 0)
    out << "erosion = off\n";
  else
    out << "erosion = " << extraction.erosion_radius << "x" << extraction.erosion_iters << "\n";
  out << "area_min = " << fmt_area(extraction.area_min) << "\n";
  out << "area_max = " << fmt_area(extraction.area_max) << "\n";
  out << "saddle = " << (extraction.saddle == SaddleRule::SeparateBright ? "separate" : "average") << "\n";
  out << "submask = " << (submask_enabled ? "on" : "off") << "\n";
  out << "output_dir = " << output_dir.string() << "\n";
  out << "workers = " << workers << "\n";
  return out.str();
}

PipelineConfig PipelineConfig::parse(std::string_view text) {
  PipelineConfig c;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      c.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ParseError& ex) {
      throw ParseError("config line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool PipelineConfig::operator==(const PipelineConfig& o) const {
  return channel_spec.display_name() == o.channel_spec.display_name() && resize_target == o.resize_target &&
         clahe == o.clahe && coords == o.coords && cluster == o.cluster && weights == o.weights &&
         extraction == o.extraction && submask_enabled == o.submask_enabled && output_dir == o.output_dir &&
         workers == o.workers;
}

PreparedFrame prepare_frame(const PlanarImage& rgb_full, const PipelineConfig& config) {
  const PlanarImage fused_full = fuse_channels(rgb_full, config.channel_spec);
  const Grid value_full = rgb_to_hsv(rgb_full).channel(2).data;
  const auto [w, h] = fit_longest_side(rgb_full.width(), rgb_full.height(), config.resize_target);

  PreparedFrame f{resize(rgb_full, w, h), resize(fused_full, w, h), resize_grid(value_full, w, h)};
  if (config.clahe) f.features = apply_clahe(f.features, *config.clahe);
  if (config.coords) f.features = add_coordinate_channels(f.features, *config.coords);
  return f;
}

ClusterModel cluster_frame(const PreparedFrame& frame, const PipelineConfig& config) {
  ClusterParams params = config.cluster;
  params.channel_weights = config.feature_weights();
  return cluster_image(frame.features, frame.value, params);
}

DetectionResult detect_frame(const PreparedFrame& frame, const ClusterModel& model, const GlareExtractionParams& params,
                             bool submask) {
  return submask ? detect(frame.rgb, model, params) : extract_and_erode(model, params);
}

std::string frame_stem(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d", frame);
  return buf;
}

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

nlohmann::ordered_json instance_entry(const ContourInstance& inst, bool with_contour) {
  nlohmann::ordered_json j;
  j["id"] = inst.instance_id;
  j["area"] = inst.area;
  j["bbox"] = {round3(inst.bbox[0]), round3(inst.bbox[1]), round3(inst.bbox[2]), round3(inst.bbox[3])};
  j["region_mean"] = round3(inst.region_mean);
  if (with_contour) {
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : inst.contour) pts.push_back({round3(p.x()), round3(p.y())});
    j["contour"] = std::move(pts);
  }
  return j;
}

}  // namespace

std::string instances_json(int frame, const ClusterModel& model, const DetectionResult& result) {
  nlohmann::ordered_json j;
  j["frame"] = frame;
  j["k_raw"] = model.k_raw;
  j["k"] = model.k;
  j["mask_pixels"] = result.final_mask.count();
  j["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : result.instances) j["instances"].push_back(instance_entry(inst, true));
  j["suppressed"] = nlohmann::ordered_json::array();
  for (const auto& inst : result.suppressed) j["suppressed"].push_back(instance_entry(inst, false));
  return j.dump(1) + "\n";
}

int RunSummary::failures() const {
  return static_cast<int>(std::count_if(frames.begin(), frames.end(), [](const FrameRecord& r) { return !r.ok; }));
}

RunSummary run_pipeline(const PipelineConfig& config, const DatasetManifest& manifest, std::ostream* log) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);

  const auto& entries = manifest.entries();
  RunSummary summary;
  summary.frames.resize(entries.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const auto& entry = entries[i];
      FrameRecord& rec = summary.frames[i];
      rec.frame = entry.frame;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const PreparedFrame f = prepare_frame(read_image(entry.image), config);
        const ClusterModel model = cluster_frame(f, config);
        const DetectionResult det = detect_frame(f, model, config.extraction, config.submask_enabled);
        const auto stem = config.output_dir / frame_stem(entry.frame);
        write_mask(stem.string() + "_mask.png", det.final_mask);
        write_image(stem.string() + "_overlay.png", render_overlay(f.rgb, det));
        const std::string js = instances_json(entry.frame, model, det);
        write_file(stem.string() + "_instances.json",
                   std::span(reinterpret_cast<const std::uint8_t*>(js.data()), js.size()));
        rec.ok = true;
        rec.k_raw = model.k_raw;
        rec.k = model.k;
        rec.iterations = model.iterations_run;
        rec.instances = static_cast<int>(det.total_instances());
      } catch (const std::exception& ex) {
        rec.error = ex.what();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const int n_workers = std::min<int>(config.worker_count(), static_cast<int>(std::max<std::size_t>(1, entries.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  nlohmann::ordered_json run;
  PipelineConfig recorded = config;
  recorded.output_dir.clear();
  run["config"] = recorded.serialize();
  run["frames"] = nlohmann::ordered_json::array();
  for (const auto& rec : summary.frames) {
    nlohmann::ordered_json fr;
    fr["frame"] = rec.frame;
    fr["ok"] = rec.ok;
    if (rec.ok) {
      fr["k_raw"] = rec.k_raw;
      fr["k"] = rec.k;
      fr["iterations"] = rec.iterations;
      fr["instances"] = rec.instances;
    } else {
      fr["error"] = rec.error;
    }
    run["frames"].push_back(std::move(fr));
    if (log) {
      if (rec.ok)
        *log << frame_stem(rec.frame) << " k_raw=" << rec.k_raw << " k=" << rec.k << " iters=" << rec.iterations
             << " instances=" << rec.instances << " seconds=" << rec.seconds << "\n";
      else
        *log << frame_stem(rec.frame) << " FAILED: " << rec.error << "\n";
    }
  }
  const std::string js = run.dump(2) + "\n";
  write_file(config.output_dir / "run.json", std::span(reinterpret_cast<const std::uint8_t*>(js.data()), js.size()));
  return summary;
}

}  // namespace bubbleglare
