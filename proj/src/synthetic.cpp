#include "bubbleglare/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bubbleglare/codec.hpp"
#include "bubbleglare/pipeline.hpp"

namespace bubbleglare {

void SyntheticOptions::validate() const {
  if (width < 32 || height < 32) throw std::invalid_argument("synthetic frames must be at least 32x32");
  if (min_blobs < 1 || max_blobs < min_blobs) throw std::invalid_argument("blob count range is invalid");
  if (!(blob_zone > 0.2 && blob_zone + floor_band < 1.0)) throw std::invalid_argument("blob zone overlaps the floor band");
  if (!(floor_band > 0.0)) throw std::invalid_argument("floor band must be positive");
  if (speckle_rate < 0 || speckle_rate > 0.1) throw std::invalid_argument("speckle rate must lie in [0, 0.1]");
  if (noise_sigma < 0 || red_noise_sigma < 0) throw std::invalid_argument("noise must be non-negative");
}

Index floor_band_start(const SyntheticOptions& o) {
  return static_cast<Index>(std::ceil(static_cast<double>(o.height) * (1.0 - o.floor_band)));
}

namespace {

struct Blob {
  double row, col, a, b, angle;
  Eigen::Vector3d color;
};

double smoothstep_edge(double d) {
  constexpr double inner = 0.85, outer = 1.15;
  if (d <= inner) return 1.0;
  if (d >= outer) return 0.0;
  return (outer - d) / (outer - inner);
}

}  // namespace

SyntheticFrame synthesize_frame(std::uint64_t seed, int index, const SyntheticOptions& o) {
  o.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Index w = o.width, h = o.height;
  const double W = static_cast<double>(w), H = static_cast<double>(h);
  const Index floor_row = floor_band_start(o);

  // Water column: light from above, blue-green with little red.
  const Eigen::Vector3d top(uni(25, 40), uni(140, 165), uni(175, 200));
  const Eigen::Vector3d bottom(uni(5, 15), uni(55, 75), uni(80, 100));
  const double tilt = uni(-0.15, 0.15);

  // Floor: bright mottled sand lit from above.
  const Eigen::Vector3d sand(uni(170, 195), uni(195, 215), uni(180, 200));
  double fx[3], fy[3], fp[3];
  for (int i = 0; i < 3; ++i) {
    fx[i] = uni(0.02, 0.08);
    fy[i] = uni(0.05, 0.2);
    fp[i] = uni(0, 2 * std::numbers::pi);
  }

  const int n_blobs = std::uniform_int_distribution<int>(o.min_blobs, o.max_blobs)(rng);
  const double zone = o.blob_zone * H;
  const double min_axis = std::max(6.0, 0.06 * std::min(W, H));
  const double max_axis = std::max(min_axis + 1.0, 0.16 * std::min(W, H));
  std::vector<Blob> blobs;
  for (int i = 0; i < n_blobs; ++i) {
    Blob b;
    b.a = uni(min_axis, max_axis);
    b.b = uni(min_axis, max_axis);
    b.angle = uni(0, std::numbers::pi);
    const double reach = 1.2 * std::max(b.a, b.b);
    b.row = uni(reach, std::max(reach + 1.0, zone - reach));
    b.col = uni(reach, W - reach);
    // Reflected surface light saturates the sensor in the bubble core.
    const double level = uni(275, 300);
    b.color = Eigen::Vector3d(level - uni(10, 20), level, level);
    blobs.push_back(b);
  }

  Grid ch[3];
  for (auto& g : ch) g.resize(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const double y = static_cast<double>(r) + 0.5, x = static_cast<double>(c) + 0.5;
      const double t = std::clamp(y / H + tilt * (x / W - 0.5), 0.0, 1.0);
      Eigen::Vector3d px = (1.0 - t) * top + t * bottom;
      if (r >= floor_row) {
        double m = 0;
        for (int i = 0; i < 3; ++i) m += std::sin(fx[i] * x + fy[i] * y + fp[i]);
        px = sand * (1.0 + 0.08 * m / 3.0);
        // Sunlight caustics focused on the sand.
        const double caustic = std::clamp((m - 1.4) / 0.4, 0.0, 1.0);
        px = (1.0 - caustic) * px + caustic * Eigen::Vector3d(280, 290, 290);
      }
      for (const auto& b : blobs) {
        const double dy = y - b.row, dx = x - b.col;
        const double u = (dy * std::cos(b.angle) + dx * std::sin(b.angle)) / b.a;
        const double v = (-dy * std::sin(b.angle) + dx * std::cos(b.angle)) / b.b;
        const double alpha = smoothstep_edge(std::sqrt(u * u + v * v));
        if (alpha > 0) px = (1.0 - alpha) * px + alpha * b.color;
      }
      px[0] += o.red_noise_sigma * gauss(rng);
      px[1] += o.noise_sigma * gauss(rng);
      px[2] += o.noise_sigma * gauss(rng);
      for (int k = 0; k < 3; ++k) ch[k](r, c) = std::clamp(std::round(px[k]), 0.0, 255.0);
    }
  }

  // Backscatter: isolated bright specks.
  std::bernoulli_distribution speck(o.speckle_rate);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c)
      if (speck(rng)) {
        const double level = std::round(uni(215, 255));
        const Index size = uni(0, 1) < 0.3 ? 2 : 1;
        for (Index dr = 0; dr < size && r + dr < h; ++dr)
          for (Index dc = 0; dc < size && c + dc < w; ++dc)
            for (int k = 0; k < 3; ++k) ch[k](r + dr, c + dc) = level;
      }

  SyntheticFrame frame{make_rgb(std::move(ch[0]), std::move(ch[1]), std::move(ch[2])), {}};
  frame.truth.width = w;
  frame.truth.height = h;
  constexpr int kVertices = 64;
  for (const auto& b : blobs) {
    Polygon poly;
    for (int i = 0; i < kVertices; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / kVertices;
      const double u = b.a * std::cos(phi), v = b.b * std::sin(phi);
      const double row = b.row + u * std::cos(b.angle) - v * std::sin(b.angle);
      const double col = b.col + u * std::sin(b.angle) + v * std::cos(b.angle);
      poly.emplace_back(std::clamp(row, 0.0, H), std::clamp(col, 0.0, W));
    }
    frame.truth.polygons.push_back(std::move(poly));
  }
  return frame;
}

DatasetManifest gen_synthetic(std::uint64_t seed, int n_frames, const std::filesystem::path& out,
                              const SyntheticOptions& options) {
  if (n_frames < 1) throw std::invalid_argument("need at least one synthetic frame");
  options.validate();
  std::filesystem::create_directories(out / "images");
  std::filesystem::create_directories(out / "truth");
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < n_frames; ++i) {
    const SyntheticFrame f = synthesize_frame(seed, i, options);
    const std::string stem = frame_stem(i);
    ManifestEntry e{out / "images" / (stem + ".png"), out / "truth" / (stem + ".json"), i};
    write_image(e.image, f.rgb);
    const std::string js = f.truth.to_json() + "\n";
    write_file(*e.truth, std::span(reinterpret_cast<const std::uint8_t*>(js.data()), js.size()));
    entries.push_back(std::move(e));
  }
  DatasetManifest manifest(std::move(entries));
  manifest.save(out / "manifest.jsonl");
  return manifest;
}

}  // namespace bubbleglare
