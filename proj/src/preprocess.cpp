#include "bubbleglare/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bubbleglare {

void ClaheParams::validate() const {
  if (tiles_x < 1 || tiles_y < 1) throw std::invalid_argument("CLAHE needs at least one tile per axis");
  if (!(clip_limit >= 1.0)) throw std::invalid_argument("CLAHE clip limit must be >= 1");
  if (bins < 2) throw std::invalid_argument("CLAHE needs at least 2 bins");
}

void CoordParams::validate() const {
  if (!(coord_scale > 0.0)) throw std::invalid_argument("coordinate scale must be positive");
  if (!(weight_xy >= 0.0)) throw std::invalid_argument("coordinate weight must be non-negative");
}

int histogram_bin(double value, const ValueRange& range, int bins) {
  const double span = range.span();
  if (span <= 0.0) return 0;
  const int b = static_cast<int>(std::floor((value - range.min) / span * bins));
  return std::clamp(b, 0, bins - 1);
}

Eigen::VectorXd clip_histogram(const Eigen::VectorXd& hist, double limit) {
  Eigen::VectorXd clipped = hist.cwiseMin(limit);
  double excess = hist.sum() - clipped.sum();
  if (excess <= 0.0) return clipped;

  // Water-fill: raise every bin by the same amount d, saturating at limit.
  std::vector<double> gaps(static_cast<std::size_t>(clipped.size()));
  for (Index i = 0; i < clipped.size(); ++i) gaps[static_cast<std::size_t>(i)] = limit - clipped[i];
  std::sort(gaps.begin(), gaps.end());
  double d = 0.0;
  double filled = 0.0;  // mass added by raising all bins to the previous gap
  std::size_t open = gaps.size();
  double prev = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double step = (gaps[i] - prev) * static_cast<double>(open);
    if (filled + step >= excess) break;
    filled += step;
    prev = gaps[i];
    --open;
  }
  d = open > 0 ? prev + (excess - filled) / static_cast<double>(open) : prev;
  for (Index i = 0; i < clipped.size(); ++i) clipped[i] = std::min(clipped[i] + d, limit);
  return clipped;
}

Eigen::VectorXd equalization_lut(const Eigen::VectorXd& hist, const ValueRange& range) {
  Eigen::VectorXd lut(hist.size());
  const double total = hist.sum();
  double cdf = 0.0;
  for (Index i = 0; i < hist.size(); ++i) {
    cdf += hist[i];
    lut[i] = range.clamp(range.min + range.span() * (total > 0.0 ? cdf / total : 0.0));
  }
  return lut;
}

TileMapping tile_mapping(const Eigen::Ref<const Grid>& tile, const ValueRange& range, const ClaheParams& params) {
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(params.bins);
  for (Index r = 0; r < tile.rows(); ++r)
    for (Index c = 0; c < tile.cols(); ++c) hist[histogram_bin(tile(r, c), range, params.bins)] += 1.0;
  TileMapping m;
  if ((hist.array() > 0.0).count() <= 1 || range.span() <= 0.0) return m;
  const double limit = params.clip_limit * static_cast<double>(tile.size()) / params.bins;
  m.identity = false;
  m.lut = equalization_lut(clip_histogram(hist, limit), range);
  return m;
}

namespace {

std::vector<Index> tile_edges(Index extent, int tiles) {
  std::vector<Index> edges(static_cast<std::size_t>(tiles) + 1);
  for (int i = 0; i <= tiles; ++i) edges[static_cast<std::size_t>(i)] = extent * i / tiles;
  return edges;
}

// Neighbouring tile pair and blend weight for a pixel coordinate.
struct Blend {
  int lo;
  int hi;
  double t;
};

std::vector<Blend> blends(const std::vector<Index>& edges, Index extent) {
  const int tiles = static_cast<int>(edges.size()) - 1;
  std::vector<double> centres(static_cast<std::size_t>(tiles));
  for (int i = 0; i < tiles; ++i) centres[i] = 0.5 * static_cast<double>(edges[i] + edges[i + 1] - 1);
  std::vector<Blend> out(static_cast<std::size_t>(extent));
  int i = 0;
  for (Index p = 0; p < extent; ++p) {
    const double x = static_cast<double>(p);
    if (x <= centres.front()) {
      out[p] = {0, 0, 0.0};
    } else if (x >= centres.back()) {
      out[p] = {tiles - 1, tiles - 1, 0.0};
    } else {
      while (centres[i + 1] < x) ++i;
      out[p] = {i, i + 1, (x - centres[i]) / (centres[i + 1] - centres[i])};
    }
  }
  return out;
}

}  // namespace

Grid clahe(const Grid& channel, const ValueRange& range, const ClaheParams& params) {
  params.validate();
  const Index h = channel.rows();
  const Index w = channel.cols();
  if (w / params.tiles_x < 2 || h / params.tiles_y < 2)
    throw std::invalid_argument("CLAHE tile grid " + std::to_string(params.tiles_x) + "x" +
                                std::to_string(params.tiles_y) + " is too fine for a " + std::to_string(w) +
                                "x" + std::to_string(h) + " image");
  const auto xe = tile_edges(w, params.tiles_x);
  const auto ye = tile_edges(h, params.tiles_y);

  std::vector<TileMapping> maps;
  maps.reserve(static_cast<std::size_t>(params.tiles_x * params.tiles_y));
  for (int ty = 0; ty < params.tiles_y; ++ty)
    for (int tx = 0; tx < params.tiles_x; ++tx)
      maps.push_back(tile_mapping(channel.block(ye[ty], xe[tx], ye[ty + 1] - ye[ty], xe[tx + 1] - xe[tx]), range,
                                  params));
  auto map_at = [&](int ty, int tx) -> const TileMapping& { return maps[ty * params.tiles_x + tx]; };

  const auto bx = blends(xe, w);
  const auto by = blends(ye, h);
  Grid out(h, w);
  for (Index r = 0; r < h; ++r) {
    const Blend& vy = by[r];
    for (Index c = 0; c < w; ++c) {
      const Blend& vx = bx[c];
      const double v = channel(r, c);
      const double m00 = map_at(vy.lo, vx.lo)(v, range);
      const double m01 = map_at(vy.lo, vx.hi)(v, range);
      const double m10 = map_at(vy.hi, vx.lo)(v, range);
      const double m11 = map_at(vy.hi, vx.hi)(v, range);
      // Lerp form keeps equal corner values exact.
      const double top = m00 + vx.t * (m01 - m00);
      const double bottom = m10 + vx.t * (m11 - m10);
      out(r, c) = range.clamp(top + vy.t * (bottom - top));
    }
  }
  return out;
}

PlanarImage apply_clahe(const PlanarImage& img, const ClaheParams& params) {
  std::vector<Channel> out;
  out.reserve(img.channel_count());
  for (const auto& ch : img.channels()) out.push_back({ch.name, clahe(ch.data, ch.range, params), ch.range});
  return PlanarImage(std::move(out));
}

PlanarImage add_coordinate_channels(const PlanarImage& img, const CoordParams& params) {
  params.validate();
  const Index h = img.height();
  const Index w = img.width();
  const double sx = w > 1 ? params.coord_scale / static_cast<double>(w - 1) : 0.0;
  const double sy = h > 1 ? params.coord_scale / static_cast<double>(h - 1) : 0.0;
  Grid x(h, w);
  Grid y(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      x(r, c) = std::min(params.coord_scale, static_cast<double>(c) * sx);
      y(r, c) = std::min(params.coord_scale, static_cast<double>(r) * sy);
    }
  const ValueRange range{0.0, params.coord_scale};
  return img.with_channels({{"X", std::move(x), range}, {"Y", std::move(y), range}});
}

}  // namespace bubbleglare
