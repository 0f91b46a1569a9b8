#include "bubbleglare/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/SparseCore>

namespace bubbleglare {

PlanarImage::PlanarImage(std::vector<Channel> channels) : channels_(std::move(channels)) {
  std::unordered_set<std::string> names;
  for (const auto& ch : channels_) {
    if (ch.data.rows() != height() || ch.data.cols() != width())
      throw std::invalid_argument("channel '" + ch.name + "' has mismatched dimensions");
    if (!names.insert(ch.name).second)
      throw std::invalid_argument("duplicate channel name '" + ch.name + "'");
    if (!(ch.range.min <= ch.range.max))
      throw std::invalid_argument("channel '" + ch.name + "' has an inverted range");
    if (ch.data.size() > 0) {
      if (!ch.data.allFinite())
        throw std::invalid_argument("channel '" + ch.name + "' holds non-finite values");
      if (ch.data.minCoeff() < ch.range.min || ch.data.maxCoeff() > ch.range.max)
        throw std::invalid_argument("channel '" + ch.name + "' holds values outside its range");
    }
  }
}

const Channel& PlanarImage::channel(std::string_view name) const {
  if (auto i = find(name)) return channels_[*i];
  throw std::invalid_argument("no channel named '" + std::string(name) + "'");
}

std::optional<std::size_t> PlanarImage::find(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i)
    if (channels_[i].name == name) return i;
  return std::nullopt;
}

PlanarImage PlanarImage::with_channels(std::vector<Channel> extra) const {
  std::vector<Channel> all = channels_;
  for (auto& ch : extra) all.push_back(std::move(ch));
  return PlanarImage(std::move(all));
}

PlanarImage make_rgb(Grid r, Grid g, Grid b) {
  const ValueRange range{0.0, 255.0};
  return PlanarImage({{"R", std::move(r), range}, {"G", std::move(g), range}, {"B", std::move(b), range}});
}

PlanarImage make_gray(Grid gray, ValueRange range) {
  return PlanarImage({{"gray", std::move(gray), range}});
}

namespace {

// Row i of the result averages the source interval [i*s, (i+1)*s), s = src/dst.
Eigen::SparseMatrix<double, Eigen::RowMajor> area_weights(Index src, Index dst) {
  std::vector<Eigen::Triplet<double>> triplets;
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (Index i = 0; i < dst; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    const Index j0 = static_cast<Index>(std::floor(lo));
    const Index j1 = std::min<Index>(src, static_cast<Index>(std::ceil(hi)));
    for (Index j = j0; j < j1; ++j) {
      const double overlap = std::min<double>(hi, j + 1) - std::max<double>(lo, j);
      if (overlap > 0.0) triplets.emplace_back(i, j, overlap / scale);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> w(dst, src);
  w.setFromTriplets(triplets.begin(), triplets.end());
  return w;
}

void check_target(Index src_w, Index src_h, Index target_w, Index target_h) {
  if (target_w < 1 || target_h < 1)
    throw std::invalid_argument("resize target must be at least 1x1");
  if (target_w > src_w || target_h > src_h)
    throw std::invalid_argument("resize only downscales: " + std::to_string(src_w) + "x" +
                                std::to_string(src_h) + " -> " + std::to_string(target_w) + "x" +
                                std::to_string(target_h));
}

}  // namespace

Grid resize_grid(const Grid& grid, Index target_w, Index target_h) {
  check_target(grid.cols(), grid.rows(), target_w, target_h);
  if (target_w == grid.cols() && target_h == grid.rows()) return grid;
  const auto rows = area_weights(grid.rows(), target_h);
  const auto cols = area_weights(grid.cols(), target_w);
  Eigen::MatrixXd out = rows * grid.matrix() * cols.transpose();
  return out.array();
}

PlanarImage resize(const PlanarImage& img, Index target_w, Index target_h) {
  check_target(img.width(), img.height(), target_w, target_h);
  std::vector<Channel> out;
  out.reserve(img.channel_count());
  for (const auto& ch : img.channels()) {
    Grid data = resize_grid(ch.data, target_w, target_h);
    // Convex combinations stay in range up to rounding.
    data = data.cwiseMax(ch.range.min).cwiseMin(ch.range.max);
    out.push_back({ch.name, std::move(data), ch.range});
  }
  return PlanarImage(std::move(out));
}

std::pair<Index, Index> fit_longest_side(Index width, Index height, Index longest) {
  const Index side = std::max(width, height);
  if (longest <= 0 || side <= longest) return {width, height};
  const double scale = static_cast<double>(longest) / static_cast<double>(side);
  const Index w = std::max<Index>(1, static_cast<Index>(std::lround(width * scale)));
  const Index h = std::max<Index>(1, static_cast<Index>(std::lround(height * scale)));
  return {std::min(w, width), std::min(h, height)};
}

}  // namespace bubbleglare
