#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace bubbleglare {

using Index = Eigen::Index;

/// Row-major 2-D raster, indexed (row, col).
template <typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Grid = GridT<double>;
using MaskGrid = GridT<bool>;
using LabelGrid = GridT<int>;

struct ValueRange {
  double min = 0.0;
  double max = 255.0;

  double span() const { return max - min; }
  bool contains(double v) const { return v >= min && v <= max; }
  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
  bool operator==(const ValueRange&) const = default;
};

struct Channel {
  std::string name;
  Grid data;
  ValueRange range;
};

/// Multi-channel raster. Every channel shares one shape, names are unique and
/// every value lies inside its channel's declared range; the constructor
/// rejects anything else with std::invalid_argument.
class PlanarImage {
 public:
  PlanarImage() = default;
  explicit PlanarImage(std::vector<Channel> channels);

  Index width() const { return channels_.empty() ? 0 : channels_.front().data.cols(); }
  Index height() const { return channels_.empty() ? 0 : channels_.front().data.rows(); }
  Index pixel_count() const { return width() * height(); }
  std::size_t channel_count() const { return channels_.size(); }
  bool empty() const { return channels_.empty(); }

  const std::vector<Channel>& channels() const { return channels_; }
  const Channel& channel(std::size_t i) const { return channels_.at(i); }
  const Channel& channel(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;

  /// Copy of this image with `extra` appended.
  PlanarImage with_channels(std::vector<Channel> extra) const;

 private:
  std::vector<Channel> channels_;
};

/// Three channels named R, G, B with range [0, 255].
PlanarImage make_rgb(Grid r, Grid g, Grid b);
PlanarImage make_gray(Grid gray, ValueRange range = {0.0, 255.0});

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(Index width, Index height, bool fill = false)
      : bits_(MaskGrid::Constant(height, width, fill)) {}
  explicit BinaryMask(MaskGrid bits) : bits_(std::move(bits)) {}

  Index width() const { return bits_.cols(); }
  Index height() const { return bits_.rows(); }
  Index count() const { return bits_.count(); }
  bool empty() const { return count() == 0; }

  bool operator()(Index row, Index col) const { return bits_(row, col); }
  bool& operator()(Index row, Index col) { return bits_(row, col); }

  const MaskGrid& bits() const { return bits_; }
  MaskGrid& bits() { return bits_; }

  bool same_shape(const BinaryMask& o) const {
    return width() == o.width() && height() == o.height();
  }
  bool operator==(const BinaryMask& o) const {
    return same_shape(o) && (bits_ == o.bits_).all();
  }
  /// True when every set pixel of this mask is also set in `o`.
  bool subset_of(const BinaryMask& o) const {
    return same_shape(o) && (!bits_ || o.bits_).all();
  }

 private:
  MaskGrid bits_;
};

/// Per-channel area-averaging downscale. Throws std::invalid_argument when
/// either target dimension is zero or exceeds the source.
PlanarImage resize(const PlanarImage& img, Index target_w, Index target_h);

/// Same kernel applied to a bare grid.
Grid resize_grid(const Grid& grid, Index target_w, Index target_h);

/// Target shape whose longest side is `longest` with aspect preserved. Never
/// upscales: returns the source shape when it already fits.
std::pair<Index, Index> fit_longest_side(Index width, Index height, Index longest);

}  // namespace bubbleglare
