#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "bubbleglare/image.hpp"

namespace bubbleglare {

enum class ColorSpace { RGB, HSV, Lab, YUV };

inline constexpr ColorSpace kAllSpaces[] = {ColorSpace::RGB, ColorSpace::HSV, ColorSpace::Lab, ColorSpace::YUV};

std::string_view space_name(ColorSpace space);
/// Single-letter channel symbol: R G B, H S V, L a b, Y U V.
char channel_letter(ColorSpace space, int channel);
/// Qualified channel name used inside fused images, e.g. "Lab.L".
std::string channel_name(ColorSpace space, int channel);
/// Fixed value bounds: RGB 0-255; H 0-360, S/V 0-100; L 0-100, a/b -128-127;
/// Y/U/V 0-255 with chroma biased by 128.
ValueRange channel_range(ColorSpace space, int channel);

struct ChannelSelection {
  ColorSpace space;
  int channel;
  bool operator==(const ChannelSelection&) const = default;
};

/// Ordered channel selection written in combination notation, where
/// parenthesized letters are the dropped channels of each space:
/// "(R)GB+L(ab)" selects RGB.G, RGB.B, Lab.L.
class ChannelSpec {
 public:
  struct Letter {
    int channel;
    bool kept;
  };
  struct Group {
    ColorSpace space;
    std::vector<Letter> letters;  // in written order
  };

  ChannelSpec() = default;

  /// Throws ParseError naming the offending token.
  static ChannelSpec parse(std::string_view text);
  /// Builds the canonical notation for an explicit selection list.
  static ChannelSpec from_selections(const std::vector<ChannelSelection>& selections);

  const std::vector<ChannelSelection>& selections() const { return selections_; }
  const std::vector<Group>& groups() const { return groups_; }
  std::size_t size() const { return selections_.size(); }
  std::string display_name() const;

  bool operator==(const ChannelSpec& o) const { return selections_ == o.selections_; }

 private:
  explicit ChannelSpec(std::vector<Group> groups);

  std::vector<Group> groups_;
  std::vector<ChannelSelection> selections_;
};

/// The eight combinations compared in the evaluation tables, in table order.
const std::vector<std::string>& standard_channel_specs();

// Per-pixel conversions. RGB components are on 0..255.

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> hsv_from_rgb(const Eigen::Matrix<Scalar, 3, 1>& rgb) {
  const Scalar r = rgb[0], g = rgb[1], b = rgb[2];
  const Scalar mx = std::max({r, g, b});
  const Scalar mn = std::min({r, g, b});
  const Scalar d = mx - mn;
  Scalar h = 0;
  if (d > 0) {
    if (mx == r)
      h = Scalar(60) * ((g - b) / d);
    else if (mx == g)
      h = Scalar(60) * ((b - r) / d + Scalar(2));
    else
      h = Scalar(60) * ((r - g) / d + Scalar(4));
    if (h < 0) h += Scalar(360);
    if (h >= Scalar(360)) h -= Scalar(360);
  }
  const Scalar s = mx > 0 ? d / mx * Scalar(100) : Scalar(0);
  return {h, s, mx / Scalar(255) * Scalar(100)};
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rgb_from_hsv(const Eigen::Matrix<Scalar, 3, 1>& hsv) {
  const Scalar v = hsv[2] / Scalar(100) * Scalar(255);
  const Scalar c = v * hsv[1] / Scalar(100);
  const Scalar hp = hsv[0] / Scalar(60);
  const Scalar x = c * (Scalar(1) - std::abs(std::fmod(hp, Scalar(2)) - Scalar(1)));
  const Scalar m = v - c;
  Eigen::Matrix<Scalar, 3, 1> out;
  switch (static_cast<int>(hp) % 6) {
    case 0: out << c, x, 0; break;
    case 1: out << x, c, 0; break;
    case 2: out << 0, c, x; break;
    case 3: out << 0, x, c; break;
    case 4: out << x, 0, c; break;
    default: out << c, 0, x; break;
  }
  return out.array() + m;
}

namespace detail {

template <typename Scalar>
Scalar srgb_to_linear(Scalar c) {
  c /= Scalar(255);
  return c <= Scalar(0.04045) ? c / Scalar(12.92) : std::pow((c + Scalar(0.055)) / Scalar(1.055), Scalar(2.4));
}

template <typename Scalar>
Scalar linear_to_srgb(Scalar c) {
  const Scalar s = c <= Scalar(0.0031308) ? c * Scalar(12.92)
                                          : Scalar(1.055) * std::pow(c, Scalar(1) / Scalar(2.4)) - Scalar(0.055);
  return s * Scalar(255);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> srgb_to_xyz() {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0.4124564), Scalar(0.3575761), Scalar(0.1804375),
       Scalar(0.2126729), Scalar(0.7151522), Scalar(0.0721750),
       Scalar(0.0193339), Scalar(0.1191920), Scalar(0.9503041);
  return m;
}

// D65 reference white, equal to the row sums of srgb_to_xyz().
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> d65_white() {
  return {Scalar(0.95047), Scalar(1.0), Scalar(1.08883)};
}

template <typename Scalar>
Scalar lab_f(Scalar t) {
  constexpr double delta = 6.0 / 29.0;
  return t > Scalar(delta * delta * delta) ? std::cbrt(t) : t / Scalar(3 * delta * delta) + Scalar(4.0 / 29.0);
}

template <typename Scalar>
Scalar lab_f_inv(Scalar t) {
  constexpr double delta = 6.0 / 29.0;
  return t > Scalar(delta) ? t * t * t : Scalar(3 * delta * delta) * (t - Scalar(4.0 / 29.0));
}

}  // namespace detail

/// CIELAB from sRGB under D65.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> lab_from_rgb(const Eigen::Matrix<Scalar, 3, 1>& rgb) {
  const Eigen::Matrix<Scalar, 3, 1> lin = rgb.unaryExpr([](Scalar c) { return detail::srgb_to_linear(c); });
  const Eigen::Matrix<Scalar, 3, 1> xyz =
      (detail::srgb_to_xyz<Scalar>() * lin).cwiseQuotient(detail::d65_white<Scalar>());
  const Scalar fx = detail::lab_f(xyz[0]);
  const Scalar fy = detail::lab_f(xyz[1]);
  const Scalar fz = detail::lab_f(xyz[2]);
  return {Scalar(116) * fy - Scalar(16), Scalar(500) * (fx - fy), Scalar(200) * (fy - fz)};
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rgb_from_lab(const Eigen::Matrix<Scalar, 3, 1>& lab) {
  const Scalar fy = (lab[0] + Scalar(16)) / Scalar(116);
  const Scalar fx = fy + lab[1] / Scalar(500);
  const Scalar fz = fy - lab[2] / Scalar(200);
  const Eigen::Matrix<Scalar, 3, 1> xyz = Eigen::Matrix<Scalar, 3, 1>(detail::lab_f_inv(fx), detail::lab_f_inv(fy),
                                                                      detail::lab_f_inv(fz))
                                              .cwiseProduct(detail::d65_white<Scalar>());
  const Eigen::Matrix<Scalar, 3, 1> lin = detail::srgb_to_xyz<Scalar>().inverse() * xyz;
  return lin.unaryExpr([](Scalar c) { return detail::linear_to_srgb(c); });
}

/// Full-range BT.601 YCbCr; chroma biased by 128, not clamped.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> yuv_from_rgb(const Eigen::Matrix<Scalar, 3, 1>& rgb) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0.299), Scalar(0.587), Scalar(0.114),
       Scalar(-0.168736), Scalar(-0.331264), Scalar(0.5),
       Scalar(0.5), Scalar(-0.418688), Scalar(-0.081312);
  return m * rgb + Eigen::Matrix<Scalar, 3, 1>(0, 128, 128);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rgb_from_yuv(const Eigen::Matrix<Scalar, 3, 1>& yuv) {
  const Scalar y = yuv[0], u = yuv[1] - Scalar(128), v = yuv[2] - Scalar(128);
  return {y + Scalar(1.402) * v, y - Scalar(0.344136) * u - Scalar(0.714136) * v, y + Scalar(1.772) * u};
}

/// BT.601 luma, the grayscale used throughout post-processing.
template <typename Derived>
auto luma(const Eigen::ArrayBase<Derived>& r, const Eigen::ArrayBase<Derived>& g, const Eigen::ArrayBase<Derived>& b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

// Image-level conversions. Input must have exactly three channels holding
// R, G, B on 0..255; anything else throws std::invalid_argument. Outputs are
// clamped to channel_range() and named with channel_name().
PlanarImage rgb_to_hsv(const PlanarImage& rgb);
PlanarImage rgb_to_lab(const PlanarImage& rgb);
PlanarImage rgb_to_yuv(const PlanarImage& rgb);
PlanarImage convert(const PlanarImage& rgb, ColorSpace space);

// Inverses, used to check the forward conversions.
PlanarImage hsv_to_rgb(const PlanarImage& hsv);
PlanarImage lab_to_rgb(const PlanarImage& lab);
PlanarImage yuv_to_rgb(const PlanarImage& yuv);

/// Channels of `spec` in order, each carrying its native range.
PlanarImage fuse_channels(const PlanarImage& rgb, const ChannelSpec& spec);

/// Luma of an RGB image on 0..255.
Grid grayscale(const PlanarImage& rgb);

}  // namespace bubbleglare
