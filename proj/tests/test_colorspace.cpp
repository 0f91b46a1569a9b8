#include "bubbleglare/colorspace.hpp"

#include <gtest/gtest.h>

#include "bubbleglare/errors.hpp"

namespace bubbleglare {
namespace {

using Vec3 = Eigen::Vector3d;

PlanarImage pixel(double r, double g, double b) {
  return make_rgb(Grid::Constant(1, 1, r), Grid::Constant(1, 1, g), Grid::Constant(1, 1, b));
}

Vec3 at(const PlanarImage& img) { return {img.channel(0).data(0, 0), img.channel(1).data(0, 0), img.channel(2).data(0, 0)}; }

PlanarImage rgb_grid(int steps) {
  const Index n = static_cast<Index>(steps) * steps * steps;
  Grid r(1, n), g(1, n), b(1, n);
  Index i = 0;
  for (int x = 0; x < steps; ++x)
    for (int y = 0; y < steps; ++y)
      for (int z = 0; z < steps; ++z, ++i) {
        r(0, i) = 255.0 * x / (steps - 1);
        g(0, i) = 255.0 * y / (steps - 1);
        b(0, i) = 255.0 * z / (steps - 1);
      }
  return make_rgb(r, g, b);
}

double max_diff(const PlanarImage& a, const PlanarImage& b) {
  double m = 0;
  for (std::size_t c = 0; c < a.channel_count(); ++c)
    m = std::max(m, (a.channel(c).data - b.channel(c).data).abs().maxCoeff());
  return m;
}

TEST(HsvTest, PinnedValues) {
  EXPECT_EQ(at(rgb_to_hsv(pixel(255, 0, 0))), Vec3(0, 100, 100));
  const Vec3 gray = at(rgb_to_hsv(pixel(128, 128, 128)));
  EXPECT_EQ(gray[0], 0);
  EXPECT_EQ(gray[1], 0);
  EXPECT_NEAR(gray[2], 50.196, 1e-3);
  // Reference from Python's colorsys.rgb_to_hsv.
  const Vec3 v = at(rgb_to_hsv(pixel(10, 200, 90)));
  EXPECT_NEAR(v[0], 145.26315789, 0.01);
  EXPECT_NEAR(v[1], 95.0, 0.01);
  EXPECT_NEAR(v[2], 78.43137255, 0.01);
  EXPECT_EQ(at(rgb_to_hsv(pixel(255, 255, 255))), Vec3(0, 0, 100));
  EXPECT_EQ(at(rgb_to_hsv(pixel(0, 0, 0))), Vec3(0, 0, 0));
  EXPECT_EQ(at(rgb_to_hsv(pixel(0, 255, 0))), Vec3(120, 100, 100));
  EXPECT_EQ(at(rgb_to_hsv(pixel(0, 0, 255))), Vec3(240, 100, 100));
}

TEST(HsvTest, HexconeOracle) {
  // Independent hexcone formulation: hue from the dominant channel's sector.
  auto oracle = [](double r, double g, double b) {
    r /= 255, g /= 255, b /= 255;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
    double h = 0;
    if (d > 0) {
      if (mx == r)
        h = std::fmod((g - b) / d + 6.0, 6.0);
      else if (mx == g)
        h = (b - r) / d + 2.0;
      else
        h = (r - g) / d + 4.0;
    }
    return Vec3(60.0 * h, mx > 0 ? 100.0 * d / mx : 0.0, 100.0 * mx);
  };
  const PlanarImage grid = rgb_grid(11);
  const PlanarImage hsv = rgb_to_hsv(grid);
  for (Index i = 0; i < grid.width(); ++i) {
    const Vec3 ref = oracle(grid.channel(0).data(0, i), grid.channel(1).data(0, i), grid.channel(2).data(0, i));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(hsv.channel(c).data(0, i), ref[c], 1e-9);
  }
}

TEST(LabTest, PinnedValues) {
  const Vec3 white = at(rgb_to_lab(pixel(255, 255, 255)));
  EXPECT_NEAR(white[0], 100.0, 1e-6);
  EXPECT_LT(std::abs(white[1]), 0.01);
  EXPECT_LT(std::abs(white[2]), 0.01);
  EXPECT_EQ(at(rgb_to_lab(pixel(0, 0, 0))), Vec3(0, 0, 0));
  // Reference from skimage.color.rgb2lab (D65, 2 degree observer).
  const Vec3 blue = at(rgb_to_lab(pixel(0, 0, 255)));
  EXPECT_NEAR(blue[0], 32.29567257, 0.01);
  EXPECT_NEAR(blue[1], 79.18559091, 0.01);
  EXPECT_NEAR(blue[2], -107.85730021, 0.01);
}

TEST(YuvTest, PinnedValues) {
  EXPECT_EQ(at(rgb_to_yuv(pixel(0, 0, 0))), Vec3(0, 128, 128));
  const Vec3 white = at(rgb_to_yuv(pixel(255, 255, 255)));
  EXPECT_NEAR(white[0], 255, 1e-9);
  EXPECT_NEAR(white[1], 128, 1e-9);
  EXPECT_NEAR(white[2], 128, 1e-9);
  // 0.299 * 255; 128 - 0.168736 * 255; 128 + 0.5 * 255 clamped.
  const Vec3 red = at(rgb_to_yuv(pixel(255, 0, 0)));
  EXPECT_NEAR(red[0], 76.245, 0.01);
  EXPECT_NEAR(red[1], 84.97, 0.01);
  EXPECT_EQ(red[2], 255);
}

TEST(ConversionTest, AchromaticInputs) {
  for (double v : {0.0, 17.0, 128.0, 200.0, 255.0}) {
    EXPECT_EQ(at(rgb_to_hsv(pixel(v, v, v)))[1], 0);
    const Vec3 lab = at(rgb_to_lab(pixel(v, v, v)));
    EXPECT_LT(std::abs(lab[1]), 0.01);
    EXPECT_LT(std::abs(lab[2]), 0.01);
    const Vec3 yuv = at(rgb_to_yuv(pixel(v, v, v)));
    EXPECT_NEAR(yuv[1], 128, 1e-9);
    EXPECT_NEAR(yuv[2], 128, 1e-9);
  }
}

TEST(ConversionTest, RoundTripDenseGrid) {
  const PlanarImage grid = rgb_grid(18);
  EXPECT_LE(max_diff(hsv_to_rgb(rgb_to_hsv(grid)), grid), 0.5 / 255);
  EXPECT_LE(max_diff(lab_to_rgb(rgb_to_lab(grid)), grid), 0.5 / 255);
}

TEST(ConversionTest, RejectsWrongChannelCount) {
  EXPECT_THROW(rgb_to_hsv(make_gray(Grid::Zero(1, 1))), std::invalid_argument);
}

TEST(ChannelSpecTest, ParseSelections) {
  const auto gbl = ChannelSpec::parse("(R)GB+L(ab)");
  ASSERT_EQ(gbl.size(), 3u);
  EXPECT_EQ(gbl.selections()[0], (ChannelSelection{ColorSpace::RGB, 1}));
  EXPECT_EQ(gbl.selections()[1], (ChannelSelection{ColorSpace::RGB, 2}));
  EXPECT_EQ(gbl.selections()[2], (ChannelSelection{ColorSpace::Lab, 0}));

  const auto blv = ChannelSpec::parse("(R)B(G)+L(ab)+(HS)V");
  ASSERT_EQ(blv.size(), 3u);
  EXPECT_EQ(blv.selections()[0], (ChannelSelection{ColorSpace::RGB, 2}));
  EXPECT_EQ(blv.selections()[1], (ChannelSelection{ColorSpace::Lab, 0}));
  EXPECT_EQ(blv.selections()[2], (ChannelSelection{ColorSpace::HSV, 2}));

  EXPECT_EQ(ChannelSpec::parse("HSV").size(), 3u);
}

TEST(ChannelSpecTest, ParseErrors) {
  for (const char* bad : {"(RGB)", "", "RG", "RGB+RGB", "R(GB", "rgb", "RGB+Lab+HSV", "XYZ"})
    EXPECT_THROW(ChannelSpec::parse(bad), ParseError) << bad;
}

TEST(ChannelSpecTest, DisplayNameRoundTrip) {
  for (const auto& name : standard_channel_specs()) EXPECT_EQ(ChannelSpec::parse(name).display_name(), name);
  ASSERT_EQ(standard_channel_specs().size(), 8u);
  EXPECT_EQ(standard_channel_specs().front(), "RGB");
  EXPECT_EQ(standard_channel_specs().back(), "(R)B(G)+L(ab)+(HS)V");
}

TEST(ChannelSpecTest, FromSelections) {
  const auto spec = ChannelSpec::from_selections({{ColorSpace::RGB, 1}, {ColorSpace::RGB, 2}, {ColorSpace::Lab, 0}});
  EXPECT_EQ(spec.display_name(), "(R)GB+L(ab)");
  EXPECT_EQ(ChannelSpec::parse(spec.display_name()), spec);
  const auto swapped = ChannelSpec::from_selections({{ColorSpace::RGB, 2}, {ColorSpace::RGB, 1}});
  EXPECT_EQ(ChannelSpec::parse(swapped.display_name()), swapped);
}

TEST(FuseTest, ChannelNamesAndOrder) {
  const PlanarImage img = rgb_grid(4);
  const PlanarImage gbl = fuse_channels(img, ChannelSpec::parse("(R)GB+L(ab)"));
  ASSERT_EQ(gbl.channel_count(), 3u);
  EXPECT_EQ(gbl.channel(0).name, "RGB.G");
  EXPECT_EQ(gbl.channel(1).name, "RGB.B");
  EXPECT_EQ(gbl.channel(2).name, "Lab.L");
  const PlanarImage ghv = fuse_channels(img, ChannelSpec::parse("(R)GB+(HS)V"));
  EXPECT_EQ(ghv.channel(2).name, "HSV.V");
}

TEST(FuseTest, RgbIsIdentity) {
  const PlanarImage img = rgb_grid(5);
  const PlanarImage out = fuse_channels(img, ChannelSpec::parse("RGB"));
  EXPECT_EQ(max_diff(out, img), 0.0);
}

TEST(FuseTest, MatchesFullConversions) {
  const PlanarImage img = rgb_grid(7);
  const PlanarImage hsv = rgb_to_hsv(img), lab = rgb_to_lab(img);
  const PlanarImage blv = fuse_channels(img, ChannelSpec::parse("(R)B(G)+L(ab)+(HS)V"));
  EXPECT_TRUE((blv.channel(0).data == img.channel(2).data).all());
  EXPECT_TRUE((blv.channel(1).data == lab.channel(0).data).all());
  EXPECT_TRUE((blv.channel(2).data == hsv.channel(2).data).all());
  EXPECT_EQ(blv.channel(1).range, (ValueRange{0, 100}));
}

TEST(GrayscaleTest, Bt601Luma) {
  const Grid g = grayscale(pixel(100, 50, 200));
  EXPECT_NEAR(g(0, 0), 0.299 * 100 + 0.587 * 50 + 0.114 * 200, 1e-9);
}

}  // namespace
}  // namespace bubbleglare
