#include "bubbleglare/colorspace.hpp"

#include <array>
#include <set>
#include <stdexcept>

#include "bubbleglare/errors.hpp"

namespace bubbleglare {

namespace {

constexpr std::array<std::array<char, 3>, 4> kLetters = {{
    {'R', 'G', 'B'},
    {'H', 'S', 'V'},
    {'L', 'a', 'b'},
    {'Y', 'U', 'V'},
}};

int space_index(ColorSpace s) { return static_cast<int>(s); }

void check_rgb(const PlanarImage& img) {
  if (img.channel_count() != 3)
    throw std::invalid_argument("expected a 3-channel image, got " + std::to_string(img.channel_count()));
}

template <typename Fn>
PlanarImage convert_pixels(const PlanarImage& src, ColorSpace out_space, bool out_is_rgb, Fn&& fn) {
  check_rgb(src);
  const Index h = src.height();
  const Index w = src.width();
  std::array<Grid, 3> out = {Grid(h, w), Grid(h, w), Grid(h, w)};
  std::array<ValueRange, 3> ranges;
  for (int k = 0; k < 3; ++k) ranges[k] = out_is_rgb ? ValueRange{0, 255} : channel_range(out_space, k);
  const Grid& a = src.channel(0).data;
  const Grid& b = src.channel(1).data;
  const Grid& c = src.channel(2).data;
  for (Index r = 0; r < h; ++r) {
    for (Index col = 0; col < w; ++col) {
      const Eigen::Vector3d v = fn(Eigen::Vector3d(a(r, col), b(r, col), c(r, col)));
      for (int k = 0; k < 3; ++k) out[k](r, col) = ranges[k].clamp(v[k]);
    }
  }
  std::vector<Channel> channels;
  for (int k = 0; k < 3; ++k) {
    const std::string name = out_is_rgb ? std::string(1, kLetters[0][k]) : channel_name(out_space, k);
    channels.push_back({name, std::move(out[k]), ranges[k]});
  }
  return PlanarImage(std::move(channels));
}

}  // namespace

std::string_view space_name(ColorSpace space) {
  switch (space) {
    case ColorSpace::RGB: return "RGB";
    case ColorSpace::HSV: return "HSV";
    case ColorSpace::Lab: return "Lab";
    case ColorSpace::YUV: return "YUV";
  }
  return "?";
}

char channel_letter(ColorSpace space, int channel) { return kLetters.at(space_index(space)).at(channel); }

std::string channel_name(ColorSpace space, int channel) {
  return std::string(space_name(space)) + "." + channel_letter(space, channel);
}

ValueRange channel_range(ColorSpace space, int channel) {
  switch (space) {
    case ColorSpace::RGB: return {0, 255};
    case ColorSpace::HSV: return channel == 0 ? ValueRange{0, 360} : ValueRange{0, 100};
    case ColorSpace::Lab: return channel == 0 ? ValueRange{0, 100} : ValueRange{-128, 127};
    case ColorSpace::YUV: return {0, 255};
  }
  throw std::invalid_argument("unknown color space");
}

ChannelSpec::ChannelSpec(std::vector<Group> groups) : groups_(std::move(groups)) {
  std::set<std::pair<int, int>> seen;
  for (const auto& g : groups_) {
    for (const auto& l : g.letters) {
      if (!l.kept) continue;
      if (!seen.insert({space_index(g.space), l.channel}).second)
        throw ParseError("duplicate channel " + channel_name(g.space, l.channel));
      selections_.push_back({g.space, l.channel});
    }
  }
  if (selections_.empty()) throw ParseError("channel combination selects no channels");
  if (selections_.size() > 4)
    throw ParseError("channel combination selects " + std::to_string(selections_.size()) +
                     " channels; at most 4 are allowed");
}

ChannelSpec ChannelSpec::parse(std::string_view text) {
  std::vector<Group> groups;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t plus = text.find('+', start);
    const std::string_view token = text.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
    const std::string tok(token);
    auto fail = [&](const std::string& why) { return ParseError("bad channel token '" + tok + "': " + why); };

    std::vector<std::pair<char, bool>> letters;
    bool in_paren = false;
    for (char ch : token) {
      if (ch == '(') {
        if (in_paren) throw fail("nested parenthesis");
        in_paren = true;
      } else if (ch == ')') {
        if (!in_paren) throw fail("unbalanced parenthesis");
        in_paren = false;
      } else if (ch == ' ') {
        continue;
      } else {
        letters.emplace_back(ch, !in_paren);
      }
    }
    if (in_paren) throw fail("unbalanced parenthesis");
    if (letters.size() != 3) throw fail("expected the three letters of one color space");

    std::optional<ColorSpace> match;
    for (ColorSpace s : kAllSpaces) {
      const auto& ls = kLetters[space_index(s)];
      std::multiset<char> want(ls.begin(), ls.end());
      std::multiset<char> got;
      for (auto& [c, _] : letters) got.insert(c);
      if (want == got) match = s;
    }
    if (!match) throw fail("letters do not name a color space");

    Group g{*match, {}};
    bool any_kept = false;
    for (auto& [c, kept] : letters) {
      const auto& ls = kLetters[space_index(*match)];
      const int idx = static_cast<int>(std::find(ls.begin(), ls.end(), c) - ls.begin());
      g.letters.push_back({idx, kept});
      any_kept = any_kept || kept;
    }
    if (!any_kept) throw fail("all channels dropped");
    groups.push_back(std::move(g));

    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return ChannelSpec(std::move(groups));
}

ChannelSpec ChannelSpec::from_selections(const std::vector<ChannelSelection>& selections) {
  // Consecutive selections from one space share a group. Kept letters take
  // the canonical slots of the kept channels, in selection order.
  std::vector<std::pair<ColorSpace, std::vector<int>>> runs;
  for (const auto& sel : selections) {
    if (sel.channel < 0 || sel.channel > 2) throw std::invalid_argument("channel index out of range");
    if (runs.empty() || runs.back().first != sel.space) runs.push_back({sel.space, {}});
    runs.back().second.push_back(sel.channel);
  }
  std::vector<Group> groups;
  for (const auto& [space, kept] : runs) {
    std::vector<int> slots = kept;
    std::sort(slots.begin(), slots.end());
    if (std::adjacent_find(slots.begin(), slots.end()) != slots.end())
      throw ParseError("duplicate channel in " + std::string(space_name(space)));
    Group g{space, {{0, false}, {1, false}, {2, false}}};
    for (std::size_t i = 0; i < slots.size(); ++i) g.letters[slots[i]] = {kept[i], true};
    groups.push_back(std::move(g));
  }
  return ChannelSpec(std::move(groups));
}

std::string ChannelSpec::display_name() const {
  std::string out;
  for (const auto& g : groups_) {
    if (!out.empty()) out += '+';
    bool open = false;
    for (const auto& l : g.letters) {
      if (!l.kept && !open) {
        out += '(';
        open = true;
      } else if (l.kept && open) {
        out += ')';
        open = false;
      }
      out += channel_letter(g.space, l.channel);
    }
    if (open) out += ')';
  }
  return out;
}

const std::vector<std::string>& standard_channel_specs() {
  static const std::vector<std::string> specs = {
      "RGB",         "HSV",         "Lab",
      "YUV",         "(R)GB+(HS)V", "(R)GB+L(ab)",
      "(R)GB+L(ab)+(HS)V", "(R)B(G)+L(ab)+(HS)V",
  };
  return specs;
}

PlanarImage rgb_to_hsv(const PlanarImage& rgb) {
  return convert_pixels(rgb, ColorSpace::HSV, false, [](const Eigen::Vector3d& p) { return hsv_from_rgb(p); });
}

PlanarImage rgb_to_lab(const PlanarImage& rgb) {
  return convert_pixels(rgb, ColorSpace::Lab, false, [](const Eigen::Vector3d& p) { return lab_from_rgb(p); });
}

PlanarImage rgb_to_yuv(const PlanarImage& rgb) {
  return convert_pixels(rgb, ColorSpace::YUV, false, [](const Eigen::Vector3d& p) { return yuv_from_rgb(p); });
}

PlanarImage hsv_to_rgb(const PlanarImage& hsv) {
  return convert_pixels(hsv, ColorSpace::RGB, true, [](const Eigen::Vector3d& p) { return rgb_from_hsv(p); });
}

PlanarImage lab_to_rgb(const PlanarImage& lab) {
  return convert_pixels(lab, ColorSpace::RGB, true, [](const Eigen::Vector3d& p) { return rgb_from_lab(p); });
}

PlanarImage yuv_to_rgb(const PlanarImage& yuv) {
  return convert_pixels(yuv, ColorSpace::RGB, true, [](const Eigen::Vector3d& p) { return rgb_from_yuv(p); });
}

PlanarImage convert(const PlanarImage& rgb, ColorSpace space) {
  switch (space) {
    case ColorSpace::RGB: {
      check_rgb(rgb);
      std::vector<Channel> channels;
      for (int k = 0; k < 3; ++k)
        channels.push_back({channel_name(ColorSpace::RGB, k), rgb.channel(k).data, channel_range(ColorSpace::RGB, k)});
      return PlanarImage(std::move(channels));
    }
    case ColorSpace::HSV: return rgb_to_hsv(rgb);
    case ColorSpace::Lab: return rgb_to_lab(rgb);
    case ColorSpace::YUV: return rgb_to_yuv(rgb);
  }
  throw std::invalid_argument("unknown color space");
}

PlanarImage fuse_channels(const PlanarImage& rgb, const ChannelSpec& spec) {
  check_rgb(rgb);
  if (spec.size() == 0) throw std::invalid_argument("empty channel combination");
  std::array<std::optional<PlanarImage>, 4> converted;
  std::vector<Channel> out;
  for (const auto& sel : spec.selections()) {
    auto& slot = converted[space_index(sel.space)];
    if (!slot) slot = convert(rgb, sel.space);
    out.push_back(slot->channel(static_cast<std::size_t>(sel.channel)));
  }
  return PlanarImage(std::move(out));
}

Grid grayscale(const PlanarImage& rgb) {
  check_rgb(rgb);
  return luma(rgb.channel(0).data, rgb.channel(1).data, rgb.channel(2).data).cwiseMax(0.0).cwiseMin(255.0);
}

}  // namespace bubbleglare
