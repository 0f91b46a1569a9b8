#include "bubbleglare/codec.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "bubbleglare/errors.hpp"

namespace bubbleglare {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), b.begin());
}

struct PngLayout {
  bool gray = false;
  std::size_t first_idat = 0;
};

// Walks the chunk structure so structural damage is reported with an offset
// before libpng sees the stream.
PngLayout scan_png(std::span<const std::uint8_t> b) {
  PngLayout layout;
  std::size_t at = 8;
  bool seen_ihdr = false;
  while (true) {
    if (at + 12 > b.size()) throw DecodeError("truncated PNG chunk header", at);
    const std::uint32_t length = read_be32(b, at);
    if (length > b.size() || at + 12 + length > b.size())
      throw DecodeError("truncated PNG chunk", at);
    const char type[5] = {char(b[at + 4]), char(b[at + 5]), char(b[at + 6]), char(b[at + 7]), 0};
    const std::string tag(type);
    const uLong crc = crc32(0L, b.data() + at + 4, 4 + length);
    if (crc != read_be32(b, at + 8 + length)) throw DecodeError("PNG chunk CRC mismatch", at);
    if (!seen_ihdr) {
      if (tag != "IHDR" || length != 13) throw DecodeError("PNG stream must start with IHDR", at);
      const std::uint8_t depth = b[at + 8 + 8];
      const std::uint8_t color = b[at + 8 + 9];
      if (depth == 16) throw UnsupportedFormat("16-bit PNG is not supported");
      layout.gray = color == 0 || color == 4;
      seen_ihdr = true;
    }
    if (tag == "IDAT" && layout.first_idat == 0) layout.first_idat = at;
    at += 12 + length;
    if (tag == "IEND") break;
  }
  if (layout.first_idat == 0) throw DecodeError("PNG stream has no image data", at);
  return layout;
}

PlanarImage decode_png(std::span<const std::uint8_t> b, bool keep_gray) {
  const PngLayout layout = scan_png(b);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, b.data(), b.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG header rejected: " + msg, 8);
  }
  const bool gray = keep_gray && layout.gray;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG image data rejected: " + msg, layout.first_idat);
  }
  const Index w = image.width;
  const Index h = image.height;
  const Index stride = gray ? 1 : 3;
  std::vector<Grid> planes(stride, Grid(h, w));
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c)
      for (Index k = 0; k < stride; ++k) planes[k](r, c) = buffer[(r * w + c) * stride + k];
  if (gray) return make_gray(std::move(planes[0]));
  return make_rgb(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]));
}

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> b) : b_(b) {}

  void skip_space() {
    while (at_ < b_.size()) {
      if (b_[at_] == '#') {
        while (at_ < b_.size() && b_[at_] != '\n') ++at_;
      } else if (std::isspace(b_[at_])) {
        ++at_;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space();
    const std::size_t start = at_;
    long v = 0;
    while (at_ < b_.size() && std::isdigit(b_[at_])) {
      v = v * 10 + (b_[at_] - '0');
      if (v > (1L << 30)) throw DecodeError("PNM header value too large", start);
      ++at_;
    }
    if (at_ == start) throw DecodeError("expected a number in PNM header", start);
    return v;
  }

  std::size_t at() const { return at_; }
  void advance(std::size_t n) { at_ += n; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t at_ = 2;
};

PlanarImage decode_pnm(std::span<const std::uint8_t> b, bool keep_gray) {
  const bool gray = b[1] == '5';
  PnmReader reader(b);
  const long w = reader.number();
  const long h = reader.number();
  const long maxval = reader.number();
  if (w < 1 || h < 1) throw DecodeError("PNM dimensions must be positive", reader.at());
  if (maxval != 255) throw UnsupportedFormat("PNM maxval " + std::to_string(maxval) + " is not 8-bit");
  if (reader.at() >= b.size() || !std::isspace(b[reader.at()]))
    throw DecodeError("expected whitespace after PNM header", reader.at());
  reader.advance(1);
  const std::size_t stride = gray ? 1 : 3;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * stride;
  if (b.size() - reader.at() < need)
    throw DecodeError("truncated PNM pixel data", b.size());
  const std::uint8_t* px = b.data() + reader.at();
  std::vector<Grid> planes(stride, Grid(h, w));
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c)
      for (std::size_t k = 0; k < stride; ++k) planes[k](r, c) = px[(r * w + c) * stride + k];
  if (gray) {
    if (keep_gray) return make_gray(std::move(planes[0]));
    return make_rgb(planes[0], planes[0], planes[0]);
  }
  return make_rgb(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]));
}

PlanarImage decode(std::span<const std::uint8_t> bytes, bool keep_gray) {
  if (is_png(bytes)) return decode_png(bytes, keep_gray);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return decode_pnm(bytes, keep_gray);
  if (bytes.size() >= 2 && bytes[0] == 'P' && std::isdigit(bytes[1]))
    throw UnsupportedFormat("only binary PNM (P5/P6) is supported");
  throw DecodeError("unrecognized image signature", 0);
}

std::uint8_t quantize(double v, const ValueRange& range) {
  const double span = range.span();
  const double scaled = span > 0.0 ? (v - range.min) * 255.0 / span : 0.0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0)));
}

}  // namespace

PlanarImage decode_image(std::span<const std::uint8_t> bytes) { return decode(bytes, false); }

PlanarImage decode_image_native(std::span<const std::uint8_t> bytes) { return decode(bytes, true); }

Bytes encode_image(const PlanarImage& img, ImageFormat format) {
  const std::size_t n = img.channel_count();
  if (n != 1 && n != 3)
    throw UnsupportedFormat("cannot encode a " + std::to_string(n) + "-channel image");
  const Index w = img.width();
  const Index h = img.height();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w * h) * n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ch = img.channel(k);
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) pixels[(r * w + c) * n + k] = quantize(ch.data(r, c), ch.range);
  }

  if (format == ImageFormat::Pnm) {
    const std::string header =
        std::string(n == 1 ? "P5" : "P6") + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    Bytes out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = n == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("PNG encode failed: ") + image.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

PlanarImage read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

void write_image(const std::filesystem::path& path, const PlanarImage& img) {
  const auto ext = path.extension().string();
  const bool pnm = ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
  write_file(path, encode_image(img, pnm ? ImageFormat::Pnm : ImageFormat::Png));
}

PlanarImage mask_to_image(const BinaryMask& mask) {
  return make_gray(mask.bits().cast<double>() * 255.0);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  const PlanarImage img = decode_image_native(read_file(path));
  return BinaryMask(img.channel(0).data > 127.0);
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  write_image(path, mask_to_image(mask));
}

}  // namespace bubbleglare
