#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bubbleglare/image.hpp"

namespace bubbleglare {

using Bytes = std::vector<std::uint8_t>;

enum class ImageFormat { Png, Pnm };

/// Decodes 8-bit PNG, binary PPM (P6) or PGM (P5) into channels R, G, B in
/// [0, 255]. Grayscale sources are replicated into all three channels.
/// Throws DecodeError on malformed input and UnsupportedFormat on bit depths
/// other than 8.
PlanarImage decode_image(std::span<const std::uint8_t> bytes);

/// As decode_image but keeps grayscale sources as a single "gray" channel.
PlanarImage decode_image_native(std::span<const std::uint8_t> bytes);

/// Encodes a 1- or 3-channel image. Each channel is mapped linearly from its
/// declared range onto 0..255 and rounded, so 0..255 integer data round-trips
/// exactly. Other channel counts throw UnsupportedFormat.
Bytes encode_image(const PlanarImage& img, ImageFormat format = ImageFormat::Png);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

PlanarImage read_image(const std::filesystem::path& path);
/// Format chosen by extension: .ppm/.pgm/.pnm write PNM, anything else PNG.
void write_image(const std::filesystem::path& path, const PlanarImage& img);

/// Masks are stored as 8-bit grayscale, 255 for set pixels.
PlanarImage mask_to_image(const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace bubbleglare
