#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "visensor/raster.hpp"

namespace visensor {

enum class MediaKind { Jpeg, Png, Pgm, Ppm, XmlMessage, Unknown };

std::string_view to_string(MediaKind kind) noexcept;
// File extension used when storing a frame of this kind ("jpg", "png", ...).
std::string_view file_extension(MediaKind kind) noexcept;

// Image kind from magic bytes alone; Unknown when nothing matches.
MediaKind sniff_image_kind(std::span<const std::uint8_t> prefix) noexcept;

using DecodedRaster = std::variant<GrayImage, ColorImage>;

// Compressed formats plug in here so the core only depends on PNM.
class ImageCodec {
 public:
  virtual ~ImageCodec() = default;
  virtual MediaKind kind() const noexcept = 0;
  // Throws CorruptImage on damaged payloads.
  virtual DecodedRaster decode(std::span<const std::uint8_t> bytes) const = 0;
};

// Codecs for JPEG/PNG compiled into this build (may be empty).
const std::vector<std::shared_ptr<const ImageCodec>>& builtin_codecs();

// Decodes PGM/PPM natively and JPEG/PNG through builtin_codecs(). Color
// inputs are reduced with to_grayscale. The hint is only consulted when the
// magic bytes are inconclusive.
// Throws UnsupportedMedia or CorruptImage.
GrayImage decode_image(std::span<const std::uint8_t> bytes, std::optional<MediaKind> hint = std::nullopt);

// Same, but keeps color so annotated output can be drawn on the original.
DecodedRaster decode_raster(std::span<const std::uint8_t> bytes, std::optional<MediaKind> hint = std::nullopt);

// Binary P5/P6 with maxval 255 and a single space/newline separated header.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
std::vector<std::uint8_t> encode_ppm(const ColorImage& img);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace visensor
