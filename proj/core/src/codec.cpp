#include "visensor/codec.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "visensor/error.hpp"

namespace visensor {

std::string_view to_string(MediaKind kind) noexcept {
  switch (kind) {
    case MediaKind::Jpeg: return "jpeg";
    case MediaKind::Png: return "png";
    case MediaKind::Pgm: return "pgm";
    case MediaKind::Ppm: return "ppm";
    case MediaKind::XmlMessage: return "xml_message";
    case MediaKind::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view file_extension(MediaKind kind) noexcept {
  switch (kind) {
    case MediaKind::Jpeg: return "jpg";
    case MediaKind::Png: return "png";
    case MediaKind::Pgm: return "pgm";
    case MediaKind::Ppm: return "ppm";
    case MediaKind::XmlMessage: return "xml";
    case MediaKind::Unknown: return "bin";
  }
  return "bin";
}

MediaKind sniff_image_kind(std::span<const std::uint8_t> p) noexcept {
  if (p.size() >= 3 && p[0] == 0xFF && p[1] == 0xD8 && p[2] == 0xFF) return MediaKind::Jpeg;
  if (p.size() >= 4 && p[0] == 0x89 && p[1] == 'P' && p[2] == 'N' && p[3] == 'G') return MediaKind::Png;
  if (p.size() >= 2 && p[0] == 'P' && p[1] == '5') return MediaKind::Pgm;
  if (p.size() >= 2 && p[0] == 'P' && p[1] == '6') return MediaKind::Ppm;
  return MediaKind::Unknown;
}

namespace {

struct PnmHeader {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw Error(ErrorCode::CorruptImage, std::string("pnm ") + what + " out of range");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::CorruptImage, std::string("pnm header missing ") + what);
    return value;
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::CorruptImage, "pnm header not terminated by whitespace");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;  // past the magic
};

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes) {
  HeaderReader reader(bytes);
  PnmHeader h;
  const long w = reader.number("width");
  const long ht = reader.number("height");
  const long maxval = reader.number("maxval");
  reader.single_whitespace();
  if (w < 1 || ht < 1) throw Error(ErrorCode::CorruptImage, "pnm dimensions must be positive");
  if (w > kMaxImageDimension || ht > kMaxImageDimension) {
    throw Error(ErrorCode::UnsupportedMedia, "pnm dimensions exceed " + std::to_string(kMaxImageDimension));
  }
  if (maxval != 255) throw Error(ErrorCode::UnsupportedMedia, "only maxval 255 is supported");
  h.width = static_cast<int>(w);
  h.height = static_cast<int>(ht);
  h.data_offset = reader.pos();
  return h;
}

std::span<const std::uint8_t> payload(std::span<const std::uint8_t> bytes, const PnmHeader& h, int channels) {
  const std::size_t need = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) *
                           static_cast<std::size_t>(channels);
  if (bytes.size() - h.data_offset < need) {
    throw Error(ErrorCode::CorruptImage, "pnm payload truncated: expected " + std::to_string(need) + " bytes, got " +
                                             std::to_string(bytes.size() - h.data_offset));
  }
  return bytes.subspan(h.data_offset, need);
}

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  const PnmHeader h = parse_pnm_header(bytes);
  auto data = payload(bytes, h, 1);
  return GrayImage(h.width, h.height, std::vector<std::uint8_t>(data.begin(), data.end()));
}

ColorImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const PnmHeader h = parse_pnm_header(bytes);
  auto data = payload(bytes, h, 3);
  return ColorImage(h.width, h.height, std::vector<std::uint8_t>(data.begin(), data.end()));
}

const ImageCodec* find_codec(MediaKind kind) {
  for (const auto& codec : builtin_codecs()) {
    if (codec->kind() == kind) return codec.get();
  }
  return nullptr;
}

std::vector<std::uint8_t> pnm_header(const char* magic, int w, int h) {
  std::string head = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  return {head.begin(), head.end()};
}

}  // namespace

DecodedRaster decode_raster(std::span<const std::uint8_t> bytes, std::optional<MediaKind> hint) {
  if (bytes.empty()) throw Error(ErrorCode::CorruptImage, "empty image payload");
  MediaKind kind = sniff_image_kind(bytes.first(std::min<std::size_t>(bytes.size(), 8)));
  if (kind == MediaKind::Unknown && hint) kind = *hint;
  switch (kind) {
    case MediaKind::Pgm: return decode_pgm(bytes);
    case MediaKind::Ppm: return decode_ppm(bytes);
    case MediaKind::Jpeg:
    case MediaKind::Png: {
      const ImageCodec* codec = find_codec(kind);
      if (codec == nullptr) {
        throw Error(ErrorCode::UnsupportedMedia, std::string("no codec for ") + std::string(to_string(kind)));
      }
      return codec->decode(bytes);
    }
    default: break;
  }
  throw Error(ErrorCode::UnsupportedMedia, "unrecognised image payload");
}

GrayImage decode_image(std::span<const std::uint8_t> bytes, std::optional<MediaKind> hint) {
  DecodedRaster raster = decode_raster(bytes, hint);
  if (auto* gray = std::get_if<GrayImage>(&raster)) return std::move(*gray);
  return to_grayscale(std::get<ColorImage>(raster));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  auto out = pnm_header("P5", img.width(), img.height());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

std::vector<std::uint8_t> encode_ppm(const ColorImage& img) {
  auto out = pnm_header("P6", img.width(), img.height());
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::StorageFailure, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::StorageFailure, "write failed for " + path);
}

}  // namespace visensor
