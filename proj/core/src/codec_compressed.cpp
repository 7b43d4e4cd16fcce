// JPEG and PNG decoders behind the ImageCodec boundary. Each backend is
// compiled in only when its library was found at configure time.
#include <csetjmp>
#include <cstdio>

#include "visensor/codec.hpp"
#include "visensor/error.hpp"

#if VISENSOR_HAVE_JPEG
#include <jpeglib.h>
#endif
#if VISENSOR_HAVE_PNG
#include <png.h>
#endif

namespace visensor {

namespace {

void check_decoded_shape(long w, long h) {
  if (w < 1 || h < 1) throw Error(ErrorCode::CorruptImage, "decoded image has no pixels");
  if (w > kMaxImageDimension || h > kMaxImageDimension) {
    throw Error(ErrorCode::UnsupportedMedia, "decoded image exceeds the dimension limit");
  }
}

#if VISENSOR_HAVE_JPEG

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  bool warned = false;
  char message[JMSG_LENGTH_MAX] = {};
};

void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// libjpeg reports truncated data as a warning and pads with gray; any
// warning is treated as corruption.
void jpeg_message(j_common_ptr cinfo, int level) {
  if (level < 0) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    if (!err->warned) (*cinfo->err->format_message)(cinfo, err->message);
    err->warned = true;
  }
}

class JpegCodec final : public ImageCodec {
 public:
  MediaKind kind() const noexcept override { return MediaKind::Jpeg; }

  DecodedRaster decode(std::span<const std::uint8_t> bytes) const override {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_fail;
    err.base.emit_message = jpeg_message;

    std::vector<std::uint8_t> rgb;
    long width = 0;
    long height = 0;
    if (setjmp(err.jump)) {
      jpeg_destroy_decompress(&cinfo);
      throw Error(ErrorCode::CorruptImage, std::string("jpeg: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = cinfo.output_width;
    height = cinfo.output_height;
    if (width < 1 || height < 1 || width > kMaxImageDimension || height > kMaxImageDimension) {
      jpeg_destroy_decompress(&cinfo);
      check_decoded_shape(width, height);
    }
    rgb.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * static_cast<std::size_t>(width) * 3;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    if (err.warned) throw Error(ErrorCode::CorruptImage, std::string("jpeg: ") + err.message);
    return ColorImage(static_cast<int>(width), static_cast<int>(height), std::move(rgb));
  }
};

#endif

#if VISENSOR_HAVE_PNG

class PngCodec final : public ImageCodec {
 public:
  MediaKind kind() const noexcept override { return MediaKind::Png; }

  DecodedRaster decode(std::span<const std::uint8_t> bytes) const override {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
      throw Error(ErrorCode::CorruptImage, std::string("png: ") + image.message);
    }
    if (image.width > static_cast<png_uint_32>(kMaxImageDimension) ||
        image.height > static_cast<png_uint_32>(kMaxImageDimension)) {
      png_image_free(&image);
      check_decoded_shape(image.width, image.height);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
      std::string msg = image.message;
      png_image_free(&image);
      throw Error(ErrorCode::CorruptImage, "png: " + msg);
    }
    return ColorImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(rgb));
  }
};

#endif

}  // namespace

const std::vector<std::shared_ptr<const ImageCodec>>& builtin_codecs() {
  static const std::vector<std::shared_ptr<const ImageCodec>> codecs = [] {
    std::vector<std::shared_ptr<const ImageCodec>> list;
#if VISENSOR_HAVE_JPEG
    list.push_back(std::make_shared<JpegCodec>());
#endif
#if VISENSOR_HAVE_PNG
    list.push_back(std::make_shared<PngCodec>());
#endif
    return list;
  }();
  return codecs;
}

}  // namespace visensor
