#include "visensor/raster.hpp"

#include <algorithm>

#include "visensor/error.hpp"

namespace visensor {

namespace {

void check_shape(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "image shape " + std::to_string(width) + "x" + std::to_string(height) + " is degenerate");
  }
  if (width > kMaxImageDimension || height > kMaxImageDimension) {
    throw Error(ErrorCode::InvalidArgument, "image shape " + std::to_string(width) + "x" +
                                                std::to_string(height) + " exceeds the dimension limit");
  }
}

std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

std::string to_string(const Rect& r) {
  return "(" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
         std::to_string(r.h) + ")";
}

GrayImage::GrayImage(int width, int height) : width_(width), height_(height) {
  check_shape(width, height);
  pixels_.assign(area(width, height), 0);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_shape(width, height);
  if (pixels_.size() != area(width, height)) {
    throw Error(ErrorCode::InvalidArgument, "pixel buffer does not match image shape");
  }
}

ColorImage::ColorImage(int width, int height) : width_(width), height_(height) {
  check_shape(width, height);
  data_.assign(area(width, height) * 3, 0);
}

ColorImage::ColorImage(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  check_shape(width, height);
  if (data_.size() != area(width, height) * 3) {
    throw Error(ErrorCode::InvalidArgument, "rgb buffer does not match image shape");
  }
}

ColorImage ColorImage::from_gray(const GrayImage& img) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(img.pixels().size() * 3);
  for (std::uint8_t v : img.pixels()) {
    rgb.insert(rgb.end(), {v, v, v});
  }
  return ColorImage(img.width(), img.height(), std::move(rgb));
}

Rgb ColorImage::at(int x, int y) const {
  const std::size_t o = offset(x, y);
  return {data_[o], data_[o + 1], data_[o + 2]};
}

void ColorImage::set(int x, int y, Rgb value) {
  const std::size_t o = offset(x, y);
  data_[o] = value[0];
  data_[o + 1] = value[1];
  data_[o + 2] = value[2];
}

std::uint8_t to_grayscale(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  // Weights scaled by 1000 keep the half-up rounding exact.
  const unsigned weighted = 299u * r + 587u * g + 114u * b;
  return static_cast<std::uint8_t>(std::min(255u, (weighted + 500u) / 1000u));
}

GrayImage to_grayscale(const ColorImage& img) {
  std::vector<std::uint8_t> out(area(img.width(), img.height()));
  auto rgb = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = to_grayscale(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

IntegralSet::IntegralSet(const GrayImage& img) : width_(img.width()), height_(img.height()) {
  const int W = width_;
  const int H = height_;
  const std::size_t cells = area(W + 1, H + 1);
  sum_.assign(cells, 0);
  sq_sum_.assign(cells, 0);
  tilted_.assign(cells, 0);

  for (int y = 0; y < H; ++y) {
    std::int64_t row = 0;
    std::int64_t row_sq = 0;
    for (int x = 0; x < W; ++x) {
      const std::int64_t v = img.at(x, y);
      row += v;
      row_sq += v * v;
      sum_[index(x + 1, y + 1)] = sum_[index(x + 1, y)] + row;
      sq_sum_[index(x + 1, y + 1)] = sq_sum_[index(x + 1, y)] + row_sq;
    }
  }

  // Tilted table via
  //   T(X,Y) = T(X-1,Y-1) + T(X+1,Y-1) - T(X,Y-2) + I(X-1,Y-1) + I(X-1,Y-2).
  // Rows are computed over columns [-H, W+H]; entries near the buffer ends
  // are wrong but the error moves inward one column per row, so columns
  // [0, W] are exact for every row up to H.
  const int lo = -H;
  const int span = W + 2 * H + 1;
  std::vector<std::int64_t> prev2(span, 0), prev1(span, 0), cur(span, 0);
  auto pixel = [&](int x, int y) -> std::int64_t {
    if (x < 0 || x >= W || y < 0 || y >= H) return 0;
    return img.at(x, y);
  };
  auto get = [&](const std::vector<std::int64_t>& buf, int X) -> std::int64_t {
    const int i = X - lo;
    return (i < 0 || i >= span) ? 0 : buf[static_cast<std::size_t>(i)];
  };
  for (int Y = 1; Y <= H; ++Y) {
    for (int i = 0; i < span; ++i) {
      const int X = i + lo;
      cur[static_cast<std::size_t>(i)] =
          get(prev1, X - 1) + get(prev1, X + 1) - get(prev2, X) + pixel(X - 1, Y - 1) + pixel(X - 1, Y - 2);
    }
    for (int X = 0; X <= W; ++X) tilted_[index(X, Y)] = get(cur, X);
    std::swap(prev2, prev1);
    std::swap(prev1, cur);
  }
}

IntegralSet build_integrals(const GrayImage& img) { return IntegralSet(img); }

bool rect_fits(const Rect& r, int width, int height) noexcept {
  return r.x >= 0 && r.y >= 0 && r.w >= 0 && r.h >= 0 && r.w <= width - r.x && r.h <= height - r.y;
}

bool tilted_rect_fits(const Rect& r, int width, int height) noexcept {
  return r.x >= 0 && r.y >= 0 && r.w >= 0 && r.h >= 0 && r.x - r.h >= 0 && r.x + r.w <= width &&
         r.y + r.w + r.h <= height;
}

namespace {

void require_fits(const IntegralSet& integrals, const Rect& r) {
  if (!rect_fits(r, integrals.width(), integrals.height())) {
    throw Error(ErrorCode::OutOfBounds, "rect " + to_string(r) + " outside " + std::to_string(integrals.width()) +
                                            "x" + std::to_string(integrals.height()));
  }
}

}  // namespace

std::int64_t rect_sum(const IntegralSet& integrals, const Rect& r) {
  require_fits(integrals, r);
  return integrals.sum_unchecked(r);
}

std::int64_t sq_rect_sum(const IntegralSet& integrals, const Rect& r) {
  require_fits(integrals, r);
  return integrals.sq_sum_unchecked(r);
}

std::int64_t tilted_rect_sum(const IntegralSet& integrals, const Rect& r) {
  if (!tilted_rect_fits(r, integrals.width(), integrals.height())) {
    throw Error(ErrorCode::OutOfBounds, "tilted rect " + to_string(r) + " outside " +
                                            std::to_string(integrals.width()) + "x" +
                                            std::to_string(integrals.height()));
  }
  return integrals.tilted_sum_unchecked(r);
}

ColorImage annotate(const ColorImage& img, std::span<const Rect> rects) {
  for (const Rect& r : rects) {
    if (!rect_fits(r, img.width(), img.height())) {
      throw Error(ErrorCode::OutOfBounds, "annotation rect " + to_string(r) + " outside image");
    }
  }
  ColorImage out = img;
  for (const Rect& r : rects) {
    if (r.w == 0 || r.h == 0) continue;
    for (int x = r.x; x < r.x + r.w; ++x) {
      out.set(x, r.y, kGreen);
      out.set(x, r.y + r.h - 1, kGreen);
    }
    for (int y = r.y; y < r.y + r.h; ++y) {
      out.set(r.x, y, kGreen);
      out.set(r.x + r.w - 1, y, kGreen);
    }
  }
  return out;
}

ColorImage annotate(const GrayImage& img, std::span<const Rect> rects) {
  return annotate(ColorImage::from_gray(img), rects);
}

}  // namespace visensor
