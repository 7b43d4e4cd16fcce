#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace visensor {

inline constexpr int kMaxImageDimension = 8192;

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
  friend auto operator<=>(const Rect&, const Rect&) = default;
};

std::string to_string(const Rect& r);

// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  // Zero-filled image. Throws InvalidArgument for a degenerate or oversized shape.
  GrayImage(int width, int height);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB raster, row-major.
class ColorImage {
 public:
  ColorImage() = default;
  ColorImage(int width, int height);
  ColorImage(int width, int height, std::vector<std::uint8_t> rgb);

  static ColorImage from_gray(const GrayImage& img);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb value);

  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// round(0.299 r + 0.587 g + 0.114 b), half-up, clamped to [0, 255].
std::uint8_t to_grayscale(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

GrayImage to_grayscale(const ColorImage& img);

// Summed-area tables with one leading zero row and column, each (w+1) x (h+1).
//
//   sum(X, Y)    = sum of I(x, y) for x < X, y < Y
//   sq_sum(X, Y) = same for I(x, y)^2
//   tilted(X, Y) = sum of I(x, y) for y < Y and |x - X + 1| <= Y - y - 1
//
// The tilted table is the 45-degree rotated variant used by legacy cascades:
// each entry covers the upward-widening triangle whose apex is pixel (X-1, Y-1).
class IntegralSet {
 public:
  IntegralSet() = default;
  explicit IntegralSet(const GrayImage& img);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::int64_t sum_at(int x, int y) const noexcept { return sum_[index(x, y)]; }
  std::int64_t sq_sum_at(int x, int y) const noexcept { return sq_sum_[index(x, y)]; }
  std::int64_t tilted_at(int x, int y) const noexcept { return tilted_[index(x, y)]; }

  // Unchecked 4-lookup sums; callers guarantee the rect is inside the image.
  std::int64_t sum_unchecked(const Rect& r) const noexcept {
    return sum_at(r.x + r.w, r.y + r.h) - sum_at(r.x + r.w, r.y) - sum_at(r.x, r.y + r.h) + sum_at(r.x, r.y);
  }
  std::int64_t sq_sum_unchecked(const Rect& r) const noexcept {
    return sq_sum_at(r.x + r.w, r.y + r.h) - sq_sum_at(r.x + r.w, r.y) - sq_sum_at(r.x, r.y + r.h) +
           sq_sum_at(r.x, r.y);
  }
  std::int64_t tilted_sum_unchecked(const Rect& r) const noexcept {
    return tilted_at(r.x, r.y) - tilted_at(r.x - r.h, r.y + r.h) - tilted_at(r.x + r.w, r.y + r.w) +
           tilted_at(r.x + r.w - r.h, r.y + r.w + r.h);
  }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_ + 1) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> sum_;
  std::vector<std::int64_t> sq_sum_;
  std::vector<std::int64_t> tilted_;
};

IntegralSet build_integrals(const GrayImage& img);

bool rect_fits(const Rect& r, int width, int height) noexcept;

// A tilted rect (x, y, w, h) starts at corner (x, y) and extends w pixels
// down-right and h pixels down-left at 45 degrees. Its table footprint spans
// columns [x - h, x + w] and rows [y, y + w + h].
bool tilted_rect_fits(const Rect& r, int width, int height) noexcept;

// Exact pixel sums. Throw OutOfBounds when the rect leaves the image.
std::int64_t rect_sum(const IntegralSet& integrals, const Rect& r);
std::int64_t sq_rect_sum(const IntegralSet& integrals, const Rect& r);
std::int64_t tilted_rect_sum(const IntegralSet& integrals, const Rect& r);

inline constexpr Rgb kGreen{0, 255, 0};

// Copy of the input with a 1-pixel green border drawn along each rect.
// Throws OutOfBounds if any rect leaves the image.
ColorImage annotate(const ColorImage& img, std::span<const Rect> rects);
ColorImage annotate(const GrayImage& img, std::span<const Rect> rects);

}  // namespace visensor
