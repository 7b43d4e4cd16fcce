#include <doctest.h>

#include <set>
#include <string>

#include "generators.hpp"
#include "oracles.hpp"
#include "visensor/codec.hpp"
#include "visensor/error.hpp"
#include "visensor/raster.hpp"

using namespace visensor;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

GrayImage one_to_nine() { return GrayImage(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9}); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("pgm decode copies bytes") {
  const auto img = decode_image(bytes_of(std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4)));
  CHECK(img == GrayImage(2, 2, {0, 255, 128, 64}));
}

TEST_CASE("ppm white pixel decodes to 255") {
  const auto img = decode_image(bytes_of(std::string("P6\n1 1\n255\n\xff\xff\xff")));
  CHECK(img == GrayImage(1, 1, {255}));
}

TEST_CASE("truncated pgm is corrupt") {
  CHECK(code_of([] { decode_image(bytes_of("P5\n10 10\n255\n12345")); }) == ErrorCode::CorruptImage);
}

TEST_CASE("pnm header comments and maxval") {
  CHECK(decode_image(bytes_of(std::string("P5 # hi\n1 # w\n1\n255\n\x07"))) == GrayImage(1, 1, {7}));
  CHECK(code_of([] { decode_image(bytes_of("P5\n1 1\n65535\n\x00\x01")); }) == ErrorCode::UnsupportedMedia);
  CHECK(code_of([] { decode_image(bytes_of("P5\n0 1\n255\n")); }) == ErrorCode::CorruptImage);
  CHECK(code_of([] { decode_image(bytes_of("GIF89a")); }) == ErrorCode::UnsupportedMedia);
}

TEST_CASE("grayscale weights") {
  CHECK(to_grayscale(255, 255, 255) == 255);
  CHECK(to_grayscale(0, 0, 0) == 0);
  CHECK(to_grayscale(255, 0, 0) == 76);
  for (int g = 0; g < 256; ++g) {
    const auto v = static_cast<std::uint8_t>(g);
    CHECK(to_grayscale(v, v, v) == v);
  }
}

TEST_CASE("integral examples") {
  const IntegralSet one(GrayImage(1, 1, {7}));
  CHECK(rect_sum(one, {0, 0, 1, 1}) == 7);
  CHECK(sq_rect_sum(one, {0, 0, 1, 1}) == 49);

  const IntegralSet nine(one_to_nine());
  CHECK(rect_sum(nine, {0, 0, 2, 2}) == 12);
  CHECK(rect_sum(nine, {0, 0, 3, 3}) == 45);
  CHECK(rect_sum(nine, {1, 1, 2, 2}) == 28);
  CHECK(rect_sum(nine, {1, 1, 0, 2}) == 0);
  CHECK(code_of([&] { rect_sum(nine, {2, 2, 2, 1}); }) == ErrorCode::OutOfBounds);

  const IntegralSet zero(GrayImage(5, 5));
  CHECK(rect_sum(zero, {1, 2, 3, 3}) == 0);
  CHECK(tilted_rect_sum(zero, {2, 0, 2, 2}) == 0);
}

TEST_CASE("tilted unit rect on a single lit pixel") {
  // A 1x1 tilted rect anchored at (x, y) covers pixels (x-1, y) and
  // (x-1, y+1); with only the first lit the sum is that pixel's value.
  GrayImage img(4, 4);
  img.at(1, 1) = 200;
  const IntegralSet t(img);
  CHECK(tilted_rect_sum(t, {2, 1, 1, 1}) == 200);
  CHECK(oracle::tilted_sum(img, {2, 1, 1, 1}) == 200);
}

TEST_CASE("tilted rect on a random 5x5 image") {
  gen::Rng rng(5);
  const GrayImage img = gen::image(rng, 5, 5);
  const IntegralSet t(img);
  CHECK(tilted_rect_sum(t, {2, 0, 2, 2}) == oracle::tilted_sum(img, {2, 0, 2, 2}));
  CHECK(code_of([&] { tilted_rect_sum(t, {1, 0, 2, 2}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("tilted table matches its definition") {
  gen::Rng rng(11);
  for (int n = 0; n < 20; ++n) {
    const GrayImage img = gen::image(rng, gen::uniform(rng, 1, 9), gen::uniform(rng, 1, 9));
    const IntegralSet t(img);
    for (int Y = 0; Y <= img.height(); ++Y)
      for (int X = 0; X <= img.width(); ++X) REQUIRE(t.tilted_at(X, Y) == oracle::tilted_table(img, X, Y));
  }
}

TEST_CASE("integral identities on random rects") {
  gen::Rng rng(2024);
  for (int n = 0; n < 300; ++n) {
    const GrayImage img = gen::image(rng, gen::uniform(rng, 1, 64), gen::uniform(rng, 1, 64));
    const IntegralSet t(img);
    const Rect r = gen::upright_rect(rng, img.width(), img.height());
    REQUIRE(rect_sum(t, r) == oracle::sum(img, r));
    REQUIRE(sq_rect_sum(t, r) == oracle::sq_sum(img, r));
    if (img.width() >= 2 && img.height() >= 2) {
      const Rect tr = gen::tilted_rect(rng, img.width(), img.height());
      REQUIRE(tilted_rect_sum(t, tr) == oracle::tilted_sum(img, tr));
    }
  }
}

TEST_CASE("integral tables are zero-bordered and monotone") {
  gen::Rng rng(3);
  const GrayImage img = gen::image(rng, 17, 9);
  const IntegralSet t(img);
  for (int x = 0; x <= 17; ++x) CHECK(t.sum_at(x, 0) == 0);
  for (int y = 0; y <= 9; ++y) CHECK(t.sum_at(0, y) == 0);
  for (int y = 1; y <= 9; ++y)
    for (int x = 1; x <= 17; ++x) {
      CHECK(t.sum_at(x, y) >= t.sum_at(x - 1, y));
      CHECK(t.sum_at(x, y) >= t.sum_at(x, y - 1));
    }
}

TEST_CASE("pnm encode examples and round trip") {
  CHECK(encode_pgm(GrayImage(1, 1, {0})) == bytes_of(std::string("P5\n1 1\n255\n") + std::string(1, '\0')));
  CHECK(encode_pgm(GrayImage(2, 1, {10, 20})) == bytes_of("P5\n2 1\n255\n\x0a\x14"));
  gen::Rng rng(8);
  for (int n = 0; n < 50; ++n) {
    const GrayImage g = gen::image(rng, gen::uniform(rng, 1, 16), gen::uniform(rng, 1, 16));
    CHECK(decode_image(encode_pgm(g)) == g);
    ColorImage c(g.width(), g.height());
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x) c.set(x, y, {g.at(x, y), static_cast<std::uint8_t>(255 - g.at(x, y)), 7});
    CHECK(std::get<ColorImage>(decode_raster(encode_ppm(c))) == c);
  }
}

TEST_CASE("annotate draws green borders only") {
  gen::Rng rng(4);
  const GrayImage g = gen::image(rng, 12, 10);
  const ColorImage base = ColorImage::from_gray(g);
  CHECK(annotate(g, {}) == base);

  const std::vector<Rect> one{{2, 3, 5, 4}};
  const ColorImage a = annotate(g, one);
  int changed_to_green = 0;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) {
      const bool border = (x == 2 || x == 6) && y >= 3 && y <= 6 || (y == 3 || y == 6) && x >= 2 && x <= 6;
      if (border) {
        CHECK(a.at(x, y) == kGreen);
        ++changed_to_green;
      } else {
        CHECK(a.at(x, y) == base.at(x, y));
      }
    }
  CHECK(changed_to_green == 2 * 5 + 2 * 4 - 4);

  const std::vector<Rect> two{{1, 1, 6, 6}, {4, 2, 7, 7}};
  const ColorImage b = annotate(g, two);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) {
      bool on = false;
      for (const Rect& r : two) {
        const bool inside = x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
        on |= inside && (x == r.x || x == r.x + r.w - 1 || y == r.y || y == r.y + r.h - 1);
      }
      CHECK((on ? b.at(x, y) == kGreen : b.at(x, y) == base.at(x, y)));
    }
  const std::vector<Rect> outside{{10, 0, 5, 5}};
  CHECK(code_of([&] { annotate(g, outside); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("compressed codecs") {
  for (const auto& codec : builtin_codecs()) {
    INFO(std::string(to_string(codec->kind())));
    const std::vector<std::uint8_t> junk = codec->kind() == MediaKind::Jpeg
                                               ? std::vector<std::uint8_t>{0xFF, 0xD8, 0xFF, 0xE0, 0, 16, 'J'}
                                               : std::vector<std::uint8_t>{0x89, 'P', 'N', 'G', 13, 10, 26, 10, 0};
    CHECK(code_of([&] { decode_image(junk); }) == ErrorCode::CorruptImage);
  }
}
