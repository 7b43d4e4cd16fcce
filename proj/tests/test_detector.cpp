#include <doctest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "visensor/cascade.hpp"
#include "visensor/detector.hpp"
#include "visensor/error.hpp"

using namespace visensor;

namespace {

const std::string kModels = VISENSOR_MODEL_DIR;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

DetectionConfig small_config(double factor = 1.25) {
  DetectionConfig cfg;
  cfg.scale_factor = factor;
  cfg.min_neighbors = 0;
  cfg.min_size_w = 0;
  cfg.min_size_h = 0;
  return cfg;
}

const CascadeModel& always_pass() {
  static const CascadeModel m =
      load_synthetic_cascade("window 4 4\nstage -1e9\nstump 0 0 4 4 -1 0 0 2 4 2 split 0 0 0\n");
  return m;
}

// Left half 0, right half 100.
GrayImage split_image() {
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 2; x < 4; ++x) img.at(x, y) = 100;
  return img;
}

CascadeModel two_stage(double second_threshold) {
  return load_synthetic_cascade(
      "window 4 4\n"
      "stage 0.5\n"
      "stump 0 0 4 4 -1 2 0 2 4 2 split 0 -1 1\n"
      "stage " + std::to_string(second_threshold) + "\n"
      "stump 0 0 4 4 -1 0 0 4 2 2 split 0.1 0.2 0.9\n");
}

}  // namespace

TEST_CASE("scan levels by hand enumeration") {
  CascadeModel m;
  m.window_w = m.window_h = 10;
  DetectionConfig cfg = small_config(2.0);
  cfg.min_size_w = cfg.min_size_h = 10;
  const auto levels = scan_scales(m, 45, 45, cfg);
  REQUIRE(levels.size() == 3);
  CHECK(levels[0] == ScanLevel{1.0, 10, 10, 1});
  CHECK(levels[1] == ScanLevel{2.0, 20, 20, 2});
  CHECK(levels[2] == ScanLevel{4.0, 40, 40, 4});
}

TEST_CASE("scan levels for default config match enumeration") {
  CascadeModel m;
  m.window_w = 22;
  m.window_h = 18;
  const DetectionConfig cfg;
  const auto levels = scan_scales(m, 1280, 960, cfg);
  const auto expected = oracle::levels(22, 18, 1280, 960, cfg);
  REQUIRE(levels.size() == expected.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    CHECK(levels[i].window_w == expected[i].w);
    CHECK(levels[i].window_h == expected[i].h);
    CHECK(levels[i].step == expected[i].step);
  }
  CHECK(levels.front().window_w >= 200);
  CHECK(levels.front().window_h >= 200);
  CHECK(levels.front().window_h - 1 < 200 + 2);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    CHECK(levels[i].window_w * levels[i].window_h > levels[i - 1].window_w * levels[i - 1].window_h);
  }
  CHECK(code_of([&] { scan_scales(m, 100, 100, cfg); }) == ErrorCode::ImageTooSmall);
}

TEST_CASE("scan levels respect max size") {
  CascadeModel m;
  m.window_w = m.window_h = 10;
  DetectionConfig cfg = small_config(2.0);
  cfg.max_size_w = 25;
  CHECK(scan_scales(m, 100, 100, cfg).size() == 2);
}

TEST_CASE("norm factor") {
  CHECK(window_norm_factor(IntegralSet(GrayImage(3, 3, std::vector<std::uint8_t>(9, 42))), {0, 0, 3, 3}) == 1.0);
  CHECK(window_norm_factor(IntegralSet(GrayImage(2, 1, {0, 255})), {0, 0, 2, 1}) == 127.5);
  GrayImage checker(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker.at(x, y) = (x + y) % 2 ? 255 : 0;
  CHECK(window_norm_factor(IntegralSet(checker), {0, 0, 4, 4}) == 127.5);
  CHECK(code_of([&] { window_norm_factor(IntegralSet(checker), {1, 1, 4, 4}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("feature values") {
  HaarFeature f{{{{0, 0, 4, 4}, -1.0}, {{0, 0, 4, 2}, 2.0}}, false};
  CHECK(eval_feature(IntegralSet(GrayImage(8, 8)), f, {0, 0, 4, 4}, 1.0) == 0.0);
  CHECK(eval_feature(IntegralSet(GrayImage(8, 8, std::vector<std::uint8_t>(64, 77))), f, {2, 2, 4, 4}, 1.0) == 0.0);
  CHECK(eval_feature(IntegralSet(split_image()), {{{{0, 0, 4, 4}, -1.0}, {{2, 0, 2, 4}, 2.0}}, false}, {0, 0, 4, 4},
                     1.0) == 1.0);

  gen::Rng rng(32);
  const GrayImage img = gen::image(rng, 32, 32);
  const IntegralSet t(img);
  for (int n = 0; n < 50; ++n) {
    const HaarFeature g = gen::feature(rng, 12, 10);
    const Rect win{gen::uniform(rng, 0, 20), gen::uniform(rng, 0, 22), 12, 10};
    const double expected = oracle::response(img, g, win.x, win.y) / (120.0 * oracle::norm(img, win));
    CHECK(eval_feature(t, g, win, 1.0) == expected);
  }
}

TEST_CASE("window evaluation by hand") {
  const IntegralSet t(split_image());
  // Stage 1: response -800 + 2*800 = 800 against 0 * (16 * 50): right leaf 1 >= 0.5.
  // Stage 2: response -800 + 2*400 = 0 against 0.1 * 800 = 80: left leaf 0.2.
  CHECK(eval_window(t, two_stage(0.2), {0, 0, 4, 4}, 1.0));
  CHECK_FALSE(eval_window(t, two_stage(0.3), {0, 0, 4, 4}, 1.0));
  CHECK(eval_window(t, always_pass(), {0, 0, 4, 4}, 1.0));
  CHECK_FALSE(eval_window(t, load_synthetic_cascade("window 4 4\nstage 1e9\nstump 0 0 4 4 -1 0 0 2 4 2 split 0 0 0\n"),
                          {0, 0, 4, 4}, 1.0));
  CascadeModel empty;
  empty.window_w = empty.window_h = 4;
  CHECK(eval_window(t, empty, {0, 0, 4, 4}, 1.0));
  CHECK(code_of([&] { eval_window(t, always_pass(), {1, 0, 4, 4}, 1.0); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("stage tree follows parent and next links") {
  // Stage 0 rejects, its sibling 1 accepts with no children: accept.
  CascadeModel m = load_synthetic_cascade(
      "window 4 4\nstage 1e9\nleaf 0\nstage -1e9\nleaf 0\nstage 1e9\nleaf 0\n");
  m.stages[0].parent = kNoStage;
  m.stages[0].next = 1;
  m.stages[1].parent = kNoStage;
  m.stages[1].next = kNoStage;
  m.stages[2].parent = 1;
  m.stages[2].next = kNoStage;
  const IntegralSet t(GrayImage(4, 4));
  CHECK_FALSE(eval_window(t, m, {0, 0, 4, 4}, 1.0));
  m.stages[2].threshold = -1e9;
  CHECK(eval_window(t, m, {0, 0, 4, 4}, 1.0));
}

TEST_CASE("always-pass single level enumerates every position") {
  DetectionConfig cfg = small_config();
  cfg.max_size_w = 4;
  const auto raw = detect_raw(GrayImage(10, 10), always_pass(), cfg);
  CHECK(raw.size() == 49);
  CHECK(raw.front() == Rect{0, 0, 4, 4});
  CHECK(raw.back() == Rect{6, 6, 4, 4});
  CHECK(raw[1] == Rect{1, 0, 4, 4});
}

TEST_CASE("black image with the upper-body model") {
  const CascadeModel m = load_cascade_file(kModels + "/haarcascade_upperbody.xml");
  DetectionConfig cfg = small_config(1.3);
  const GrayImage black(60, 50);
  CHECK(detect_raw(black, m, cfg) == oracle::detect_raw(black, m, cfg));
  const GrayImage big(1280, 960);
  const DetectionResult r = detect(big, m, DetectionConfig{});
  CHECK(r.detections.empty());
  CHECK_FALSE(r.person_found);
}

TEST_CASE("image smaller than min size") {
  CHECK(code_of([] { detect_raw(GrayImage(100, 100), always_pass(), DetectionConfig{}); }) ==
        ErrorCode::ImageTooSmall);
}

TEST_CASE("detect_raw equals the brute-force oracle") {
  gen::Rng rng(7);
  int with_hits = 0;
  for (int n = 0; n < 40; ++n) {
    const int W = gen::uniform(rng, 3, 12), H = gen::uniform(rng, 3, 12);
    const CascadeModel m = gen::cascade(rng, W, H);
    const GrayImage img = gen::image(rng, gen::uniform(rng, W, 40), gen::uniform(rng, H, 40));
    DetectionConfig cfg = small_config(gen::uniform_real(rng, 1.1, 1.6));
    const auto got = detect_raw(img, m, cfg);
    REQUIRE(got == oracle::detect_raw(img, m, cfg));
    with_hits += !got.empty();
  }
  CHECK(with_hits > 5);
}

TEST_CASE("parallel scanning does not change output") {
  gen::Rng rng(13);
  for (int n = 0; n < 10; ++n) {
    const CascadeModel m = gen::cascade(rng, 6, 6);
    const GrayImage img = gen::image(rng, 48, 40);
    DetectionConfig cfg = small_config(1.1);
    const auto serial = detect(img, m, cfg).detections;
    cfg.threads = 4;
    CHECK(detect(img, m, cfg).detections == serial);
    CHECK(detect_raw(img, m, cfg) == detect_raw(img, m, small_config(1.1)));
  }
}

TEST_CASE("detect results") {
  DetectionConfig cfg = small_config();
  const DetectionResult r = detect(GrayImage(12, 12), always_pass(), cfg);
  CHECK(r.person_found);
  CHECK_FALSE(r.detections.empty());

  // Bright square on black: windows whose centre is brighter than their
  // mean pass, which only happens around the square.
  const CascadeModel centre = load_synthetic_cascade("window 4 4\nstage 0\nstump 0 0 4 4 -1 1 1 2 2 4 split 0.05 -1 1\n");
  GrayImage img(24, 24);
  for (int y = 9; y < 13; ++y)
    for (int x = 9; x < 13; ++x) img.at(x, y) = 220;
  cfg.min_neighbors = 10;
  cfg.max_size_w = 6;
  const DetectionResult one = detect(img, centre, cfg);
  const auto expected = oracle::group(oracle::detect_raw(img, centre, cfg), 10, cfg.group_eps);
  CHECK(one.detections == expected);
  REQUIRE(one.detections.size() == 1);
  CHECK(one.detections[0].neighbors >= 10);
  CHECK(one.person_found);
}

TEST_CASE("detections stay inside the image and above min size") {
  gen::Rng rng(17);
  for (int n = 0; n < 30; ++n) {
    const CascadeModel m = gen::cascade(rng, 5, 7);
    const GrayImage img = gen::image(rng, gen::uniform(rng, 10, 40), gen::uniform(rng, 10, 40));
    DetectionConfig cfg = small_config(1.2);
    cfg.min_size_w = 6;
    cfg.min_size_h = 8;
    cfg.min_neighbors = gen::uniform(rng, 0, 3);
    const DetectionResult r = detect(img, m, cfg);
    CHECK(r.person_found == !r.detections.empty());
    for (const auto& d : r.detections) {
      CHECK(d.rect.w >= 6);
      CHECK(d.rect.h >= 8);
      CHECK(d.rect.x >= 0);
      CHECK(d.rect.y >= 0);
      CHECK(d.rect.x + d.rect.w <= img.width());
      CHECK(d.rect.y + d.rect.h <= img.height());
      CHECK(d.neighbors >= std::max(1, cfg.min_neighbors));
    }
  }
}

TEST_CASE("config validation") {
  DetectionConfig cfg;
  cfg.scale_factor = 1.0;
  CHECK(code_of([&] { validate_config(cfg); }) == ErrorCode::InvalidArgument);
  cfg = {};
  cfg.min_neighbors = -1;
  CHECK(code_of([&] { validate_config(cfg); }) == ErrorCode::InvalidArgument);
  cfg = {};
  cfg.group_eps = -0.1;
  CHECK(code_of([&] { validate_config(cfg); }) == ErrorCode::InvalidArgument);
}
