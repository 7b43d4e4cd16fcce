#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "visensor/cascade.hpp"
#include "visensor/detector.hpp"

using namespace visensor;

namespace {

GrayImage noise(int w, int h) {
  gen::Rng rng(5);
  return gen::image(rng, w, h);
}

const CascadeModel& upper_body() {
  static const CascadeModel m = load_cascade_file(std::string(VISENSOR_MODEL_DIR) + "/haarcascade_upperbody.xml");
  return m;
}

void BM_Integrals(benchmark::State& state) {
  const GrayImage img = noise(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(IntegralSet(img));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(img.width()) * img.height());
}
BENCHMARK(BM_Integrals)->Arg(320)->Arg(640)->Arg(1280);

// Default config on a 640x480 frame.
void BM_DetectUpperBody(benchmark::State& state) {
  const GrayImage img = noise(640, 480);
  DetectionConfig cfg;
  cfg.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(detect(img, upper_body(), cfg));
}
BENCHMARK(BM_DetectUpperBody)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_DetectCoarse(benchmark::State& state) {
  const GrayImage img = noise(640, 480);
  DetectionConfig cfg;
  cfg.scale_factor = 1.1;
  cfg.min_size_w = cfg.min_size_h = 40;
  for (auto _ : state) benchmark::DoNotOptimize(detect(img, upper_body(), cfg));
}
BENCHMARK(BM_DetectCoarse)->Unit(benchmark::kMillisecond);

void BM_GroupRects(benchmark::State& state) {
  gen::Rng rng(9);
  std::vector<Rect> rs;
  for (int i = 0; i < state.range(0); ++i) {
    const int s = gen::uniform(rng, 200, 260);
    rs.push_back({gen::uniform(rng, 0, 1000), gen::uniform(rng, 0, 700), s, s});
  }
  for (auto _ : state) benchmark::DoNotOptimize(group_rects(rs, 10, 0.2));
}
BENCHMARK(BM_GroupRects)->Arg(100)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
