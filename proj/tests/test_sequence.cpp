#include <doctest.h>

#include <atomic>
#include <map>
#include <set>
#include <thread>

#include "generators.hpp"
#include "visensor/error.hpp"
#include "visensor/sequence.hpp"

using namespace visensor;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

SequenceTracker::IdGenerator counter_ids() {
  auto n = std::make_shared<std::atomic<int>>(0);
  return [n] { return "s" + std::to_string((*n)++); };
}

SequenceTracker tracker(std::size_t max_frames = 1000) {
  SequenceTrackerConfig cfg;
  cfg.max_sequence_frames = max_frames;
  cfg.data_root = "/data";
  return SequenceTracker(cfg, counter_ids());
}

SequenceBuffer closed_with(int frames, int positives) {
  SequenceBuffer b;
  b.sequence_id = "x";
  b.camera_id = "cam";
  b.closed_at = 1;
  for (int i = 0; i < frames; ++i) b.frames.push_back({i, "", i < positives});
  return b;
}

}  // namespace

TEST_CASE("storage path layout") {
  CHECK(frame_storage_path("/data", "cam", "s0", 7, "pgm") == std::filesystem::path("/data/cam/s0/00007.pgm"));
}

TEST_CASE("frames within the timeout share a sequence") {
  SequenceTrackerConfig cfg;
  cfg.data_root = "/data";
  SequenceTracker t(cfg, counter_ids());
  t.register_camera("A");
  const FrameRef a = t.ingest_frame("A", "jpg", 10'000);
  CHECK(a.opened_sequence);
  CHECK(a.frame_index == 0);
  CHECK(a.storage_path == "/data/A/s0/00000.jpg");
  const FrameRef b = t.ingest_frame("A", "jpg", 11'000);
  CHECK_FALSE(b.opened_sequence);
  CHECK(b.sequence_id == a.sequence_id);
  CHECK(b.frame_index == 1);

  const FrameRef c = t.ingest_frame("A", "jpg", 17'000);
  CHECK(c.opened_sequence);
  CHECK(c.sequence_id != a.sequence_id);
  const auto closed = t.close_idle(17'000);
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].sequence_id == a.sequence_id);
  CHECK(closed[0].frames.size() == 2);
  CHECK(closed[0].close_reason == CloseReason::Gap);
  CHECK(closed[0].last_arrival == 11'000);
  CHECK(t.open_sequence_count() == 1);
  CHECK(code_of([&] { t.ingest_frame("B", "jpg", 0); }) == ErrorCode::UnknownCamera);
}

TEST_CASE("idle boundary is inclusive") {
  auto t = tracker();
  CHECK(t.close_idle(0).empty());
  t.register_camera("A");
  t.ingest_frame("A", "pgm", 1000);
  CHECK(t.close_idle(5999).empty());
  const auto closed = t.close_idle(6000);
  REQUIRE(closed.size() == 1);
  CHECK(*closed[0].closed_at == 6000);
  CHECK(closed[0].close_reason == CloseReason::Idle);
}

TEST_CASE("two cameras close independently") {
  auto t = tracker();
  t.register_camera("A");
  t.register_camera("B");
  t.ingest_frame("A", "pgm", 0);
  t.ingest_frame("B", "pgm", 5000);
  const auto closed = t.close_idle(6000);
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].camera_id == "A");
  CHECK(t.open_sequence_count() == 1);
}

TEST_CASE("overflow force-closes and rejects the frame") {
  auto t = tracker(3);
  t.register_camera("A");
  for (int i = 0; i < 3; ++i) t.ingest_frame("A", "pgm", i);
  CHECK(code_of([&] { t.ingest_frame("A", "pgm", 3); }) == ErrorCode::SequenceOverflow);
  const auto closed = t.close_idle(4);
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].frames.size() == 3);
  CHECK(closed[0].close_reason == CloseReason::Overflow);
  CHECK(t.ingest_frame("A", "pgm", 5).opened_sequence);
}

TEST_CASE("retract only the newest frame") {
  auto t = tracker();
  t.register_camera("A");
  const FrameRef a = t.ingest_frame("A", "pgm", 0);
  const FrameRef b = t.ingest_frame("A", "pgm", 10);
  CHECK_FALSE(t.retract_frame("A", a));
  CHECK(t.retract_frame("A", b));
  CHECK(t.retract_frame("A", a));
  CHECK(t.open_sequence_count() == 0);
  CHECK_FALSE(t.retract_frame("A", a));
  CHECK_FALSE(t.retract_frame("nobody", a));
}

TEST_CASE("time never runs backwards") {
  auto t = tracker();
  t.register_camera("A");
  t.ingest_frame("A", "pgm", 10'000);
  const FrameRef late = t.ingest_frame("A", "pgm", 2'000);
  CHECK(late.arrival_time == 10'000);
  CHECK(t.close_idle(0).empty());
}

TEST_CASE("classification examples") {
  std::unique_ptr<bool[]> flags(new bool[78]());
  for (int i = 0; i < 5; ++i) flags[i * 10] = true;
  CHECK(classify_sequence({flags.get(), 78}, {1, 5000}));
  CHECK_FALSE(classify_sequence({flags.get(), 78}, {6, 5000}));

  const bool none[4] = {false, false, false, false};
  for (int k = 1; k <= 5; ++k) CHECK_FALSE(classify_sequence(none, {k, 5000}));
  const bool two[4] = {true, false, true, false};
  CHECK_FALSE(classify_sequence(two, {3, 5000}));
  CHECK(code_of([] { classify_sequence({}, {}); }) == ErrorCode::EmptySequence);
}

TEST_CASE("reading examples") {
  const SensorReading c2 = emit_reading(closed_with(229, 5), {1, 5000});
  CHECK(c2.detection_percent == 2.18);
  CHECK(c2.value);
  CHECK(c2.frame_count == 229);
  CHECK(c2.positive_frames == 5);
  CHECK(emit_reading(closed_with(54, 19), {1, 5000}).detection_percent == 35.19);
  const SensorReading c = emit_reading(closed_with(12, 0), {1, 5000});
  CHECK(c.detection_percent == 0.0);
  CHECK_FALSE(c.value);

  SequenceBuffer open = closed_with(2, 1);
  open.closed_at.reset();
  CHECK(code_of([&] { emit_reading(open, {}); }) == ErrorCode::InvalidArgument);
  SequenceBuffer partial = closed_with(2, 1);
  partial.frames[1].frame_positive.reset();
  CHECK(code_of([&] { emit_reading(partial, {}); }) == ErrorCode::IncompleteClassification);
  CHECK(code_of([&] { emit_reading(closed_with(0, 0), {}); }) == ErrorCode::EmptySequence);
}

TEST_CASE("k = 1 is a logical OR and value is monotone in k") {
  gen::Rng rng(41);
  for (int n = 0; n < 500; ++n) {
    const int len = gen::uniform(rng, 1, 30);
    std::unique_ptr<bool[]> f(new bool[len]);
    bool any = false;
    const double p = gen::uniform_real(rng, 0.0, 0.3);
    for (int i = 0; i < len; ++i) any |= f[i] = gen::coin(rng, p);
    const std::span<const bool> s(f.get(), len);
    REQUIRE(classify_sequence(s, {1, 5000}) == any);
    bool prev = true;
    for (int k = 1; k <= len + 1; ++k) {
      const bool v = classify_sequence(s, {k, 5000});
      REQUIRE((prev || !v));
      prev = v;
    }
  }
}

namespace {

// Checks every frame landed in one sequence and that a camera's sequences
// are separated by at least the timeout while their inner gaps are shorter.
void check_partition(const std::vector<SequenceBuffer>& seqs, std::size_t frames_sent, TimestampMs timeout) {
  std::size_t total = 0;
  std::set<std::string> ids;
  std::set<std::string> paths;
  std::map<std::string, std::vector<const SequenceBuffer*>> by_camera;
  for (const auto& s : seqs) {
    REQUIRE(ids.insert(s.sequence_id).second);
    REQUIRE_FALSE(s.frames.empty());
    total += s.frames.size();
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      REQUIRE(paths.insert(s.frames[i].storage_path).second);
      if (i) REQUIRE(s.frames[i].arrival_time - s.frames[i - 1].arrival_time < timeout);
    }
    REQUIRE(s.last_arrival == s.frames.back().arrival_time);
    by_camera[s.camera_id].push_back(&s);
  }
  REQUIRE(total == frames_sent);
  for (auto& [cam, list] : by_camera) {
    std::sort(list.begin(), list.end(),
              [](auto* a, auto* b) { return a->frames.front().arrival_time < b->frames.front().arrival_time; });
    for (std::size_t i = 1; i < list.size(); ++i)
      REQUIRE(list[i]->frames.front().arrival_time - list[i - 1]->last_arrival >= timeout);
  }
}

}  // namespace

TEST_CASE("random schedules partition frames into sequences") {
  gen::Rng rng(42);
  for (int run = 0; run < 100; ++run) {
    auto t = tracker();
    const int cams = gen::uniform(rng, 1, 4);
    for (int c = 0; c < cams; ++c) t.register_camera("c" + std::to_string(c));
    std::vector<SequenceBuffer> seqs;
    TimestampMs now = 0;
    std::size_t sent = 0;
    for (int step = 0; step < 200; ++step) {
      now += gen::coin(rng, 0.1) ? gen::uniform(rng, 4000, 8000) : gen::uniform(rng, 0, 1500);
      if (gen::coin(rng, 0.2)) {
        for (auto& s : t.close_idle(now)) seqs.push_back(std::move(s));
      } else {
        t.ingest_frame("c" + std::to_string(gen::uniform(rng, 0, cams - 1)), "pgm", now);
        ++sent;
      }
    }
    for (auto& s : t.close_idle(now + 5000)) seqs.push_back(std::move(s));
    CHECK(t.open_sequence_count() == 0);
    check_partition(seqs, sent, 5000);
  }
}

TEST_CASE("concurrent ingest and sweeping keep the partition") {
  auto t = tracker();
  for (int c = 0; c < 4; ++c) t.register_camera("c" + std::to_string(c));
  std::atomic<TimestampMs> clock{0};
  std::atomic<bool> done{false};
  std::mutex mu;
  std::vector<SequenceBuffer> seqs;
  std::thread sweeper([&] {
    while (!done) {
      auto closed = t.close_idle(clock.load());
      std::lock_guard lock(mu);
      for (auto& s : closed) seqs.push_back(std::move(s));
    }
  });
  std::vector<std::thread> workers;
  constexpr int kPerThread = 500;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      gen::Rng rng(100 + w);
      for (int i = 0; i < kPerThread; ++i) {
        const TimestampMs now = clock.fetch_add(gen::coin(rng, 0.02) ? 6000 : gen::uniform(rng, 0, 50));
        t.ingest_frame("c" + std::to_string(gen::uniform(rng, 0, 3)), "pgm", now);
      }
    });
  }
  for (auto& w : workers) w.join();
  done = true;
  sweeper.join();
  for (auto& s : t.close_idle(clock.load() + 5000)) seqs.push_back(std::move(s));
  check_partition(seqs, 4 * kPerThread, 5000);
}

TEST_CASE("invalid tracker config") {
  SequenceTrackerConfig cfg;
  cfg.policy.k = 0;
  CHECK(code_of([&] { SequenceTracker t(cfg); }) == ErrorCode::InvalidArgument);
  cfg = {};
  cfg.policy.idle_timeout_ms = 0;
  CHECK(code_of([&] { SequenceTracker t(cfg); }) == ErrorCode::InvalidArgument);
}
