#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace visensor {

using TimestampMs = std::int64_t;

struct AggregationPolicy {
  int k = 1;
  TimestampMs idle_timeout_ms = 5000;
};

struct FrameEntry {
  TimestampMs arrival_time = 0;
  std::string storage_path;
  std::optional<bool> frame_positive;
};

enum class CloseReason { Idle, Gap, Overflow };

// One motion event of one camera.
struct SequenceBuffer {
  std::string sequence_id;
  std::string camera_id;
  std::vector<FrameEntry> frames;
  TimestampMs opened_at = 0;
  TimestampMs last_arrival = 0;
  std::optional<TimestampMs> closed_at;
  CloseReason close_reason = CloseReason::Idle;
};

struct SensorReading {
  std::string camera_id;
  std::string sequence_id;
  bool value = false;
  int frame_count = 0;
  int positive_frames = 0;
  double detection_percent = 0.0;
  TimestampMs closed_at = 0;

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

// Where a frame lives: <data_root>/<camera_id>/<sequence_id>/<NNNNN>.<ext>,
// NNNNN being the zero-padded arrival index within the sequence.
std::filesystem::path frame_storage_path(const std::filesystem::path& data_root, std::string_view camera_id,
                                         std::string_view sequence_id, int frame_index, std::string_view extension);

struct FrameRef {
  std::string sequence_id;
  int frame_index = 0;
  std::string storage_path;
  TimestampMs arrival_time = 0;
  bool opened_sequence = false;
};

struct SequenceTrackerConfig {
  AggregationPolicy policy;
  std::size_t max_sequence_frames = 1000;
  std::filesystem::path data_root = ".";
};

// Per-camera motion sequences closed by an idle gap.
//
// Two consecutive frames of a camera share a sequence iff their arrival gap
// is below idle_timeout_ms; a gap of exactly the timeout closes. Time is
// clamped to never run backwards across calls, so the rule holds under any
// interleaving of ingest_frame and close_idle.
//
// Sequences closed inside ingest_frame (gap or overflow) are parked and
// handed out by the next close_idle call. Thread-safe.
class SequenceTracker {
 public:
  using IdGenerator = std::function<std::string()>;

  explicit SequenceTracker(SequenceTrackerConfig config, IdGenerator ids = {});

  void register_camera(const std::string& camera_id);
  bool has_camera(const std::string& camera_id) const;

  // Throws UnknownCamera; SequenceOverflow when the open sequence is full
  // (the frame is rejected and the sequence force-closed).
  FrameRef ingest_frame(const std::string& camera_id, std::string_view extension, TimestampMs now);

  // Drops a frame whose payload could not be stored. Only the newest frame of
  // a still-open sequence can be retracted; an emptied sequence is discarded.
  bool retract_frame(const std::string& camera_id, const FrameRef& ref);

  std::vector<SequenceBuffer> close_idle(TimestampMs now);

  std::size_t open_sequence_count() const;
  const SequenceTrackerConfig& config() const noexcept { return config_; }

 private:
  SequenceBuffer open_sequence(const std::string& camera_id, TimestampMs now);
  void park(SequenceBuffer buffer, TimestampMs now, CloseReason reason);

  SequenceTrackerConfig config_;
  IdGenerator ids_;
  mutable std::mutex mu_;
  TimestampMs watermark_ = INT64_MIN;
  std::map<std::string, std::optional<SequenceBuffer>> cameras_;
  std::deque<SequenceBuffer> parked_;
};

// count(true) >= policy.k. Throws EmptySequence on an empty list.
bool classify_sequence(std::span<const bool> frame_positives, const AggregationPolicy& policy);

// Requires a closed buffer with a result for every frame
// (IncompleteClassification otherwise, EmptySequence for no frames).
SensorReading emit_reading(const SequenceBuffer& buffer, const AggregationPolicy& policy);

std::string random_hex_id(std::size_t bytes);

}  // namespace visensor
