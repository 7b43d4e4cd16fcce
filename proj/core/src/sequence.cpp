#include "visensor/sequence.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <random>

#include "visensor/error.hpp"
#include "visensor/percent.hpp"

namespace visensor {

std::string random_hex_id(std::size_t bytes) {
  thread_local std::random_device device;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes * 2);
  unsigned int pool = 0;
  int left = 0;
  for (std::size_t i = 0; i < bytes; ++i) {
    if (left == 0) {
      pool = device();
      left = 4;
    }
    const unsigned byte = pool & 0xFFu;
    pool >>= 8;
    --left;
    out.push_back(kHex[byte >> 4]);
    out.push_back(kHex[byte & 0xF]);
  }
  return out;
}

std::filesystem::path frame_storage_path(const std::filesystem::path& data_root, std::string_view camera_id,
                                         std::string_view sequence_id, int frame_index, std::string_view extension) {
  char name[32];
  std::snprintf(name, sizeof name, "%05d", frame_index);
  return data_root / std::string(camera_id) / std::string(sequence_id) /
         (std::string(name) + "." + std::string(extension));
}

SequenceTracker::SequenceTracker(SequenceTrackerConfig config, IdGenerator ids)
    : config_(std::move(config)), ids_(std::move(ids)) {
  if (config_.policy.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (config_.policy.idle_timeout_ms < 1) throw Error(ErrorCode::InvalidArgument, "idle timeout must be positive");
  if (config_.max_sequence_frames < 1) throw Error(ErrorCode::InvalidArgument, "max_sequence_frames must be >= 1");
  if (!ids_) ids_ = [] { return random_hex_id(8); };
}

void SequenceTracker::register_camera(const std::string& camera_id) {
  std::lock_guard lock(mu_);
  cameras_.try_emplace(camera_id);
}

bool SequenceTracker::has_camera(const std::string& camera_id) const {
  std::lock_guard lock(mu_);
  return cameras_.contains(camera_id);
}

SequenceBuffer SequenceTracker::open_sequence(const std::string& camera_id, TimestampMs now) {
  SequenceBuffer b;
  b.sequence_id = ids_();
  b.camera_id = camera_id;
  b.opened_at = now;
  b.last_arrival = now;
  return b;
}

void SequenceTracker::park(SequenceBuffer buffer, TimestampMs now, CloseReason reason) {
  buffer.closed_at = now;
  buffer.close_reason = reason;
  parked_.push_back(std::move(buffer));
}

FrameRef SequenceTracker::ingest_frame(const std::string& camera_id, std::string_view extension, TimestampMs now) {
  std::lock_guard lock(mu_);
  auto it = cameras_.find(camera_id);
  if (it == cameras_.end()) throw Error(ErrorCode::UnknownCamera, "camera '" + camera_id + "' is not registered");
  watermark_ = std::max(watermark_, now);
  now = watermark_;

  std::optional<SequenceBuffer>& open = it->second;
  if (open && now - open->last_arrival >= config_.policy.idle_timeout_ms) {
    park(std::move(*open), now, CloseReason::Gap);
    open.reset();
  }
  if (open && open->frames.size() >= config_.max_sequence_frames) {
    const std::string id = open->sequence_id;
    park(std::move(*open), now, CloseReason::Overflow);
    open.reset();
    throw Error(ErrorCode::SequenceOverflow,
                "sequence " + id + " reached " + std::to_string(config_.max_sequence_frames) + " frames");
  }

  FrameRef ref;
  if (!open) {
    open = open_sequence(camera_id, now);
    ref.opened_sequence = true;
  }
  ref.sequence_id = open->sequence_id;
  ref.frame_index = static_cast<int>(open->frames.size());
  ref.storage_path = frame_storage_path(config_.data_root, camera_id, ref.sequence_id, ref.frame_index, extension)
                         .string();
  ref.arrival_time = now;
  open->frames.push_back({now, ref.storage_path, std::nullopt});
  open->last_arrival = now;
  return ref;
}

bool SequenceTracker::retract_frame(const std::string& camera_id, const FrameRef& ref) {
  std::lock_guard lock(mu_);
  auto it = cameras_.find(camera_id);
  if (it == cameras_.end() || !it->second) return false;
  SequenceBuffer& open = *it->second;
  if (open.sequence_id != ref.sequence_id || open.frames.empty() ||
      static_cast<int>(open.frames.size()) != ref.frame_index + 1) {
    return false;
  }
  open.frames.pop_back();
  if (open.frames.empty()) {
    it->second.reset();
  } else {
    open.last_arrival = open.frames.back().arrival_time;
  }
  return true;
}

std::vector<SequenceBuffer> SequenceTracker::close_idle(TimestampMs now) {
  std::lock_guard lock(mu_);
  watermark_ = std::max(watermark_, now);
  now = watermark_;
  std::vector<SequenceBuffer> closed(std::make_move_iterator(parked_.begin()), std::make_move_iterator(parked_.end()));
  parked_.clear();
  for (auto& [camera, open] : cameras_) {
    if (open && now - open->last_arrival >= config_.policy.idle_timeout_ms) {
      open->closed_at = now;
      open->close_reason = CloseReason::Idle;
      closed.push_back(std::move(*open));
      open.reset();
    }
  }
  return closed;
}

std::size_t SequenceTracker::open_sequence_count() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(cameras_.begin(), cameras_.end(), [](const auto& entry) { return entry.second.has_value(); }));
}

bool classify_sequence(std::span<const bool> frame_positives, const AggregationPolicy& policy) {
  if (frame_positives.empty()) throw Error(ErrorCode::EmptySequence, "cannot classify a sequence without frames");
  const auto positives = std::count(frame_positives.begin(), frame_positives.end(), true);
  return positives >= policy.k;
}

SensorReading emit_reading(const SequenceBuffer& buffer, const AggregationPolicy& policy) {
  if (!buffer.closed_at) throw Error(ErrorCode::InvalidArgument, "sequence " + buffer.sequence_id + " is still open");
  if (buffer.frames.empty()) throw Error(ErrorCode::EmptySequence, "sequence " + buffer.sequence_id + " has no frames");
  const std::size_t n = buffer.frames.size();
  std::unique_ptr<bool[]> flags(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = buffer.frames[i].frame_positive;
    if (!r) {
      throw Error(ErrorCode::IncompleteClassification,
                  "sequence " + buffer.sequence_id + " frame " + std::to_string(i) + " has no result");
    }
    flags[i] = *r;
  }
  const std::span<const bool> results(flags.get(), n);

  SensorReading reading;
  reading.camera_id = buffer.camera_id;
  reading.sequence_id = buffer.sequence_id;
  reading.frame_count = static_cast<int>(n);
  reading.positive_frames = static_cast<int>(std::count(results.begin(), results.end(), true));
  reading.value = classify_sequence(results, policy);
  reading.detection_percent = percent_value(reading.positive_frames, reading.frame_count);
  reading.closed_at = *buffer.closed_at;
  return reading;
}

}  // namespace visensor
