#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visensor/cascade.hpp"
#include "visensor/codec.hpp"
#include "visensor/detector.hpp"
#include "visensor/gateway_types.hpp"
#include "visensor/sequence.hpp"
#include "visensor/store.hpp"
#include "visensor/webhook.hpp"
#include "visensor/work_queue.hpp"

namespace visensor {

// Magic bytes win over the declared type. Only the first 8 payload bytes
// are consulted. A payload starting with '<' is an XML message when the
// declared type is application/xml, text/xml or any +xml type.
MediaKind sniff_mime(std::optional<std::string_view> declared_type, std::span<const std::uint8_t> payload) noexcept;

struct GatewayConfig {
  std::filesystem::path data_root = "data";
  AggregationPolicy policy;
  std::size_t max_sequence_frames = 1000;
  DetectionConfig detection;
  // 0 classifies inside ingest before acknowledging.
  int classify_threads = 1;
  // Deliver webhooks on a background worker; false delivers inside close_idle.
  bool async_delivery = true;
  RetryPolicy retry;
};

struct IngestOutcome {
  MediaKind kind = MediaKind::Unknown;
  std::string sequence_id;  // empty for xml messages
  int frame_index = -1;
};

struct CameraState {
  SensorReading latest;
  std::vector<SensorReading> page;  // newest first
  std::size_t total = 0;
};

class Gateway {
 public:
  using Clock = std::function<TimestampMs()>;

  Gateway(GatewayConfig config, std::shared_ptr<Store> store, std::shared_ptr<const CascadeModel> model,
          std::shared_ptr<WebhookSender> sender, Clock clock = {});
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  CameraRecord register_camera(const std::string& label);
  bool has_camera(const std::string& camera_id) const;

  // Throws UnknownCamera, Unauthorized, InvalidArgument (bad url or retries).
  ActionSubscription add_subscription(const std::string& camera_id, const std::string& token, Trigger trigger,
                                      const std::string& target_url, int retries);
  std::vector<ActionSubscription> subscriptions(const std::string& camera_id) const;

  // Throws UnknownCamera, Unauthorized, UnsupportedMedia, CorruptImage,
  // SequenceOverflow, StorageFailure. Nothing is kept when it throws.
  IngestOutcome ingest(const std::string& camera_id, const std::string& token,
                       std::optional<std::string_view> declared_type, std::span<const std::uint8_t> payload,
                       TimestampMs now);

  // Finalizes every sequence idle at `now`: waits for its frame verdicts,
  // stores the reading and queues the matching webhooks. Returns the
  // readings stored by this call.
  std::vector<SensorReading> close_idle(TimestampMs now);

  // Throws DuplicateReading when the sequence already has a reading.
  void record_reading(const SensorReading& reading);

  // Runs synchronously, retries included. `previous` for on_change is the
  // camera's reading before this one.
  std::vector<DeliveryAttempt> fire_actions(const SensorReading& reading,
                                            const std::vector<ActionSubscription>& subscriptions);

  // Throws UnknownCamera, NoReadingsYet.
  CameraState query_state(const std::string& camera_id, std::size_t offset = 0, std::size_t limit = 20) const;

  // Blocks until queued classifications and webhook deliveries are done.
  void flush();

  std::size_t xml_messages() const;
  TimestampMs now() const { return clock_(); }
  const GatewayConfig& config() const noexcept { return config_; }

 private:
  void authenticate(const std::string& camera_id, const std::string& token) const;
  std::mutex& camera_lock(const std::string& camera_id);
  std::optional<bool> previous_value(const SensorReading& reading) const;

  GatewayConfig config_;
  std::shared_ptr<Store> store_;
  std::shared_ptr<const CascadeModel> model_;
  std::shared_ptr<WebhookSender> sender_;
  Clock clock_;
  SequenceTracker tracker_;

  mutable std::mutex mu_;
  std::map<std::string, CameraRecord> cameras_;
  std::map<std::string, std::unique_ptr<std::mutex>> camera_locks_;
  std::vector<ActionSubscription> subscriptions_;
  std::map<std::string, std::vector<SensorReading>> history_;  // chronological
  std::set<std::string> recorded_sequences_;
  std::map<std::string, std::vector<std::shared_future<bool>>> verdicts_;
  std::size_t xml_messages_ = 0;

  std::mutex finalize_mu_;
  std::unique_ptr<WorkQueue> classifier_;
  std::unique_ptr<WorkQueue> delivery_;
};

}  // namespace visensor
