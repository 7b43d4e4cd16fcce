#include "visensor/gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <thread>

#include "json_codec.hpp"
#include "visensor/error.hpp"

namespace visensor {

std::string_view to_string(Trigger t) noexcept {
  switch (t) {
    case Trigger::OnTrue: return "on_true";
    case Trigger::OnFalse: return "on_false";
    case Trigger::OnChange: return "on_change";
  }
  return "on_true";
}

Trigger parse_trigger(std::string_view text) {
  if (text == "on_true") return Trigger::OnTrue;
  if (text == "on_false") return Trigger::OnFalse;
  if (text == "on_change") return Trigger::OnChange;
  throw Error(ErrorCode::InvalidArgument, "unknown trigger '" + std::string(text) + "'");
}

bool trigger_matches(Trigger trigger, bool value, std::optional<bool> previous) noexcept {
  switch (trigger) {
    case Trigger::OnTrue: return value;
    case Trigger::OnFalse: return !value;
    case Trigger::OnChange: return !previous || *previous != value;
  }
  return false;
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_xml_type(std::string_view declared) {
  std::string type = lowercase(declared.substr(0, declared.find(';')));
  while (!type.empty() && std::isspace(static_cast<unsigned char>(type.back()))) type.pop_back();
  const auto first = type.find_first_not_of(" \t");
  if (first == std::string::npos) return false;
  type.erase(0, first);
  return type == "application/xml" || type == "text/xml" || (type.size() > 4 && type.ends_with("+xml"));
}

bool tokens_equal(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size() || b.empty()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

TimestampMs system_now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

MediaKind sniff_mime(std::optional<std::string_view> declared_type, std::span<const std::uint8_t> payload) noexcept {
  const auto prefix = payload.first(std::min<std::size_t>(payload.size(), 8));
  const MediaKind kind = sniff_image_kind(prefix);
  if (kind != MediaKind::Unknown) return kind;
  if (!prefix.empty() && prefix[0] == '<' && declared_type && is_xml_type(*declared_type)) return MediaKind::XmlMessage;
  return MediaKind::Unknown;
}

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Store> store, std::shared_ptr<const CascadeModel> model,
                 std::shared_ptr<WebhookSender> sender, Clock clock)
    : config_(std::move(config)),
      store_(std::move(store)),
      model_(std::move(model)),
      sender_(std::move(sender)),
      clock_(clock ? std::move(clock) : Clock(system_now)),
      tracker_({config_.policy, config_.max_sequence_frames, config_.data_root}, [] { return random_hex_id(8); }) {
  if (!store_ || !model_ || !sender_) throw Error(ErrorCode::InvalidArgument, "gateway needs a store, model and sender");
  if (config_.policy.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (config_.policy.idle_timeout_ms < 1) throw Error(ErrorCode::InvalidArgument, "idle timeout must be positive");
  if (config_.classify_threads < 0) throw Error(ErrorCode::InvalidArgument, "classify_threads must be >= 0");
  validate_config(config_.detection);

  for (auto& camera : store_->load_cameras()) {
    tracker_.register_camera(camera.camera_id);
    camera_locks_.emplace(camera.camera_id, std::make_unique<std::mutex>());
    cameras_.emplace(camera.camera_id, std::move(camera));
  }
  subscriptions_ = store_->load_subscriptions();
  for (auto& reading : store_->load_readings()) {
    if (!recorded_sequences_.insert(reading.sequence_id).second) continue;
    history_[reading.camera_id].push_back(std::move(reading));
  }

  if (config_.classify_threads > 0) classifier_ = std::make_unique<WorkQueue>(config_.classify_threads);
  if (config_.async_delivery) delivery_ = std::make_unique<WorkQueue>(1);
}

Gateway::~Gateway() {
  classifier_.reset();
  delivery_.reset();
}

CameraRecord Gateway::register_camera(const std::string& label) {
  CameraRecord record;
  record.label = label;
  record.token = random_hex_id(16);
  record.registered_at = clock_();
  std::lock_guard lock(mu_);
  do {
    record.camera_id = random_hex_id(8);
  } while (cameras_.contains(record.camera_id));
  store_->save_camera(record);
  tracker_.register_camera(record.camera_id);
  camera_locks_.emplace(record.camera_id, std::make_unique<std::mutex>());
  cameras_.emplace(record.camera_id, record);
  spdlog::info("registered camera {} ({})", record.camera_id, label);
  return record;
}

bool Gateway::has_camera(const std::string& camera_id) const {
  std::lock_guard lock(mu_);
  return cameras_.contains(camera_id);
}

void Gateway::authenticate(const std::string& camera_id, const std::string& token) const {
  std::lock_guard lock(mu_);
  auto it = cameras_.find(camera_id);
  if (it == cameras_.end()) throw Error(ErrorCode::UnknownCamera, "unknown camera " + camera_id);
  if (!tokens_equal(token, it->second.token)) throw Error(ErrorCode::Unauthorized, "bad token for camera " + camera_id);
}

std::mutex& Gateway::camera_lock(const std::string& camera_id) {
  std::lock_guard lock(mu_);
  return *camera_locks_.at(camera_id);
}

ActionSubscription Gateway::add_subscription(const std::string& camera_id, const std::string& token, Trigger trigger,
                                             const std::string& target_url, int retries) {
  authenticate(camera_id, token);
  if (!parse_http_url(target_url)) throw Error(ErrorCode::InvalidArgument, "target_url must be an absolute http:// URL");
  if (retries < 0 || retries > 20) throw Error(ErrorCode::InvalidArgument, "retries must be within 0..20");
  ActionSubscription sub{random_hex_id(8), camera_id, trigger, target_url, retries};
  std::lock_guard lock(mu_);
  store_->save_subscription(sub);
  subscriptions_.push_back(sub);
  return sub;
}

std::vector<ActionSubscription> Gateway::subscriptions(const std::string& camera_id) const {
  std::lock_guard lock(mu_);
  std::vector<ActionSubscription> out;
  for (const auto& s : subscriptions_) {
    if (s.camera_id == camera_id) out.push_back(s);
  }
  return out;
}

IngestOutcome Gateway::ingest(const std::string& camera_id, const std::string& token,
                              std::optional<std::string_view> declared_type, std::span<const std::uint8_t> payload,
                              TimestampMs now) {
  authenticate(camera_id, token);
  IngestOutcome outcome;
  outcome.kind = sniff_mime(declared_type, payload);
  if (outcome.kind == MediaKind::XmlMessage) {
    std::lock_guard lock(mu_);
    ++xml_messages_;
    return outcome;
  }
  if (outcome.kind == MediaKind::Unknown) throw Error(ErrorCode::UnsupportedMedia, "unrecognised payload");

  GrayImage image = decode_image(payload, outcome.kind);

  std::lock_guard camera_guard(camera_lock(camera_id));
  const FrameRef ref = tracker_.ingest_frame(camera_id, file_extension(outcome.kind), now);
  try {
    store_->write_frame(ref.storage_path, payload);
  } catch (const Error&) {
    tracker_.retract_frame(camera_id, ref);
    throw;
  }

  auto task = std::make_shared<std::packaged_task<bool()>>(
      [model = model_, cfg = config_.detection, img = std::move(image), path = ref.storage_path]() {
        try {
          return detect(img, *model, cfg).person_found;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ImageTooSmall) spdlog::warn("classifying {} failed: {}", path, e.what());
          return false;
        }
      });
  std::shared_future<bool> verdict = task->get_future().share();
  {
    std::lock_guard lock(mu_);
    auto& slots = verdicts_[ref.sequence_id];
    if (slots.size() <= static_cast<std::size_t>(ref.frame_index)) slots.resize(ref.frame_index + 1);
    slots[ref.frame_index] = verdict;
  }
  if (classifier_) {
    classifier_->submit([task] { (*task)(); });
  } else {
    (*task)();
  }

  outcome.sequence_id = ref.sequence_id;
  outcome.frame_index = ref.frame_index;
  return outcome;
}

std::vector<SensorReading> Gateway::close_idle(TimestampMs now) {
  std::lock_guard finalize(finalize_mu_);
  std::vector<SequenceBuffer> closed = tracker_.close_idle(now);
  std::vector<SensorReading> stored;
  for (auto& buffer : closed) {
    std::vector<std::shared_future<bool>> slots;
    {
      std::lock_guard lock(mu_);
      auto it = verdicts_.find(buffer.sequence_id);
      if (it != verdicts_.end()) {
        slots = std::move(it->second);
        verdicts_.erase(it);
      }
    }
    for (std::size_t i = 0; i < buffer.frames.size() && i < slots.size(); ++i) {
      if (slots[i].valid()) buffer.frames[i].frame_positive = slots[i].get();
    }

    SensorReading reading;
    try {
      reading = emit_reading(buffer, config_.policy);
      record_reading(reading);
    } catch (const Error& e) {
      spdlog::error("dropping reading for sequence {}: {}", buffer.sequence_id, e.what());
      continue;
    }
    spdlog::info("camera {} sequence {} -> {} ({}/{} frames)", reading.camera_id, reading.sequence_id, reading.value,
                 reading.positive_frames, reading.frame_count);
    stored.push_back(reading);

    auto subs = subscriptions(reading.camera_id);
    if (subs.empty()) continue;
    if (delivery_) {
      delivery_->submit([this, reading, subs = std::move(subs)] { fire_actions(reading, subs); });
    } else {
      fire_actions(reading, subs);
    }
  }
  return stored;
}

void Gateway::record_reading(const SensorReading& reading) {
  std::lock_guard lock(mu_);
  if (recorded_sequences_.contains(reading.sequence_id)) {
    throw Error(ErrorCode::DuplicateReading, "sequence " + reading.sequence_id + " already has a reading");
  }
  store_->append_reading(reading);
  recorded_sequences_.insert(reading.sequence_id);
  history_[reading.camera_id].push_back(reading);
}

std::optional<bool> Gateway::previous_value(const SensorReading& reading) const {
  std::lock_guard lock(mu_);
  auto it = history_.find(reading.camera_id);
  if (it == history_.end() || it->second.empty()) return std::nullopt;
  const auto& readings = it->second;
  auto self = std::find_if(readings.begin(), readings.end(),
                           [&](const SensorReading& r) { return r.sequence_id == reading.sequence_id; });
  if (self == readings.end()) return readings.back().value;
  if (self == readings.begin()) return std::nullopt;
  return std::prev(self)->value;
}

std::vector<DeliveryAttempt> Gateway::fire_actions(const SensorReading& reading,
                                                   const std::vector<ActionSubscription>& subscriptions) {
  const std::optional<bool> previous = previous_value(reading);
  const std::string body = reading_to_json(reading).dump();
  std::vector<DeliveryAttempt> attempts;
  for (const auto& sub : subscriptions) {
    if (sub.camera_id != reading.camera_id || !trigger_matches(sub.trigger, reading.value, previous)) continue;
    for (int attempt = 1; attempt <= sub.retries + 1; ++attempt) {
      if (attempt > 1) {
        const auto delay = backoff_delay(config_.retry, attempt - 1);
        if (config_.retry.sleep) {
          config_.retry.sleep(delay);
        } else {
          std::this_thread::sleep_for(delay);
        }
      }
      const PostResult result = sender_->post_json(sub.target_url, body);
      DeliveryAttempt record{sub.subscription_id, reading.sequence_id, sub.target_url, attempt, result.ok(),
                             result.status,       result.error};
      try {
        store_->append_delivery(record);
      } catch (const Error& e) {
        spdlog::error("cannot record delivery for {}: {}", sub.subscription_id, e.what());
      }
      if (!record.delivered) {
        spdlog::warn("webhook {} attempt {} failed: {}", sub.target_url, attempt, record.error);
      }
      attempts.push_back(std::move(record));
      if (attempts.back().delivered) break;
    }
  }
  return attempts;
}

CameraState Gateway::query_state(const std::string& camera_id, std::size_t offset, std::size_t limit) const {
  std::lock_guard lock(mu_);
  if (!cameras_.contains(camera_id)) throw Error(ErrorCode::UnknownCamera, "unknown camera " + camera_id);
  auto it = history_.find(camera_id);
  if (it == history_.end() || it->second.empty()) {
    throw Error(ErrorCode::NoReadingsYet, "camera " + camera_id + " has no readings yet");
  }
  const auto& readings = it->second;
  CameraState state;
  state.latest = readings.back();
  state.total = readings.size();
  for (std::size_t i = offset; i < readings.size() && state.page.size() < limit; ++i) {
    state.page.push_back(readings[readings.size() - 1 - i]);
  }
  return state;
}

void Gateway::flush() {
  if (classifier_) classifier_->wait_idle();
  if (delivery_) delivery_->wait_idle();
}

std::size_t Gateway::xml_messages() const {
  std::lock_guard lock(mu_);
  return xml_messages_;
}

}  // namespace visensor
