#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "visensor/gateway_types.hpp"

namespace visensor {

// Persistence used by the gateway. Implementations throw
// Error(StorageFailure) when a write cannot be made durable.
class Store {
 public:
  virtual ~Store() = default;

  virtual std::vector<CameraRecord> load_cameras() = 0;
  virtual void save_camera(const CameraRecord& camera) = 0;

  // Chronological (append) order.
  virtual std::vector<SensorReading> load_readings() = 0;
  virtual void append_reading(const SensorReading& reading) = 0;

  virtual std::vector<ActionSubscription> load_subscriptions() = 0;
  virtual void save_subscription(const ActionSubscription& subscription) = 0;

  virtual void append_delivery(const DeliveryAttempt& attempt) = 0;

  virtual void write_frame(const std::string& path, std::span<const std::uint8_t> bytes) = 0;
};

// Files under data_root:
//   cameras.json         registry document, replaced atomically on change
//   subscriptions.json   same, for action subscriptions
//   readings.jsonl       append-only reading log, one JSON object per line
//   deliveries.jsonl     append-only webhook outcome log
// Frames are written to the paths the sequence tracker hands out.
class FileStore final : public Store {
 public:
  explicit FileStore(std::filesystem::path data_root);

  std::vector<CameraRecord> load_cameras() override;
  void save_camera(const CameraRecord& camera) override;
  std::vector<SensorReading> load_readings() override;
  void append_reading(const SensorReading& reading) override;
  std::vector<ActionSubscription> load_subscriptions() override;
  void save_subscription(const ActionSubscription& subscription) override;
  void append_delivery(const DeliveryAttempt& attempt) override;
  void write_frame(const std::string& path, std::span<const std::uint8_t> bytes) override;

  const std::filesystem::path& data_root() const noexcept { return root_; }

 private:
  void append_line(const std::filesystem::path& file, const std::string& line);
  void replace_document(const std::filesystem::path& file, const std::string& content);

  std::filesystem::path root_;
  std::mutex mu_;
  std::vector<CameraRecord> cameras_;
  std::vector<ActionSubscription> subscriptions_;
};

class MemoryStore final : public Store {
 public:
  std::vector<CameraRecord> load_cameras() override;
  void save_camera(const CameraRecord& camera) override;
  std::vector<SensorReading> load_readings() override;
  void append_reading(const SensorReading& reading) override;
  std::vector<ActionSubscription> load_subscriptions() override;
  void save_subscription(const ActionSubscription& subscription) override;
  void append_delivery(const DeliveryAttempt& attempt) override;
  void write_frame(const std::string& path, std::span<const std::uint8_t> bytes) override;

  std::vector<DeliveryAttempt> deliveries() const;
  std::map<std::string, std::vector<std::uint8_t>> frames() const;
  // When set, every write throws StorageFailure.
  void set_fail_writes(bool fail);

 private:
  void check_writable() const;

  mutable std::mutex mu_;
  bool fail_writes_ = false;
  std::vector<CameraRecord> cameras_;
  std::vector<SensorReading> readings_;
  std::vector<ActionSubscription> subscriptions_;
  std::vector<DeliveryAttempt> deliveries_;
  std::map<std::string, std::vector<std::uint8_t>> frames_;
};

}  // namespace visensor
