#include "visensor/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "json_codec.hpp"
#include "visensor/error.hpp"

namespace visensor {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void storage_failure(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::StorageFailure, what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::span<const std::uint8_t> bytes, const fs::path& path) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      storage_failure("write", path);
    }
    done += static_cast<std::size_t>(n);
  }
}

void sync_and_close(int fd, const fs::path& path) {
  if (::fsync(fd) != 0) {
    ::close(fd);
    storage_failure("fsync", path);
  }
  if (::close(fd) != 0) storage_failure("close", path);
}

void sync_directory(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
}

// Durable create-or-replace via a temp file and rename.
void write_durable(const fs::path& path, std::span<const std::uint8_t> bytes, mode_t mode) {
  ensure_directory(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, mode);
  if (fd < 0) storage_failure("open", tmp);
  write_all(fd, bytes, tmp);
  sync_and_close(fd, tmp);
  if (::rename(tmp.c_str(), path.c_str()) != 0) storage_failure("rename", path);
  sync_directory(path.parent_path());
}

std::vector<json> read_json_lines(const fs::path& file) {
  std::vector<json> out;
  std::ifstream in(file);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception&) {
      // A torn final line from a crash mid-append is skipped.
      continue;
    }
  }
  return out;
}

json read_document(const fs::path& file, const char* key) {
  std::ifstream in(file);
  if (!in) return json::array();
  try {
    json doc = json::parse(in);
    return doc.at(key);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StorageFailure, "corrupt " + file.string() + ": " + e.what());
  }
}

}  // namespace

FileStore::FileStore(fs::path data_root) : root_(std::move(data_root)) {
  ensure_directory(root_);
  for (const json& j : read_document(root_ / "cameras.json", "cameras")) cameras_.push_back(camera_from_json(j));
  for (const json& j : read_document(root_ / "subscriptions.json", "subscriptions")) {
    subscriptions_.push_back(subscription_from_json(j));
  }
}

std::vector<CameraRecord> FileStore::load_cameras() {
  std::lock_guard lock(mu_);
  return cameras_;
}

void FileStore::save_camera(const CameraRecord& camera) {
  std::lock_guard lock(mu_);
  auto next = cameras_;
  auto it = std::find_if(next.begin(), next.end(), [&](const auto& c) { return c.camera_id == camera.camera_id; });
  if (it != next.end()) {
    *it = camera;
  } else {
    next.push_back(camera);
  }
  json doc = {{"cameras", json::array()}};
  for (const auto& c : next) doc["cameras"].push_back(camera_to_json(c));
  replace_document(root_ / "cameras.json", doc.dump(2) + "\n");
  cameras_ = std::move(next);
}

std::vector<SensorReading> FileStore::load_readings() {
  std::lock_guard lock(mu_);
  std::vector<SensorReading> out;
  for (const json& j : read_json_lines(root_ / "readings.jsonl")) out.push_back(reading_from_json(j));
  return out;
}

void FileStore::append_reading(const SensorReading& reading) {
  std::lock_guard lock(mu_);
  append_line(root_ / "readings.jsonl", reading_to_json(reading).dump());
}

std::vector<ActionSubscription> FileStore::load_subscriptions() {
  std::lock_guard lock(mu_);
  return subscriptions_;
}

void FileStore::save_subscription(const ActionSubscription& subscription) {
  std::lock_guard lock(mu_);
  auto next = subscriptions_;
  next.push_back(subscription);
  json doc = {{"subscriptions", json::array()}};
  for (const auto& s : next) doc["subscriptions"].push_back(subscription_to_json(s));
  replace_document(root_ / "subscriptions.json", doc.dump(2) + "\n");
  subscriptions_ = std::move(next);
}

void FileStore::append_delivery(const DeliveryAttempt& attempt) {
  std::lock_guard lock(mu_);
  append_line(root_ / "deliveries.jsonl", delivery_to_json(attempt).dump());
}

void FileStore::write_frame(const std::string& path, std::span<const std::uint8_t> bytes) {
  write_durable(path, bytes, 0644);
}

void FileStore::append_line(const fs::path& file, const std::string& line) {
  const int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd < 0) storage_failure("open", file);
  const std::string data = line + "\n";
  write_all(fd, std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()), file);
  sync_and_close(fd, file);
}

void FileStore::replace_document(const fs::path& file, const std::string& content) {
  write_durable(file, std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()), 0600);
}

std::vector<CameraRecord> MemoryStore::load_cameras() {
  std::lock_guard lock(mu_);
  return cameras_;
}

void MemoryStore::save_camera(const CameraRecord& camera) {
  std::lock_guard lock(mu_);
  check_writable();
  cameras_.push_back(camera);
}

std::vector<SensorReading> MemoryStore::load_readings() {
  std::lock_guard lock(mu_);
  return readings_;
}

void MemoryStore::append_reading(const SensorReading& reading) {
  std::lock_guard lock(mu_);
  check_writable();
  readings_.push_back(reading);
}

std::vector<ActionSubscription> MemoryStore::load_subscriptions() {
  std::lock_guard lock(mu_);
  return subscriptions_;
}

void MemoryStore::save_subscription(const ActionSubscription& subscription) {
  std::lock_guard lock(mu_);
  check_writable();
  subscriptions_.push_back(subscription);
}

void MemoryStore::append_delivery(const DeliveryAttempt& attempt) {
  std::lock_guard lock(mu_);
  check_writable();
  deliveries_.push_back(attempt);
}

void MemoryStore::write_frame(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mu_);
  check_writable();
  frames_[path].assign(bytes.begin(), bytes.end());
}

std::vector<DeliveryAttempt> MemoryStore::deliveries() const {
  std::lock_guard lock(mu_);
  return deliveries_;
}

std::map<std::string, std::vector<std::uint8_t>> MemoryStore::frames() const {
  std::lock_guard lock(mu_);
  return frames_;
}

void MemoryStore::set_fail_writes(bool fail) {
  std::lock_guard lock(mu_);
  fail_writes_ = fail;
}

void MemoryStore::check_writable() const {
  if (fail_writes_) throw Error(ErrorCode::StorageFailure, "store is failing writes");
}

}  // namespace visensor
