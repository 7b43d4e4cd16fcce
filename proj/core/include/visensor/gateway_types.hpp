#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "visensor/sequence.hpp"

namespace visensor {

struct CameraRecord {
  std::string camera_id;
  std::string token;
  std::string label;
  TimestampMs registered_at = 0;

  friend bool operator==(const CameraRecord&, const CameraRecord&) = default;
};

enum class Trigger { OnTrue, OnFalse, OnChange };

std::string_view to_string(Trigger t) noexcept;
// Accepts "on_true", "on_false", "on_change"; throws InvalidArgument otherwise.
Trigger parse_trigger(std::string_view text);

struct ActionSubscription {
  std::string subscription_id;
  std::string camera_id;
  Trigger trigger = Trigger::OnTrue;
  std::string target_url;
  int retries = 0;

  friend bool operator==(const ActionSubscription&, const ActionSubscription&) = default;
};

// on_true: value true; on_false: value false; on_change: value differs from
// the previous reading, and the first reading of a camera always counts.
bool trigger_matches(Trigger trigger, bool value, std::optional<bool> previous) noexcept;

struct DeliveryAttempt {
  std::string subscription_id;
  std::string sequence_id;
  std::string target_url;
  int attempt = 1;  // 1-based; retries follow the first attempt
  bool delivered = false;
  int http_status = 0;  // 0 when no response was received
  std::string error;
};

}  // namespace visensor
