#pragma once

#include <json.hpp>

#include "visensor/gateway_types.hpp"

namespace visensor {

inline nlohmann::json reading_to_json(const SensorReading& r) {
  return {{"camera_id", r.camera_id},         {"sequence_id", r.sequence_id},
          {"value", r.value},                 {"frame_count", r.frame_count},
          {"positive_frames", r.positive_frames}, {"detection_percent", r.detection_percent},
          {"closed_at", r.closed_at}};
}

inline SensorReading reading_from_json(const nlohmann::json& j) {
  SensorReading r;
  r.camera_id = j.at("camera_id").get<std::string>();
  r.sequence_id = j.at("sequence_id").get<std::string>();
  r.value = j.at("value").get<bool>();
  r.frame_count = j.at("frame_count").get<int>();
  r.positive_frames = j.at("positive_frames").get<int>();
  r.detection_percent = j.at("detection_percent").get<double>();
  r.closed_at = j.at("closed_at").get<TimestampMs>();
  return r;
}

inline nlohmann::json camera_to_json(const CameraRecord& c) {
  return {{"camera_id", c.camera_id}, {"token", c.token}, {"label", c.label}, {"registered_at", c.registered_at}};
}

inline CameraRecord camera_from_json(const nlohmann::json& j) {
  return {j.at("camera_id").get<std::string>(), j.at("token").get<std::string>(), j.at("label").get<std::string>(),
          j.at("registered_at").get<TimestampMs>()};
}

inline nlohmann::json subscription_to_json(const ActionSubscription& s) {
  return {{"subscription_id", s.subscription_id},
          {"camera_id", s.camera_id},
          {"trigger", std::string(to_string(s.trigger))},
          {"target_url", s.target_url},
          {"retries", s.retries}};
}

inline ActionSubscription subscription_from_json(const nlohmann::json& j) {
  return {j.at("subscription_id").get<std::string>(), j.at("camera_id").get<std::string>(),
          parse_trigger(j.at("trigger").get<std::string>()), j.at("target_url").get<std::string>(),
          j.at("retries").get<int>()};
}

inline nlohmann::json delivery_to_json(const DeliveryAttempt& d) {
  return {{"subscription_id", d.subscription_id},
          {"sequence_id", d.sequence_id},
          {"target_url", d.target_url},
          {"attempt", d.attempt},
          {"delivered", d.delivered},
          {"http_status", d.http_status},
          {"error", d.error}};
}

}  // namespace visensor
