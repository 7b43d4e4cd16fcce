#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

#include "visensor/error.hpp"
#include "visensor/gateway.hpp"

namespace visensor {

// Routes:
//   POST /api/cameras                      {"label"} -> 201 {camera_id, token}
//   POST /api/cameras/{id}/frames          bearer token, raw image body
//                                          -> 201 {sequence_id, frame_index}
//                                          xml messages -> 202
//   GET  /api/cameras/{id}/state           latest reading and newest page
//   POST /api/cameras/{id}/subscriptions   bearer token,
//                                          {trigger, target_url, retries}
//   GET  /api/cameras/{id}/readings?page=P&page_size=N   newest first, P from 0
// Errors come back as {"error": code, "message": text}.
struct HttpServiceOptions {
  std::chrono::milliseconds sweep_interval{250};
  std::size_t max_body_bytes = 32u << 20;
};

int http_status(ErrorCode code) noexcept;

// HTTP front end plus the sweeper thread that closes idle sequences.
class HttpService {
 public:
  explicit HttpService(Gateway& gateway, HttpServiceOptions options = {});
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves on a background thread.
  void start();
  // Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace visensor
