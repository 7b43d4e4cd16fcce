#include "visensor/http_api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <condition_variable>
#include <thread>

#include "json_codec.hpp"

namespace visensor {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::UnknownCamera:
    case ErrorCode::NoReadingsYet: return 404;
    case ErrorCode::UnsupportedMedia: return 415;
    case ErrorCode::CorruptImage: return 422;
    case ErrorCode::SequenceOverflow:
    case ErrorCode::DuplicateReading: return 409;
    case ErrorCode::InvalidArgument: return 400;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), {{"error", std::string(to_string(code))}, {"message", message}});
}

std::string bearer_token(const httplib::Request& req) {
  const std::string header = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (header.size() <= kPrefix.size() || header.compare(0, kPrefix.size(), kPrefix) != 0) return {};
  return header.substr(kPrefix.size());
}

std::size_t query_number(const httplib::Request& req, const char* key, std::size_t fallback, std::size_t max) {
  if (!req.has_param(key)) return fallback;
  const std::string text = req.get_param_value(key);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value > max) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad query parameter ") + key);
  }
  return value;
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json body = json::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
    return body;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
  }
}

json readings_json(const std::vector<SensorReading>& readings) {
  json out = json::array();
  for (const auto& r : readings) out.push_back(reading_to_json(r));
  return out;
}

}  // namespace

struct HttpService::Impl {
  Impl(Gateway& g, HttpServiceOptions o) : gateway(g), options(o) {}

  Gateway& gateway;
  HttpServiceOptions options;
  httplib::Server server;
  std::thread server_thread;
  std::thread sweeper;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::InvalidArgument, e.what());
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        send_error(res, ErrorCode::StorageFailure, "internal error");
      }
    };
  }

  void install_routes() {
    server.set_payload_max_length(options.max_body_bytes);

    server.Post("/api/cameras", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const std::string label = body.value("label", std::string());
      const CameraRecord record = gateway.register_camera(label);
      send_json(res, 201, {{"camera_id", record.camera_id}, {"token", record.token}, {"label", record.label}});
    }));

    server.Post(R"(/api/cameras/([^/]+)/frames)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  std::optional<std::string> declared;
                  if (req.has_header("Content-Type")) declared = req.get_header_value("Content-Type");
                  const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
                  const IngestOutcome outcome =
                      gateway.ingest(req.matches[1], bearer_token(req),
                                     declared ? std::optional<std::string_view>(*declared) : std::nullopt,
                                     std::span(data, req.body.size()), gateway.now());
                  if (outcome.kind == MediaKind::XmlMessage) {
                    send_json(res, 202, {{"kind", "xml_message"}, {"status", "accepted"}});
                    return;
                  }
                  send_json(res, 201,
                            {{"kind", std::string(to_string(outcome.kind))},
                             {"sequence_id", outcome.sequence_id},
                             {"frame_index", outcome.frame_index}});
                }));

    server.Get(R"(/api/cameras/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::size_t limit = query_number(req, "page_size", 20, 1000);
      const CameraState state = gateway.query_state(req.matches[1], 0, limit);
      send_json(res, 200,
                {{"camera_id", std::string(req.matches[1])},
                 {"latest", reading_to_json(state.latest)},
                 {"history", readings_json(state.page)},
                 {"total", state.total}});
    }));

    server.Get(R"(/api/cameras/([^/]+)/readings)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::size_t page = query_number(req, "page", 0, 1u << 20);
                 const std::size_t size = query_number(req, "page_size", 20, 1000);
                 if (size == 0) throw Error(ErrorCode::InvalidArgument, "page_size must be positive");
                 const CameraState state = gateway.query_state(req.matches[1], page * size, size);
                 send_json(res, 200,
                           {{"camera_id", std::string(req.matches[1])},
                            {"page", page},
                            {"page_size", size},
                            {"total", state.total},
                            {"readings", readings_json(state.page)}});
               }));

    server.Post(R"(/api/cameras/([^/]+)/subscriptions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const ActionSubscription sub = gateway.add_subscription(
                      req.matches[1], bearer_token(req), parse_trigger(body.at("trigger").get<std::string>()),
                      body.at("target_url").get<std::string>(), body.value("retries", 0));
                  send_json(res, 201, subscription_to_json(sub));
                }));
  }

  void sweep_loop() {
    std::unique_lock lock(mu);
    while (!stopping) {
      cv.wait_for(lock, options.sweep_interval, [this] { return stopping; });
      if (stopping) break;
      lock.unlock();
      try {
        gateway.close_idle(gateway.now());
      } catch (const std::exception& e) {
        spdlog::error("sweeper: {}", e.what());
      }
      lock.lock();
    }
  }

  void start_sweeper() {
    if (!sweeper.joinable()) sweeper = std::thread([this] { sweep_loop(); });
  }
};

HttpService::HttpService(Gateway& gateway, HttpServiceOptions options)
    : impl_(std::make_unique<Impl>(gateway, options)) {
  impl_->install_routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw Error(ErrorCode::InvalidArgument, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::start() {
  impl_->start_sweeper();
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpService::run() {
  impl_->start_sweeper();
  impl_->server.listen_after_bind();
}

void HttpService::stop() {
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopping = true;
  }
  impl_->cv.notify_all();
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  if (impl_->sweeper.joinable()) impl_->sweeper.join();
}

}  // namespace visensor
