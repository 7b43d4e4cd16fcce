#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace visensor {

struct HttpUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

// Absolute http:// URL with optional port and path. TLS targets are not
// supported.
std::optional<HttpUrl> parse_http_url(std::string_view url);

struct PostResult {
  int status = 0;  // 0 when the request never got a response
  std::string error;

  bool ok() const noexcept { return status >= 200 && status < 300; }
};

class WebhookSender {
 public:
  virtual ~WebhookSender() = default;
  virtual PostResult post_json(const std::string& url, const std::string& body) = 0;
};

class HttpWebhookSender final : public WebhookSender {
 public:
  explicit HttpWebhookSender(std::chrono::milliseconds timeout = std::chrono::seconds(5)) : timeout_(timeout) {}
  PostResult post_json(const std::string& url, const std::string& body) override;

 private:
  std::chrono::milliseconds timeout_;
};

struct RetryPolicy {
  std::chrono::milliseconds base_backoff{200};
  std::chrono::milliseconds max_backoff{10'000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

// Delay before retry number `retry` (1-based): base * 2^(retry-1), capped.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry);

}  // namespace visensor
