#include <signal.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include "cli_common.hpp"
#include "visensor/cascade.hpp"
#include "visensor/error.hpp"
#include "visensor/gateway.hpp"
#include "visensor/http_api.hpp"

using namespace visensor;

int main(int argc, char** argv) {
  CLI::App app{"Camera frame gateway: turns motion sequences into person-present readings"};
  std::string data_root = "data";
  std::string listen = "0.0.0.0:8080";
  std::string model_path;
  std::int64_t idle_timeout_ms = 5000;
  int k = 1;
  std::size_t max_sequence_frames = 1000;
  int classify_threads = 1;
  cli::DetectorFlags detector;

  app.add_option("--data-root", data_root, "Frame and reading storage")->envname("VISENSOR_DATA_ROOT")
      ->capture_default_str();
  app.add_option("--listen", listen, "host:port")->envname("VISENSOR_LISTEN")->capture_default_str();
  app.add_option("--model", model_path, "Cascade file")->envname("VISENSOR_MODEL")->required();
  app.add_option("--idle-timeout-ms", idle_timeout_ms, "Gap that ends a sequence")
      ->envname("VISENSOR_IDLE_TIMEOUT_MS")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--k", k, "Positive frames needed for a true reading")->envname("VISENSOR_K")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-sequence-frames", max_sequence_frames, "Frames before a sequence is force-closed")
      ->envname("VISENSOR_MAX_SEQUENCE_FRAMES")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--classify-threads", classify_threads, "Background classifier threads (0 = inline)")
      ->envname("VISENSOR_CLASSIFY_THREADS")->check(CLI::NonNegativeNumber)->capture_default_str();
  detector.add_to(app);
  CLI11_PARSE(app, argc, argv);

  const std::size_t colon = listen.rfind(':');
  if (colon == std::string::npos) {
    spdlog::error("--listen must be host:port");
    return 2;
  }
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    spdlog::error("bad port in --listen '{}'", listen);
    return 2;
  }

  try {
    GatewayConfig config;
    config.data_root = data_root;
    config.policy = {k, idle_timeout_ms};
    config.max_sequence_frames = max_sequence_frames;
    config.detection = detector.config();
    config.classify_threads = classify_threads;

    auto model = std::make_shared<const CascadeModel>(load_cascade_file(model_path));
    const ValidationReport report = validate_cascade(*model);
    if (!report.empty()) {
      for (const auto& issue : report) spdlog::error("{}: {}: {}", model_path, issue.where, issue.message);
      return 1;
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Gateway gateway(config, std::make_shared<FileStore>(config.data_root), model,
                    std::make_shared<HttpWebhookSender>());
    HttpService service(gateway);
    const int bound = service.bind(host, port);
    service.start();
    spdlog::info("listening on {}:{} with model {} ({} stages)", host, bound, model->name, model->stages.size());

    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("signal {}, shutting down", received);
    service.stop();
    gateway.close_idle(gateway.now());
    gateway.flush();
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
