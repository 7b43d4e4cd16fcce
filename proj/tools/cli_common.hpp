#pragma once

#include <CLI11.hpp>

#include <charconv>
#include <optional>
#include <string>

#include "visensor/detector.hpp"

namespace visensor::cli {

// "W", "WxH" or "W,H".
inline std::optional<std::pair<int, int>> parse_size(const std::string& text) {
  const std::size_t sep = text.find_first_of("x,X");
  auto parse_int = [](std::string_view s) -> std::optional<int> {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v <= 0) return std::nullopt;
    return v;
  };
  const std::string_view all(text);
  const auto w = parse_int(all.substr(0, sep));
  if (!w) return std::nullopt;
  if (sep == std::string::npos) return std::pair{*w, *w};
  const auto h = parse_int(all.substr(sep + 1));
  if (!h) return std::nullopt;
  return std::pair{*w, *h};
}

struct DetectorFlags {
  double scale_factor = 1.01;
  int min_neighbors = 10;
  std::string min_size = "200x200";
  std::string max_size;
  double group_eps = 0.2;
  int threads = 1;

  void add_to(CLI::App& app) {
    app.add_option("--scale-factor", scale_factor, "Pyramid scale step")->envname("VISENSOR_SCALE_FACTOR")
        ->capture_default_str();
    app.add_option("--min-neighbors", min_neighbors, "Minimum group size")->envname("VISENSOR_MIN_NEIGHBORS")
        ->capture_default_str();
    app.add_option("--min-size", min_size, "Smallest window, WxH")->envname("VISENSOR_MIN_SIZE")
        ->capture_default_str();
    app.add_option("--max-size", max_size, "Largest window, WxH")->envname("VISENSOR_MAX_SIZE");
    app.add_option("--group-eps", group_eps, "Grouping tolerance")->envname("VISENSOR_GROUP_EPS")
        ->capture_default_str();
    app.add_option("--detect-threads", threads, "Threads per detection")->envname("VISENSOR_DETECT_THREADS")
        ->capture_default_str();
  }

  DetectionConfig config() const {
    DetectionConfig cfg;
    cfg.scale_factor = scale_factor;
    cfg.min_neighbors = min_neighbors;
    cfg.group_eps = group_eps;
    cfg.threads = threads;
    const auto min = parse_size(min_size);
    if (!min) throw CLI::ValidationError("--min-size", "expected WxH, got '" + min_size + "'");
    cfg.min_size_w = min->first;
    cfg.min_size_h = min->second;
    if (!max_size.empty()) {
      const auto max = parse_size(max_size);
      if (!max) throw CLI::ValidationError("--max-size", "expected WxH, got '" + max_size + "'");
      cfg.max_size_w = max->first;
      cfg.max_size_h = max->second;
    }
    validate_config(cfg);
    return cfg;
  }
};

}  // namespace visensor::cli
