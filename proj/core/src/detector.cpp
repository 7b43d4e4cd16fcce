#include "visensor/detector.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>
#include <tuple>

#include "visensor/error.hpp"

namespace visensor {

int round_half_up(double v) noexcept { return static_cast<int>(std::floor(v + 0.5)); }

void validate_config(const DetectionConfig& cfg) {
  if (!(cfg.scale_factor > 1.0) || !std::isfinite(cfg.scale_factor)) {
    throw Error(ErrorCode::InvalidArgument, "scale_factor must be > 1");
  }
  if (cfg.min_neighbors < 0) throw Error(ErrorCode::InvalidArgument, "min_neighbors must be >= 0");
  if (cfg.min_size_w < 0 || cfg.min_size_h < 0) throw Error(ErrorCode::InvalidArgument, "min_size must be >= 0");
  if ((cfg.max_size_w && *cfg.max_size_w < 1) || (cfg.max_size_h && *cfg.max_size_h < 1)) {
    throw Error(ErrorCode::InvalidArgument, "max_size must be >= 1");
  }
  if (!(cfg.group_eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "group_eps must be >= 0");
}

std::vector<ScanLevel> scan_scales(const CascadeModel& model, int img_w, int img_h, const DetectionConfig& cfg) {
  validate_config(cfg);
  if (model.window_w < 1 || model.window_h < 1) throw Error(ErrorCode::InvalidArgument, "model window degenerate");
  if (img_w < cfg.min_size_w || img_h < cfg.min_size_h) {
    throw Error(ErrorCode::ImageTooSmall, "image " + std::to_string(img_w) + "x" + std::to_string(img_h) +
                                              " is smaller than min_size " + std::to_string(cfg.min_size_w) + "x" +
                                              std::to_string(cfg.min_size_h));
  }
  constexpr int kMaxIterations = 1'000'000;
  std::vector<ScanLevel> levels;
  for (int k = 0;; ++k) {
    if (k == kMaxIterations) throw Error(ErrorCode::InvalidArgument, "scale_factor too close to 1");
    const double s = std::pow(cfg.scale_factor, k);
    const int w = round_half_up(model.window_w * s);
    const int h = round_half_up(model.window_h * s);
    if (w > img_w || h > img_h) break;
    if ((cfg.max_size_w && w > *cfg.max_size_w) || (cfg.max_size_h && h > *cfg.max_size_h)) break;
    if (w < cfg.min_size_w || h < cfg.min_size_h) continue;
    if (!levels.empty() && levels.back().window_w == w && levels.back().window_h == h) continue;
    levels.push_back({s, w, h, std::max(1, round_half_up(s))});
  }
  return levels;
}

double window_norm_factor(const IntegralSet& integrals, const Rect& window) {
  if (!rect_fits(window, integrals.width(), integrals.height()) || window.w < 1 || window.h < 1) {
    throw Error(ErrorCode::OutOfBounds, "window " + to_string(window) + " invalid for image");
  }
  const double area = static_cast<double>(window.w) * static_cast<double>(window.h);
  const double mean = static_cast<double>(integrals.sum_unchecked(window)) / area;
  const double mean_sq = static_cast<double>(integrals.sq_sum_unchecked(window)) / area;
  const double variance = mean_sq - mean * mean;
  return variance > 0.0 ? std::sqrt(variance) : 1.0;
}

namespace {

long long rect_area(const Rect& r) { return static_cast<long long>(r.w) * r.h; }

Rect clamp_upright(Rect r, int win_w, int win_h) {
  r.x = std::clamp(r.x, 0, win_w);
  r.y = std::clamp(r.y, 0, win_h);
  r.w = std::clamp(r.w, 0, win_w - r.x);
  r.h = std::clamp(r.h, 0, win_h - r.y);
  return r;
}

Rect clamp_tilted(Rect r, int win_w, int win_h) {
  r.x = std::clamp(r.x, 0, win_w);
  r.y = std::clamp(r.y, 0, win_h);
  r.h = std::clamp(r.h, 0, r.x);
  r.w = std::clamp(r.w, 0, win_w - r.x);
  if (r.y + r.w + r.h > win_h) r.h = std::max(0, win_h - r.y - r.w);
  if (r.y + r.w + r.h > win_h) r.w = std::max(0, win_h - r.y);
  return r;
}

}  // namespace

HaarFeature scale_feature(const HaarFeature& feature, double scale, int window_w, int window_h) {
  HaarFeature out = feature;
  for (auto& wr : out.rects) {
    Rect r{round_half_up(wr.rect.x * scale), round_half_up(wr.rect.y * scale), round_half_up(wr.rect.w * scale),
           round_half_up(wr.rect.h * scale)};
    wr.rect = feature.tilted ? clamp_tilted(r, window_w, window_h) : clamp_upright(r, window_w, window_h);
  }
  if (out.rects.size() < 2) return out;

  // Ratios preserved (always the case at scale 1): weights stay as written.
  const long long base0 = rect_area(feature.rects[0].rect);
  const long long scaled0 = rect_area(out.rects[0].rect);
  bool ratios_kept = true;
  for (std::size_t i = 1; i < out.rects.size(); ++i) {
    ratios_kept = ratios_kept && rect_area(out.rects[i].rect) * base0 == rect_area(feature.rects[i].rect) * scaled0;
  }
  if (ratios_kept || scaled0 == 0) return out;

  double balance = 0.0;
  double magnitude = 0.0;
  for (const auto& wr : feature.rects) {
    balance += wr.weight * static_cast<double>(rect_area(wr.rect));
    magnitude += std::abs(wr.weight * static_cast<double>(rect_area(wr.rect)));
  }
  if (std::abs(balance) > 1e-9 * magnitude) return out;

  double rest = 0.0;
  for (std::size_t i = 1; i < out.rects.size(); ++i) {
    rest += out.rects[i].weight * static_cast<double>(rect_area(out.rects[i].rect));
  }
  out.rects[0].weight = -rest / static_cast<double>(scaled0);
  return out;
}

double feature_response(const IntegralSet& integrals, const HaarFeature& scaled, int origin_x, int origin_y) {
  double value = 0.0;
  for (const auto& [r, weight] : scaled.rects) {
    const Rect placed{r.x + origin_x, r.y + origin_y, r.w, r.h};
    const std::int64_t s = scaled.tilted ? integrals.tilted_sum_unchecked(placed) : integrals.sum_unchecked(placed);
    value += weight * static_cast<double>(s);
  }
  return value;
}

namespace {

void require_window(const IntegralSet& integrals, const Rect& window) {
  if (window.w < 1 || window.h < 1 || !rect_fits(window, integrals.width(), integrals.height())) {
    throw Error(ErrorCode::OutOfBounds, "window " + to_string(window) + " outside " +
                                            std::to_string(integrals.width()) + "x" +
                                            std::to_string(integrals.height()));
  }
}

// Model with every feature pre-scaled for one window size.
struct CompiledModel {
  std::vector<Stage> stages;
  std::vector<int> first_child;
};

CompiledModel compile(const CascadeModel& model, double scale, int win_w, int win_h) {
  CompiledModel c;
  c.stages = model.stages;
  for (Stage& stage : c.stages) {
    for (WeakTree& tree : stage.trees) {
      for (TreeNode& node : tree.nodes) node.feature = scale_feature(node.feature, scale, win_w, win_h);
    }
  }
  const int n = static_cast<int>(c.stages.size());
  c.first_child.assign(static_cast<std::size_t>(n), kNoStage);
  for (int j = n - 1; j >= 0; --j) {
    const int p = c.stages[static_cast<std::size_t>(j)].parent;
    if (p >= 0 && p < n) c.first_child[static_cast<std::size_t>(p)] = j;
  }
  return c;
}

double tree_value(const IntegralSet& integrals, const WeakTree& tree, int ox, int oy, double threshold_scale) {
  if (tree.nodes.empty()) return tree.leaves.front();
  int idx = 0;
  for (;;) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    const double response = feature_response(integrals, node.feature, ox, oy);
    const NodeRef& next = response < node.split_threshold * threshold_scale ? node.left : node.right;
    if (next.kind == NodeRef::Kind::Leaf) return tree.leaves[static_cast<std::size_t>(next.index)];
    idx = next.index;
  }
}

bool run_compiled(const IntegralSet& integrals, const CompiledModel& model, const Rect& window) {
  if (model.stages.empty()) return true;
  const double area = static_cast<double>(window.w) * static_cast<double>(window.h);
  const double threshold_scale = area * window_norm_factor(integrals, window);
  int current = 0;
  while (current != kNoStage) {
    const Stage& stage = model.stages[static_cast<std::size_t>(current)];
    double sum = 0.0;
    for (const WeakTree& tree : stage.trees) sum += tree_value(integrals, tree, window.x, window.y, threshold_scale);
    if (sum >= stage.threshold) {
      current = model.first_child[static_cast<std::size_t>(current)];
      if (current == kNoStage) return true;
    } else {
      while (current != kNoStage && model.stages[static_cast<std::size_t>(current)].next == kNoStage) {
        current = model.stages[static_cast<std::size_t>(current)].parent;
      }
      if (current == kNoStage) return false;
      current = model.stages[static_cast<std::size_t>(current)].next;
    }
  }
  return false;
}

std::vector<Rect> scan_level(const IntegralSet& integrals, const CascadeModel& model, const ScanLevel& level) {
  std::vector<Rect> hits;
  const CompiledModel compiled = compile(model, level.scale, level.window_w, level.window_h);
  for (int y = 0; y + level.window_h <= integrals.height(); y += level.step) {
    for (int x = 0; x + level.window_w <= integrals.width(); x += level.step) {
      const Rect window{x, y, level.window_w, level.window_h};
      if (run_compiled(integrals, compiled, window)) hits.push_back(window);
    }
  }
  return hits;
}

}  // namespace

double eval_feature(const IntegralSet& integrals, const HaarFeature& feature, const Rect& window, double scale) {
  require_window(integrals, window);
  const HaarFeature scaled = scale_feature(feature, scale, window.w, window.h);
  const double area = static_cast<double>(window.w) * static_cast<double>(window.h);
  return feature_response(integrals, scaled, window.x, window.y) / (area * window_norm_factor(integrals, window));
}

bool eval_window(const IntegralSet& integrals, const CascadeModel& model, const Rect& window, double scale) {
  require_window(integrals, window);
  return run_compiled(integrals, compile(model, scale, window.w, window.h), window);
}

std::vector<Rect> detect_raw(const GrayImage& img, const CascadeModel& model, const DetectionConfig& cfg) {
  const std::vector<ScanLevel> levels = scan_scales(model, img.width(), img.height(), cfg);
  if (levels.empty()) return {};
  const IntegralSet integrals(img);

  std::vector<std::vector<Rect>> per_level(levels.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, cfg.threads)), levels.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < levels.size(); ++i) per_level[i] = scan_level(integrals, model, levels[i]);
  } else {
    // Static interleaved partition; results land in their level's slot.
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < levels.size(); i += workers) per_level[i] = scan_level(integrals, model, levels[i]);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  std::vector<Rect> out;
  for (auto& hits : per_level) out.insert(out.end(), hits.begin(), hits.end());
  return out;
}

DetectionResult detect(const GrayImage& img, const CascadeModel& model, const DetectionConfig& cfg) {
  const std::vector<Rect> raw = detect_raw(img, model, cfg);
  DetectionResult result;
  result.detections = group_rects(raw, cfg.min_neighbors, cfg.group_eps);
  for (Detection& d : result.detections) {
    d.rect.w = std::min(d.rect.w, img.width());
    d.rect.h = std::min(d.rect.h, img.height());
    d.rect.x = std::clamp(d.rect.x, 0, img.width() - d.rect.w);
    d.rect.y = std::clamp(d.rect.y, 0, img.height() - d.rect.h);
  }
  std::sort(result.detections.begin(), result.detections.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.rect.y, a.rect.x, a.rect.w, a.rect.h, a.neighbors) <
           std::tie(b.rect.y, b.rect.x, b.rect.w, b.rect.h, b.neighbors);
  });
  result.person_found = !result.detections.empty();
  return result;
}

}  // namespace visensor
