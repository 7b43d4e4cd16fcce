#pragma once

// Reference implementations used only by tests. They work from pixel loops
// and the written conventions, never from the library's tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

#include "visensor/cascade.hpp"
#include "visensor/detector.hpp"
#include "visensor/raster.hpp"

namespace oracle {

using visensor::CascadeModel;
using visensor::DetectionConfig;
using visensor::GrayImage;
using visensor::HaarFeature;
using visensor::Rect;

inline std::int64_t sum(const GrayImage& img, const Rect& r) {
  std::int64_t s = 0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) s += img.at(x, y);
  return s;
}

inline std::int64_t sq_sum(const GrayImage& img, const Rect& r) {
  std::int64_t s = 0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) s += std::int64_t{img.at(x, y)} * img.at(x, y);
  return s;
}

// Pixel (x, y) belongs to tilted rect (x0, y0, w, h). Obtained by expanding
// the four table lookups over the triangle definition:
//   x0 + y0 - 2 < x + y <= x0 + y0 + 2w - 2
//   x0 - y0 - 2h <= x - y < x0 - y0
inline bool in_tilted(const Rect& r, int x, int y) {
  const int s = x + y;
  const int d = x - y;
  return r.x + r.y - 2 < s && s <= r.x + r.y + 2 * r.w - 2 && r.x - r.y - 2 * r.h <= d && d < r.x - r.y;
}

inline std::int64_t tilted_sum(const GrayImage& img, const Rect& r) {
  std::int64_t s = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (in_tilted(r, x, y)) s += img.at(x, y);
  return s;
}

// Same quantity straight from the table definition, summed per corner.
inline std::int64_t tilted_table(const GrayImage& img, int X, int Y) {
  std::int64_t s = 0;
  for (int y = 0; y < std::min(Y, img.height()); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (std::abs(x - X + 1) <= Y - y - 1) s += img.at(x, y);
  return s;
}

inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Window sizes by direct enumeration of factor^k.
struct Level {
  double scale;
  int w, h, step;
};

inline std::vector<Level> levels(int base_w, int base_h, int img_w, int img_h, const DetectionConfig& cfg) {
  std::vector<Level> out;
  std::optional<std::pair<int, int>> last;
  for (int k = 0; k < 100000; ++k) {
    const double s = std::pow(cfg.scale_factor, k);
    const int w = round_half_up(base_w * s);
    const int h = round_half_up(base_h * s);
    if (w > img_w || h > img_h) break;
    if (cfg.max_size_w && w > *cfg.max_size_w) break;
    if (cfg.max_size_h && h > *cfg.max_size_h) break;
    if (w < cfg.min_size_w || h < cfg.min_size_h) continue;
    if (last && last->first == w && last->second == h) continue;
    last = std::pair{w, h};
    out.push_back({s, w, h, std::max(1, round_half_up(s))});
  }
  return out;
}

// Scaled rect for one window size: rounding then clamping into the window,
// keeping tilted rects inside their diamond footprint.
inline Rect scale_rect(const Rect& r, bool tilted, double s, int W, int H) {
  Rect o{round_half_up(r.x * s), round_half_up(r.y * s), round_half_up(r.w * s), round_half_up(r.h * s)};
  o.x = std::min(std::max(o.x, 0), W);
  o.y = std::min(std::max(o.y, 0), H);
  if (!tilted) {
    o.w = std::min(std::max(o.w, 0), W - o.x);
    o.h = std::min(std::max(o.h, 0), H - o.y);
    return o;
  }
  o.h = std::min(std::max(o.h, 0), o.x);
  o.w = std::min(std::max(o.w, 0), W - o.x);
  while (o.y + o.w + o.h > H && o.h > 0) --o.h;
  while (o.y + o.w + o.h > H && o.w > 0) --o.w;
  return o;
}

inline HaarFeature scale_feature(const HaarFeature& f, double s, int W, int H) {
  HaarFeature out = f;
  for (auto& wr : out.rects) wr.rect = scale_rect(wr.rect, f.tilted, s, W, H);
  auto area = [](const Rect& r) { return static_cast<long long>(r.w) * r.h; };
  // Rebalance only when the area proportions moved and the base feature
  // sums to zero on a flat image.
  bool moved = false;
  for (std::size_t i = 1; i < f.rects.size(); ++i) {
    moved |= area(out.rects[i].rect) * area(f.rects[0].rect) != area(f.rects[i].rect) * area(out.rects[0].rect);
  }
  if (!moved || area(out.rects[0].rect) == 0) return out;
  double net = 0, mag = 0;
  for (const auto& wr : f.rects) {
    net += wr.weight * static_cast<double>(area(wr.rect));
    mag += std::abs(wr.weight * static_cast<double>(area(wr.rect)));
  }
  if (std::abs(net) > 1e-9 * mag) return out;
  double others = 0;
  for (std::size_t i = 1; i < out.rects.size(); ++i) others += out.rects[i].weight * static_cast<double>(area(out.rects[i].rect));
  out.rects[0].weight = -others / static_cast<double>(area(out.rects[0].rect));
  return out;
}

inline double response(const GrayImage& img, const HaarFeature& scaled, int ox, int oy) {
  double v = 0.0;
  for (const auto& wr : scaled.rects) {
    const Rect p{wr.rect.x + ox, wr.rect.y + oy, wr.rect.w, wr.rect.h};
    v += wr.weight * static_cast<double>(scaled.tilted ? tilted_sum(img, p) : sum(img, p));
  }
  return v;
}

inline double norm(const GrayImage& img, const Rect& win) {
  const double area = static_cast<double>(win.w) * static_cast<double>(win.h);
  const double mean = static_cast<double>(sum(img, win)) / area;
  const double msq = static_cast<double>(sq_sum(img, win)) / area;
  const double var = msq - mean * mean;
  return var > 0.0 ? std::sqrt(var) : 1.0;
}

// Chained cascade with arbitrary trees, evaluated by direct recursion.
inline bool window_passes(const GrayImage& img, const CascadeModel& model, const Rect& win, double s) {
  const double scale_thr = static_cast<double>(win.w) * static_cast<double>(win.h) * norm(img, win);
  for (const auto& stage : model.stages) {
    double total = 0.0;
    for (const auto& tree : stage.trees) {
      if (tree.nodes.empty()) {
        total += tree.leaves[0];
        continue;
      }
      visensor::NodeRef at = visensor::NodeRef::node(0);
      while (at.kind == visensor::NodeRef::Kind::Node) {
        const auto& node = tree.nodes[at.index];
        const HaarFeature f = oracle::scale_feature(node.feature, s, win.w, win.h);
        at = response(img, f, win.x, win.y) < node.split_threshold * scale_thr ? node.left : node.right;
      }
      total += tree.leaves[at.index];
    }
    if (!(total >= stage.threshold)) return false;
  }
  return true;
}

inline std::vector<Rect> detect_raw(const GrayImage& img, const CascadeModel& model, const DetectionConfig& cfg) {
  std::vector<Rect> out;
  for (const Level& lv : levels(model.window_w, model.window_h, img.width(), img.height(), cfg)) {
    for (int y = 0; y + lv.h <= img.height(); y += lv.step)
      for (int x = 0; x + lv.w <= img.width(); x += lv.step)
        if (window_passes(img, model, Rect{x, y, lv.w, lv.h}, lv.scale)) out.push_back({x, y, lv.w, lv.h});
  }
  return out;
}

// Partition by transitive closure of the similarity relation (boolean matrix
// closure), then the class filter and mean.
inline std::vector<visensor::Detection> group(const std::vector<Rect>& rs, int min_neighbors, double eps) {
  const std::size_t n = rs.size();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Rect& a = rs[i];
      const Rect& b = rs[j];
      const double tol = eps * ((std::min(a.w, b.w) + std::min(a.h, b.h)) * 0.5);
      reach[i][j] = std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && std::abs(a.w - b.w) <= tol &&
                    std::abs(a.h - b.h) <= tol;
    }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;

  // floor(total / count + 1/2) with floor division that also holds below zero.
  auto mean = [](long long total, long long count) {
    const long long num = 2 * total + count;
    const long long den = 2 * count;
    return static_cast<int>(num >= 0 ? num / den : -((-num + den - 1) / den));
  };
  std::vector<char> seen(n, 0);
  std::vector<visensor::Detection> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    long long sx = 0, sy = 0, sw = 0, sh = 0, c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!reach[i][j] && i != j) continue;
      seen[j] = 1;
      sx += rs[j].x;
      sy += rs[j].y;
      sw += rs[j].w;
      sh += rs[j].h;
      ++c;
    }
    if (c < std::max(1, min_neighbors)) continue;
    out.push_back({Rect{mean(sx, c), mean(sy, c), mean(sw, c), mean(sh, c)}, static_cast<int>(c)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.rect.y, a.rect.x, a.rect.w, a.rect.h, a.neighbors) <
           std::tie(b.rect.y, b.rect.x, b.rect.w, b.rect.h, b.neighbors);
  });
  return out;
}

}  // namespace oracle
