#pragma once

#include <optional>
#include <span>
#include <vector>

#include "visensor/cascade.hpp"
#include "visensor/raster.hpp"

namespace visensor {

struct DetectionConfig {
  double scale_factor = 1.01;
  int min_neighbors = 10;
  int min_size_w = 200;
  int min_size_h = 200;
  std::optional<int> max_size_w;
  std::optional<int> max_size_h;
  double group_eps = 0.2;
  // Worker threads for scanning scale levels; output order never depends on it.
  int threads = 1;
};

// Throws InvalidArgument when a field is out of range.
void validate_config(const DetectionConfig& cfg);

struct ScanLevel {
  double scale = 1.0;
  int window_w = 0;
  int window_h = 0;
  int step = 1;

  friend bool operator==(const ScanLevel&, const ScanLevel&) = default;
};

struct Detection {
  Rect rect;
  int neighbors = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionResult {
  std::vector<Detection> detections;
  bool person_found = false;
};

// floor(v + 0.5)
int round_half_up(double v) noexcept;

// Window sizes scanned for an image. Level k uses scale factor^k, window
// (round(base_w * s), round(base_h * s)) and step max(1, round(s)). Levels
// below min_size are skipped, repeated sizes are dropped, and the list ends
// once a window no longer fits the image or max_size.
// Throws ImageTooSmall when the image is smaller than min_size.
std::vector<ScanLevel> scan_scales(const CascadeModel& model, int img_w, int img_h, const DetectionConfig& cfg);

// Standard deviation of the pixels in window, or 1 for a flat window.
double window_norm_factor(const IntegralSet& integrals, const Rect& window);

// Scaling convention shared by every evaluation path.
//
// Each rect coordinate is multiplied by the scale and rounded half-up, then
// clamped so the rect stays inside the scaled window. When rounding changes
// the area ratios between rects of a feature whose weighted areas balance at
// base scale, the first rect's weight is recomputed so they balance again.
HaarFeature scale_feature(const HaarFeature& feature, double scale, int window_w, int window_h);

// Raw response: sum over rects of weight * pixel sum (tilted sums for tilted
// features), with rects offset by the window origin. Accumulated in rect order.
double feature_response(const IntegralSet& integrals, const HaarFeature& scaled, int origin_x, int origin_y);

// Normalised response: feature_response of the scaled feature divided by
// (window area * window_norm_factor).
//
// Tree descent compares without dividing: go left iff
//   feature_response < split_threshold * (window area * norm factor).
double eval_feature(const IntegralSet& integrals, const HaarFeature& feature, const Rect& window, double scale);

// True iff the window passes the cascade (a zero-stage model passes).
// Throws OutOfBounds when the window leaves the image.
bool eval_window(const IntegralSet& integrals, const CascadeModel& model, const Rect& window, double scale);

// Every accepted window over all scan levels, scale-ascending then row-major.
std::vector<Rect> detect_raw(const GrayImage& img, const CascadeModel& model, const DetectionConfig& cfg);

// Similarity: |dx|, |dy|, |dw|, |dh| all <= eps * m with
// m = (min(w1, w2) + min(h1, h2)) / 2. Classes are the transitive closure.
bool rects_similar(const Rect& a, const Rect& b, double eps) noexcept;

// One Detection per class with at least max(1, min_neighbors) members, its
// rect the member mean rounded half-up; sorted by (y, x, w, h, neighbors).
std::vector<Detection> group_rects(std::span<const Rect> candidates, int min_neighbors, double eps);

// group_rects(detect_raw(...)) with each rect shifted back inside the image
// if rounding pushed it over an edge.
DetectionResult detect(const GrayImage& img, const CascadeModel& model, const DetectionConfig& cfg);

}  // namespace visensor
