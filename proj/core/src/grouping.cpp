#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "visensor/detector.hpp"

namespace visensor {

bool rects_similar(const Rect& a, const Rect& b, double eps) noexcept {
  const double m = (std::min(a.w, b.w) + std::min(a.h, b.h)) * 0.5;
  const double tol = eps * m;
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && std::abs(a.w - b.w) <= tol &&
         std::abs(a.h - b.h) <= tol;
}

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// Half-up rounding of sum / n for non-negative sums.
int mean_half_up(long long sum, long long n) {
  const long long num = 2 * sum + n;
  const long long den = 2 * n;
  return static_cast<int>(num >= 0 ? num / den : -((-num + den - 1) / den));
}

}  // namespace

std::vector<Detection> group_rects(std::span<const Rect> candidates, int min_neighbors, double eps) {
  const std::size_t n = candidates.size();
  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rects_similar(candidates[i], candidates[j], eps)) sets.unite(i, j);
    }
  }

  struct Accum {
    long long x = 0, y = 0, w = 0, h = 0, count = 0;
  };
  std::vector<Accum> acc(n);
  for (std::size_t i = 0; i < n; ++i) {
    Accum& a = acc[sets.find(i)];
    a.x += candidates[i].x;
    a.y += candidates[i].y;
    a.w += candidates[i].w;
    a.h += candidates[i].h;
    ++a.count;
  }

  const long long keep = std::max(1, min_neighbors);
  std::vector<Detection> out;
  for (const Accum& a : acc) {
    if (a.count == 0 || a.count < keep) continue;
    out.push_back({Rect{mean_half_up(a.x, a.count), mean_half_up(a.y, a.count), mean_half_up(a.w, a.count),
                        mean_half_up(a.h, a.count)},
                   static_cast<int>(a.count)});
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.rect.y, a.rect.x, a.rect.w, a.rect.h, a.neighbors) <
           std::tie(b.rect.y, b.rect.x, b.rect.w, b.rect.h, b.neighbors);
  });
  return out;
}

}  // namespace visensor
