#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "visensor/raster.hpp"

namespace visensor {

struct WeightedRect {
  Rect rect;
  double weight = 0.0;

  friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

// Haar-like feature: weighted sum of 2-3 rectangle sums relative to the base window.
struct HaarFeature {
  std::vector<WeightedRect> rects;
  bool tilted = false;

  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

// Reference to a tree child: an internal node or a leaf slot.
struct NodeRef {
  enum class Kind { Node, Leaf };
  Kind kind = Kind::Leaf;
  int index = 0;

  static NodeRef node(int i) { return {Kind::Node, i}; }
  static NodeRef leaf(int i) { return {Kind::Leaf, i}; }

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct TreeNode {
  HaarFeature feature;
  double split_threshold = 0.0;
  NodeRef left;
  NodeRef right;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Weak classifier. Evaluation starts at nodes[0]; a tree with no nodes is a
// constant that yields leaves[0].
struct WeakTree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaves;

  friend bool operator==(const WeakTree&, const WeakTree&) = default;
};

inline constexpr int kNoStage = -1;

// A stage passes when the sum of its trees' leaf values is >= threshold.
//
// parent/next describe the stage tree used by tree-structured cascades: after
// a pass evaluation continues at the first stage whose parent is this one;
// after a failure it climbs parents until one has a next sibling. A plain
// cascade is the chain parent = i-1, next = none.
struct Stage {
  double threshold = 0.0;
  std::vector<WeakTree> trees;
  int parent = kNoStage;
  int next = kNoStage;

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct CascadeModel {
  std::string name;
  int window_w = 0;
  int window_h = 0;
  std::vector<Stage> stages;

  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

// Links stages into the plain chain (parent = i-1, next = none).
void chain_stages(CascadeModel& model);

// Parses the legacy "opencv-haar-classifier" markup (stages of trees with
// inline features). The stump-only feature-table schema is rejected with
// UnsupportedFeature. Throws MalformedModel on schema violations.
CascadeModel parse_cascade(std::string_view markup, std::string name = {});
// XML or synthetic text, told apart by the first non-blank character. The
// model is named after the file stem.
CascadeModel load_cascade_file(const std::string& path);

struct ValidationIssue {
  std::string where;    // e.g. "stage 3 tree 1 node 0 rect 2"
  std::string message;  // e.g. "rect exceeds window"

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

using ValidationReport = std::vector<ValidationIssue>;

// Lists every invariant violation; empty iff the model is valid.
ValidationReport validate_cascade(const CascadeModel& model);

// Line-oriented synthetic format, see docs/synthetic-cascade.md.
CascadeModel load_synthetic_cascade(std::string_view text, std::string name = {});
std::string write_synthetic_cascade(const CascadeModel& model);

}  // namespace visensor
