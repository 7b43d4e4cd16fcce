#include "visensor/cascade.hpp"

namespace visensor {

namespace {

void check_feature(const CascadeModel& model, const HaarFeature& f, const std::string& where, ValidationReport& out) {
  if (f.rects.size() < 2 || f.rects.size() > 3) {
    out.push_back({where, "feature needs 2-3 rects"});
  }
  bool positive = false;
  bool negative = false;
  for (std::size_t i = 0; i < f.rects.size(); ++i) {
    const auto& [r, weight] = f.rects[i];
    const std::string rw = where + " rect " + std::to_string(i);
    if (r.w < 1 || r.h < 1) {
      out.push_back({rw, "rect degenerate"});
      continue;
    }
    const bool fits = f.tilted ? tilted_rect_fits(r, model.window_w, model.window_h)
                               : rect_fits(r, model.window_w, model.window_h);
    if (!fits) out.push_back({rw, "rect exceeds window"});
    positive = positive || weight > 0.0;
    negative = negative || weight < 0.0;
  }
  if (!f.rects.empty() && !(positive && negative)) {
    out.push_back({where, "rect weights all share one sign"});
  }
}

void check_tree(const CascadeModel& model, const WeakTree& tree, const std::string& where, ValidationReport& out) {
  if (tree.nodes.empty()) {
    if (tree.leaves.size() != 1) out.push_back({where, "malformed tree: constant tree needs exactly one leaf"});
    return;
  }
  const int n = static_cast<int>(tree.nodes.size());
  const int l = static_cast<int>(tree.leaves.size());
  std::vector<int> node_refs(static_cast<std::size_t>(n), 0);
  std::vector<int> leaf_refs(static_cast<std::size_t>(l), 0);
  bool bad_ref = false;
  for (int i = 0; i < n; ++i) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
    for (const NodeRef& ref : {node.left, node.right}) {
      if (ref.kind == NodeRef::Kind::Node) {
        // Children must come later in the list, which also rules out cycles.
        if (ref.index <= i || ref.index >= n) {
          bad_ref = true;
        } else {
          ++node_refs[static_cast<std::size_t>(ref.index)];
        }
      } else if (ref.index < 0 || ref.index >= l) {
        bad_ref = true;
      } else {
        ++leaf_refs[static_cast<std::size_t>(ref.index)];
      }
    }
    check_feature(model, node.feature, where + " node " + std::to_string(i), out);
  }
  if (bad_ref) {
    out.push_back({where, "malformed tree: child reference out of range"});
    return;
  }
  for (int i = 1; i < n; ++i) {
    if (node_refs[static_cast<std::size_t>(i)] != 1) {
      out.push_back({where + " node " + std::to_string(i), "malformed tree: node must have exactly one parent"});
    }
  }
  for (int i = 0; i < l; ++i) {
    if (leaf_refs[static_cast<std::size_t>(i)] != 1) {
      out.push_back({where + " leaf " + std::to_string(i), "malformed tree: leaf must be referenced exactly once"});
    }
  }
}

}  // namespace

ValidationReport validate_cascade(const CascadeModel& model) {
  ValidationReport out;
  if (model.window_w < 1 || model.window_h < 1) {
    out.push_back({"window", "window degenerate"});
  }
  const int count = static_cast<int>(model.stages.size());
  for (int i = 0; i < count; ++i) {
    const Stage& stage = model.stages[static_cast<std::size_t>(i)];
    const std::string where = "stage " + std::to_string(i);
    if (stage.trees.empty()) out.push_back({where, "empty stage"});

    const bool parent_ok = stage.parent >= kNoStage && stage.parent < i;
    const bool next_ok = stage.next == kNoStage ||
                         (stage.next > i && stage.next < count &&
                          model.stages[static_cast<std::size_t>(stage.next)].parent == stage.parent);
    if (!parent_ok || !next_ok) out.push_back({where, "malformed stage tree"});

    for (std::size_t t = 0; t < stage.trees.size(); ++t) {
      check_tree(model, stage.trees[t], where + " tree " + std::to_string(t), out);
    }
  }
  return out;
}

}  // namespace visensor
