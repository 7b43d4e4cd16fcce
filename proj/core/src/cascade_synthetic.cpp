#include <charconv>

#include "visensor/cascade.hpp"
#include "visensor/error.hpp"

namespace visensor {

namespace {

[[noreturn]] void malformed(int line, const std::string& what) {
  throw Error(ErrorCode::MalformedModel, "synthetic cascade line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T number(std::string_view tok, int line) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) malformed(line, "bad number '" + std::string(tok) + "'");
  return v;
}

void append_real(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

CascadeModel load_synthetic_cascade(std::string_view text, std::string name) {
  CascadeModel model;
  model.name = std::move(name);
  bool have_window = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    auto tok = tokens(line);
    if (tok.empty() || tok[0].front() == '#') {
      if (eol == text.size()) break;
      continue;
    }
    const std::string_view kw = tok[0];
    if (kw == "window") {
      if (have_window) malformed(line_no, "duplicate window");
      if (tok.size() != 3) malformed(line_no, "expected 'window W H'");
      model.window_w = number<int>(tok[1], line_no);
      model.window_h = number<int>(tok[2], line_no);
      have_window = true;
    } else if (!have_window) {
      malformed(line_no, "'window' must come first");
    } else if (kw == "stage") {
      if (tok.size() != 2) malformed(line_no, "expected 'stage T'");
      if (!model.stages.empty() && model.stages.back().trees.empty()) malformed(line_no, "previous stage is empty");
      Stage s;
      s.threshold = number<double>(tok[1], line_no);
      model.stages.push_back(std::move(s));
    } else if (kw == "leaf" || kw == "stump") {
      if (model.stages.empty()) malformed(line_no, "tree outside a stage");
      WeakTree tree;
      if (kw == "leaf") {
        if (tok.size() != 2) malformed(line_no, "expected 'leaf V'");
        tree.leaves.push_back(number<double>(tok[1], line_no));
      } else {
        std::size_t i = 1;
        TreeNode node;
        if (i < tok.size() && tok[i] == "tilted") {
          node.feature.tilted = true;
          ++i;
        }
        while (i < tok.size() && tok[i] != "split") {
          if (i + 5 > tok.size()) malformed(line_no, "rect needs 'x y w h weight'");
          node.feature.rects.push_back(
              {Rect{number<int>(tok[i], line_no), number<int>(tok[i + 1], line_no), number<int>(tok[i + 2], line_no),
                    number<int>(tok[i + 3], line_no)},
               number<double>(tok[i + 4], line_no)});
          i += 5;
        }
        if (node.feature.rects.empty()) malformed(line_no, "stump needs at least one rect");
        if (i + 4 != tok.size()) malformed(line_no, "expected 'split T LEFT RIGHT' at end of stump");
        node.split_threshold = number<double>(tok[i + 1], line_no);
        tree.leaves = {number<double>(tok[i + 2], line_no), number<double>(tok[i + 3], line_no)};
        node.left = NodeRef::leaf(0);
        node.right = NodeRef::leaf(1);
        tree.nodes.push_back(std::move(node));
      }
      model.stages.back().trees.push_back(std::move(tree));
    } else {
      malformed(line_no, "unknown keyword '" + std::string(kw) + "'");
    }
    if (eol == text.size()) break;
  }
  if (!have_window) malformed(line_no, "missing 'window'");
  if (!model.stages.empty() && model.stages.back().trees.empty()) malformed(line_no, "last stage is empty");
  chain_stages(model);
  return model;
}

std::string write_synthetic_cascade(const CascadeModel& model) {
  std::string out = "window " + std::to_string(model.window_w) + " " + std::to_string(model.window_h) + "\n";
  for (std::size_t i = 0; i < model.stages.size(); ++i) {
    const Stage& stage = model.stages[i];
    if (stage.parent != static_cast<int>(i) - 1 || stage.next != kNoStage) {
      throw Error(ErrorCode::UnsupportedFeature, "synthetic format cannot express stage trees");
    }
    out += "stage ";
    append_real(out, stage.threshold);
    out += "\n";
    for (const WeakTree& tree : stage.trees) {
      if (tree.nodes.empty() && tree.leaves.size() == 1) {
        out += "leaf ";
        append_real(out, tree.leaves[0]);
        out += "\n";
        continue;
      }
      if (tree.nodes.size() != 1 || tree.leaves.size() != 2 || !(tree.nodes[0].left == NodeRef::leaf(0)) ||
          !(tree.nodes[0].right == NodeRef::leaf(1))) {
        throw Error(ErrorCode::UnsupportedFeature, "synthetic format only expresses stumps and constant leaves");
      }
      const TreeNode& node = tree.nodes[0];
      out += "stump";
      if (node.feature.tilted) out += " tilted";
      for (const auto& [r, weight] : node.feature.rects) {
        out += " " + std::to_string(r.x) + " " + std::to_string(r.y) + " " + std::to_string(r.w) + " " +
               std::to_string(r.h) + " ";
        append_real(out, weight);
      }
      out += " split ";
      append_real(out, node.split_threshold);
      out += " ";
      append_real(out, tree.leaves[0]);
      out += " ";
      append_real(out, tree.leaves[1]);
      out += "\n";
    }
  }
  return out;
}

}  // namespace visensor
