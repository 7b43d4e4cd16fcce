#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <charconv>
#include <filesystem>
#include <sstream>

#include "visensor/cascade.hpp"
#include "visensor/codec.hpp"
#include "visensor/error.hpp"

namespace visensor {

namespace {

using boost::property_tree::ptree;

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::MalformedModel, where + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double to_real(std::string_view tok, const std::string& where) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    malformed(where, "expected a number, got '" + std::string(tok) + "'");
  }
  return v;
}

int to_int(std::string_view tok, const std::string& where) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    malformed(where, "expected an integer, got '" + std::string(tok) + "'");
  }
  return v;
}

const ptree& child(const ptree& node, const char* key, const std::string& where) {
  auto it = node.find(key);
  if (it == node.not_found()) malformed(where, std::string("missing <") + key + ">");
  return it->second;
}

std::string text(const ptree& node) {
  std::string s = node.data();
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void reject_unknown(const ptree& node, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, _] : node) {
    if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::UnsupportedFeature, where + ": element <" + key + "> is not supported");
  }
}

HaarFeature parse_feature(const ptree& node, const std::string& where) {
  reject_unknown(node, {"rects", "tilted"}, where);
  HaarFeature f;
  const ptree& rects = child(node, "rects", where);
  int i = 0;
  for (const auto& [key, r] : rects) {
    if (key != "_") continue;
    const std::string rw = where + " rect " + std::to_string(i++);
    const std::string line = text(r);
    auto toks = split_ws(line);
    if (toks.size() != 5) malformed(rw, "expected 'x y w h weight', got '" + line + "'");
    f.rects.push_back({Rect{to_int(toks[0], rw), to_int(toks[1], rw), to_int(toks[2], rw), to_int(toks[3], rw)},
                       to_real(toks[4], rw)});
  }
  if (f.rects.empty()) malformed(where, "feature has no rects");
  if (auto t = node.find("tilted"); t != node.not_found()) f.tilted = to_int(text(t->second), where) != 0;
  return f;
}

WeakTree parse_tree(const ptree& tree_node, const std::string& where) {
  std::vector<const ptree*> raw;
  for (const auto& [key, n] : tree_node) {
    if (key == "_") raw.push_back(&n);
  }
  if (raw.empty()) malformed(where, "tree has no nodes");

  WeakTree tree;
  const int count = static_cast<int>(raw.size());
  for (int i = 0; i < count; ++i) {
    const ptree& n = *raw[static_cast<std::size_t>(i)];
    const std::string nw = where + " node " + std::to_string(i);
    reject_unknown(n, {"feature", "threshold", "left_val", "left_node", "right_val", "right_node"}, nw);
    TreeNode node;
    node.feature = parse_feature(child(n, "feature", nw), nw);
    node.split_threshold = to_real(text(child(n, "threshold", nw)), nw);
    auto side = [&](const char* val_key, const char* node_key) -> NodeRef {
      auto v = n.find(val_key);
      auto c = n.find(node_key);
      if ((v == n.not_found()) == (c == n.not_found())) {
        malformed(nw, std::string("needs exactly one of <") + val_key + "> and <" + node_key + ">");
      }
      if (v != n.not_found()) {
        tree.leaves.push_back(to_real(text(v->second), nw));
        return NodeRef::leaf(static_cast<int>(tree.leaves.size()) - 1);
      }
      const int target = to_int(text(c->second), nw);
      if (target <= 0 || target >= count) malformed(nw, "child node index " + std::to_string(target) + " out of range");
      return NodeRef::node(target);
    };
    node.left = side("left_val", "left_node");
    node.right = side("right_val", "right_node");
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

Stage parse_stage(const ptree& s, int index) {
  const std::string where = "stage " + std::to_string(index);
  reject_unknown(s, {"trees", "stage_threshold", "parent", "next"}, where);
  Stage stage;
  int t = 0;
  for (const auto& [key, tree] : child(s, "trees", where)) {
    if (key != "_") continue;
    stage.trees.push_back(parse_tree(tree, where + " tree " + std::to_string(t++)));
  }
  if (stage.trees.empty()) malformed(where, "stage has no trees");
  stage.threshold = to_real(text(child(s, "stage_threshold", where)), where);
  stage.parent = index - 1;
  stage.next = kNoStage;
  if (auto p = s.find("parent"); p != s.not_found()) stage.parent = to_int(text(p->second), where);
  if (auto n = s.find("next"); n != s.not_found()) stage.next = to_int(text(n->second), where);
  return stage;
}

}  // namespace

void chain_stages(CascadeModel& model) {
  for (std::size_t i = 0; i < model.stages.size(); ++i) {
    model.stages[i].parent = static_cast<int>(i) - 1;
    model.stages[i].next = kNoStage;
  }
}

CascadeModel parse_cascade(std::string_view markup, std::string name) {
  ptree doc;
  try {
    std::istringstream in{std::string(markup)};
    boost::property_tree::read_xml(in, doc, boost::property_tree::xml_parser::no_comments);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw Error(ErrorCode::MalformedModel, std::string("markup: ") + e.what());
  }

  const ptree* storage = &doc;
  if (auto it = doc.find("opencv_storage"); it != doc.not_found()) storage = &it->second;

  const ptree* root = nullptr;
  std::string root_name;
  for (const auto& [key, node] : *storage) {
    if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
    root = &node;
    root_name = key;
    break;
  }
  if (root == nullptr) malformed("document", "no cascade element");

  const std::string type_id = root->get<std::string>("<xmlattr>.type_id", "");
  if (type_id == "opencv-cascade-classifier" || root->find("stageType") != root->not_found() ||
      root->find("features") != root->not_found()) {
    throw Error(ErrorCode::UnsupportedFeature,
                "stump-only feature-table cascade schema ('opencv-cascade-classifier') is not supported; "
                "use the legacy 'opencv-haar-classifier' file");
  }
  if (!type_id.empty() && type_id != "opencv-haar-classifier") {
    throw Error(ErrorCode::UnsupportedFeature, "cascade type '" + type_id + "' is not supported");
  }

  CascadeModel model;
  model.name = name.empty() ? root_name : std::move(name);
  const std::string size_text = text(child(*root, "size", root_name));
  auto dims = split_ws(size_text);
  if (dims.size() != 2) malformed("size", "expected 'w h', got '" + size_text + "'");
  model.window_w = to_int(dims[0], "size");
  model.window_h = to_int(dims[1], "size");

  int index = 0;
  for (const auto& [key, s] : child(*root, "stages", root_name)) {
    if (key != "_") continue;
    model.stages.push_back(parse_stage(s, index++));
  }
  if (model.stages.empty()) malformed("stages", "cascade has no stages");
  return model;
}

CascadeModel load_cascade_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  std::string stem = std::filesystem::path(path).stem().string();
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] != '<') return load_synthetic_cascade(text, std::move(stem));
  return parse_cascade(text, std::move(stem));
}

}  // namespace visensor
