#include "hypalign/hierarchy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hypalign {

namespace {

struct ParsedEdges {
  std::map<std::string, std::string> parent_of;  // deduplicated
  std::set<std::string> nodes;
  std::set<std::string> parents;
};

ParsedEdges index_edges(const RawTree& tree) {
  ParsedEdges pe;
  for (const auto& [child, parent] : tree.edges) {
    if (child == parent)
      throw std::invalid_argument("hierarchy: self-edge at node '" + child + "'");
    auto it = pe.parent_of.find(child);
    if (it != pe.parent_of.end()) {
      if (it->second != parent)
        throw std::invalid_argument("hierarchy: node '" + child + "' has two parents");
    } else {
      pe.parent_of.emplace(child, parent);
    }
    pe.nodes.insert(child);
    pe.nodes.insert(parent);
    pe.parents.insert(parent);
  }
  if (pe.nodes.empty())
    throw std::invalid_argument("hierarchy: tree '" + tree.name + "' has no edges");
  return pe;
}

}  // namespace

RawTree pad_to_uniform_depth(const RawTree& tree) {
  ParsedEdges pe = index_edges(tree);

  // Recompute depths straightforwardly: walk up to the top for each node.
  std::map<std::string, int> depth;
  for (const std::string& n : pe.nodes) {
    std::set<std::string> seen;
    int d = 0;
    std::string cur = n;
    for (;;) {
      if (!seen.insert(cur).second)
        throw std::invalid_argument("hierarchy: cycle through node '" + cur + "'");
      auto it = pe.parent_of.find(cur);
      if (it == pe.parent_of.end()) break;
      cur = it->second;
      ++d;
    }
    depth[n] = d;
  }

  int max_leaf_depth = 0;
  for (const std::string& n : pe.nodes)
    if (!pe.parents.count(n)) max_leaf_depth = std::max(max_leaf_depth, depth[n]);
  const int L = max_leaf_depth;

  RawTree out;
  out.name = tree.name;
  for (const auto& [child, parent] : pe.parent_of)
    out.edges.emplace_back(child, parent);
  std::sort(out.edges.begin(), out.edges.end());

  bool changed = false;
  std::vector<std::pair<std::string, std::string>> padded;
  for (const std::string& n : pe.nodes) {
    if (pe.parents.count(n)) continue;  // only leaves need lifting
    const int level = L - depth[n];
    if (level == 0) continue;
    changed = true;
    // Chain of pass-through duplicates: n -> n#1 -> ... -> n#level -> parent(n).
    std::string below = n;
    for (int k = 1; k <= level; ++k) {
      std::string dup = n + "#" + std::to_string(k);
      if (pe.nodes.count(dup))
        throw std::invalid_argument("hierarchy: padded name '" + dup + "' collides");
      padded.emplace_back(below, dup);
      below = dup;
    }
    auto it = pe.parent_of.find(n);
    if (it != pe.parent_of.end()) {
      // redirect the original edge to the top duplicate
      auto edge = std::find(out.edges.begin(), out.edges.end(),
                            std::make_pair(n, it->second));
      edge->first = below;
    }
  }
  if (!changed) return out;
  out.edges.insert(out.edges.end(), padded.begin(), padded.end());
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

HierarchyTree build_tree(const RawTree& raw) {
  RawTree padded = pad_to_uniform_depth(raw);
  ParsedEdges pe = index_edges(padded);

  std::map<std::string, int> depth;
  for (const std::string& n : pe.nodes) {
    int d = 0;
    std::string cur = n;
    while (pe.parent_of.count(cur)) {
      cur = pe.parent_of.at(cur);
      ++d;
    }
    depth[n] = d;
  }
  int L = 0;
  for (const auto& [n, d] : depth) L = std::max(L, d);

  HierarchyTree tree;
  tree.name = padded.name;
  tree.depth = L;
  tree.classes.assign(L + 1, {});
  for (const auto& [n, d] : depth) tree.classes[L - d].push_back(n);
  for (auto& names : tree.classes) std::sort(names.begin(), names.end());

  tree.parent.assign(L, {});
  tree.children.assign(L + 1, {});
  for (int l = 1; l <= L; ++l) tree.children[l].assign(tree.classes[l].size(), {});
  for (int l = 0; l < L; ++l) {
    tree.parent[l].assign(tree.classes[l].size(), -1);
    for (std::size_t c = 0; c < tree.classes[l].size(); ++c) {
      const std::string& name = tree.classes[l][c];
      auto it = pe.parent_of.find(name);
      if (it == pe.parent_of.end())
        throw std::invalid_argument("hierarchy: node '" + name + "' below the top band has no parent");
      const int p = tree.index_of(l + 1, it->second);
      tree.parent[l][c] = p;
      tree.children[l + 1][p].push_back(static_cast<int>(c));
    }
  }
  return tree;
}

int HierarchyTree::index_of(int level, const std::string& name) const {
  const auto& names = classes.at(level);
  auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name)
    throw std::out_of_range("hierarchy: unknown class '" + name + "' at level " +
                            std::to_string(level));
  return static_cast<int>(it - names.begin());
}

HierarchyForest parse_forest(const std::string& text) {
  std::vector<RawTree> raws;
  RawTree cur;
  cur.name = "default";
  bool any_section = false;

  std::istringstream in(text);
  std::string line;
  auto flush = [&]() {
    if (!cur.edges.empty()) raws.push_back(cur);
    else if (any_section)
      throw std::invalid_argument("hierarchy: tree section '" + cur.name + "' is empty");
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t");
    std::string body = line.substr(start, end - start + 1);
    if (body[0] == '#') continue;
    if (body.rfind("== tree ", 0) == 0 && body.size() > 10 &&
        body.substr(body.size() - 3) == " ==") {
      flush();
      cur = RawTree{};
      cur.name = body.substr(8, body.size() - 11);
      any_section = true;
      continue;
    }
    std::size_t tab = body.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == body.size())
      throw std::invalid_argument("hierarchy: malformed edge line: '" + body + "'");
    cur.edges.emplace_back(body.substr(0, tab), body.substr(tab + 1));
  }
  flush();
  if (raws.empty()) throw std::invalid_argument("hierarchy: empty file");

  HierarchyForest forest;
  for (const RawTree& r : raws) forest.trees.push_back(build_tree(r));
  forest.leaves = forest.trees[0].classes[0];
  for (std::size_t i = 1; i < forest.trees.size(); ++i) {
    if (forest.trees[i].classes[0] != forest.leaves)
      throw std::invalid_argument("hierarchy: leaf sets differ between trees '" +
                                  forest.trees[0].name + "' and '" +
                                  forest.trees[i].name + "'");
  }
  return forest;
}

NegativeSets negative_sets(const HierarchyTree& tree, int level, int cls) {
  if (level < 0 || level > tree.depth)
    throw std::out_of_range("negative_sets: level out of range");
  if (cls < 0 || cls >= tree.class_count(level))
    throw std::out_of_range("negative_sets: class out of range");
  NegativeSets ns;
  if (level < tree.depth) {
    const int p = tree.parent[level][cls];
    for (int k = 0; k < tree.class_count(level + 1); ++k)
      if (k != p) ns.above.push_back(k);
  }
  if (level > 0) {
    const auto& kids = tree.children[level][cls];
    for (int k = 0; k < tree.class_count(level - 1); ++k)
      if (std::find(kids.begin(), kids.end(), k) == kids.end())
        ns.below.push_back(k);
  }
  return ns;
}

double level_weight(int level, int depth) {
  if (level < 0 || level > depth)
    throw std::out_of_range("level_weight: level out of range");
  return 1.0 - static_cast<double>(level) / (depth + 1);
}

std::vector<int> ancestor_path(const HierarchyTree& tree, const std::string& leaf) {
  std::vector<int> path;
  path.reserve(tree.depth + 1);
  int c = tree.leaf_index(leaf);
  path.push_back(c);
  for (int l = 0; l < tree.depth; ++l) {
    c = tree.parent[l][c];
    path.push_back(c);
  }
  return path;
}

}  // namespace hypalign
