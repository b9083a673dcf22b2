#pragma once

#include <string>
#include <utility>
#include <vector>

namespace hypalign {

/// A class tree as parsed from a hierarchy file: one `child<TAB>parent` edge
/// per line. Node names are unique within a tree; a node that never appears
/// as a parent is a leaf.
struct RawTree {
  std::string name;
  std::vector<std::pair<std::string, std::string>> edges;  // child -> parent
};

/// Uniform-depth class tree. Leaves sit at level 0; every node below the top
/// band has exactly one parent at the next level up. Class indices are dense
/// per level and assigned in lexicographic name order.
struct HierarchyTree {
  std::string name;
  int depth = 0;  // L: top band lives at this level
  std::vector<std::vector<std::string>> classes;        // [level][index] -> name
  std::vector<std::vector<int>> parent;                 // [level][index], level < depth
  std::vector<std::vector<std::vector<int>>> children;  // [level][index], level >= 1

  int class_count(int level) const { return static_cast<int>(classes[level].size()); }
  int index_of(int level, const std::string& name) const;
  int leaf_index(const std::string& name) const { return index_of(0, name); }
};

struct HierarchyForest {
  std::vector<HierarchyTree> trees;
  std::vector<std::string> leaves;  // sorted; shared by every tree
};

/// Classes at the adjacent levels that do not share an edge with the query
/// class; empty at nonexistent levels.
struct NegativeSets {
  std::vector<int> below;  // indices at level l-1
  std::vector<int> above;  // indices at level l+1
};

/// Inserts pass-through duplicate nodes above short leaves so every
/// root-to-leaf path has the maximum length. Duplicates are named
/// `<leaf>#<level>`. Idempotent on already-uniform trees.
RawTree pad_to_uniform_depth(const RawTree& tree);

/// Validates (acyclic, single-parent) and pads, then assigns levels and
/// dense per-level class indices.
HierarchyTree build_tree(const RawTree& raw);

/// Parses a forest file: TSV edges, `#` comments, trees separated by
/// `== tree <name> ==` lines. All trees must share the same leaf set.
HierarchyForest parse_forest(const std::string& text);

NegativeSets negative_sets(const HierarchyTree& tree, int level, int cls);

/// omega_l = 1 - l/(L+1).
double level_weight(int level, int depth);

/// Class index per level from the leaf up to the top band; length depth+1.
std::vector<int> ancestor_path(const HierarchyTree& tree, const std::string& leaf);

}  // namespace hypalign
