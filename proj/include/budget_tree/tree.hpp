#ifndef BUDGET_TREE_TREE_HPP_
#define BUDGET_TREE_TREE_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "budget_tree/error.hpp"
#include "budget_tree/sensors.hpp"

namespace budget_tree {

// signs[j] == 1 means g_j(x) > 0 (positive branch), 0 means g_j(x) <= 0.
using SignVector = std::vector<std::uint8_t>;

struct ChildRef {
  bool is_leaf = true;
  int index = 0;

  bool operator==(const ChildRef&) const = default;
};

struct InternalNode {
  SensorSet acquired;  // sensors available when the decision at this node runs
  ChildRef negative;
  ChildRef positive;
};

struct Leaf {
  SensorSet sensors;
  SensorSet complement;
};

// Binary sensor tree with K leaves and K-1 decision nodes. Node 0 is the root
// whenever K >= 2; with K == 1 the tree is a single leaf.
struct TreeStructure {
  std::vector<InternalNode> nodes;
  std::vector<Leaf> leaves;
  // P[k][j] = 1 iff leaf k's path needs g_j > 0; N[k][j] = 1 iff it needs g_j <= 0.
  std::vector<std::vector<std::uint8_t>> P;
  std::vector<std::vector<std::uint8_t>> N;
  // Leaves below the positive / negative branch of node j.
  std::vector<std::vector<int>> Cp;
  std::vector<std::vector<int>> Cn;

  int num_leaves() const { return static_cast<int>(leaves.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  ChildRef root() const { return nodes.empty() ? ChildRef{true, 0} : ChildRef{false, 0}; }

  SensorSet SetOf(ChildRef c) const {
    return c.is_leaf ? leaves[static_cast<std::size_t>(c.index)].sensors
                     : nodes[static_cast<std::size_t>(c.index)].acquired;
  }
};

// Validates the node/leaf wiring and fills complements, P/N and Cp/Cn.
inline TreeStructure FinalizeTree(std::vector<InternalNode> nodes, std::vector<Leaf> leaves,
                                  int num_sensors) {
  const int k_leaves = static_cast<int>(leaves.size());
  if (k_leaves < 1) throw Error(ErrorKind::kConfig, "tree_builder", "tree needs a leaf");
  if (static_cast<int>(nodes.size()) != k_leaves - 1) {
    throw Error(ErrorKind::kConfig, "tree_builder",
                "a binary tree with " + std::to_string(k_leaves) + " leaves needs " +
                    std::to_string(k_leaves - 1) + " internal nodes");
  }
  TreeStructure t;
  t.nodes = std::move(nodes);
  t.leaves = std::move(leaves);
  SensorSet all(static_cast<std::size_t>(num_sensors));
  for (int m = 0; m < num_sensors; ++m) all[static_cast<std::size_t>(m)] = m;
  for (auto& leaf : t.leaves) {
    leaf.sensors = MakeSensorSet(leaf.sensors);
    for (int m : leaf.sensors) {
      if (m < 0 || m >= num_sensors) {
        throw Error(ErrorKind::kConfig, "tree_builder", "leaf sensor id out of range");
      }
    }
    leaf.complement = SetDifference(all, leaf.sensors);
  }
  for (auto& node : t.nodes) node.acquired = MakeSensorSet(node.acquired);

  const int j_nodes = t.num_nodes();
  t.P.assign(static_cast<std::size_t>(k_leaves), std::vector<std::uint8_t>(j_nodes, 0));
  t.N = t.P;
  t.Cp.assign(static_cast<std::size_t>(j_nodes), {});
  t.Cn.assign(static_cast<std::size_t>(j_nodes), {});
  std::vector<int> seen_nodes(static_cast<std::size_t>(j_nodes), 0);
  std::vector<int> seen_leaves(static_cast<std::size_t>(k_leaves), 0);
  std::vector<std::pair<int, std::uint8_t>> path;  // (node, took positive)

  std::function<void(ChildRef, const SensorSet&)> visit = [&](ChildRef c,
                                                             const SensorSet& parent_set) {
    if (c.index < 0 || c.index >= (c.is_leaf ? k_leaves : j_nodes)) {
      throw Error(ErrorKind::kConfig, "tree_builder", "child reference out of range");
    }
    const SensorSet here = t.SetOf(c);
    if (!IsSubset(parent_set, here)) {
      throw Error(ErrorKind::kConfig, "tree_builder",
                  "sensor sets must grow along every root-to-leaf path");
    }
    if (c.is_leaf) {
      if (seen_leaves[static_cast<std::size_t>(c.index)]++) {
        throw Error(ErrorKind::kConfig, "tree_builder", "leaf reached twice");
      }
      for (auto [j, pos] : path) {
        auto& row = pos ? t.P : t.N;
        row[static_cast<std::size_t>(c.index)][static_cast<std::size_t>(j)] = 1;
        (pos ? t.Cp : t.Cn)[static_cast<std::size_t>(j)].push_back(c.index);
      }
      return;
    }
    if (seen_nodes[static_cast<std::size_t>(c.index)]++) {
      throw Error(ErrorKind::kConfig, "tree_builder", "node reached twice");
    }
    const auto& node = t.nodes[static_cast<std::size_t>(c.index)];
    path.emplace_back(c.index, 0);
    visit(node.negative, here);
    path.back().second = 1;
    visit(node.positive, here);
    path.pop_back();
  };
  visit(t.root(), SensorSet{});
  if (std::count(seen_leaves.begin(), seen_leaves.end(), 1) != k_leaves ||
      std::count(seen_nodes.begin(), seen_nodes.end(), 1) != j_nodes) {
    throw Error(ErrorKind::kConfig, "tree_builder", "tree has unreachable nodes or leaves");
  }
  for (auto& c : t.Cp) std::sort(c.begin(), c.end());
  for (auto& c : t.Cn) std::sort(c.begin(), c.end());
  return t;
}

inline TreeStructure SingleLeafTree(const SensorSet& sensors, int num_sensors) {
  return FinalizeTree({}, {Leaf{sensors, {}}}, num_sensors);
}

namespace detail {

struct Cluster {
  SensorSet set;
  ChildRef ref;
  std::vector<int> leaf_ids;
};

inline bool SignatureLess(const Cluster& a, const Cluster& b) {
  if (a.set != b.set) return a.set < b.set;
  return a.leaf_ids < b.leaf_ids;
}

// Renumbers internal nodes in preorder (negative branch first) from `root`.
inline std::vector<InternalNode> PreorderNodes(const std::vector<InternalNode>& nodes,
                                               ChildRef root) {
  std::vector<int> order;
  std::function<void(ChildRef)> walk = [&](ChildRef c) {
    if (c.is_leaf) return;
    order.push_back(c.index);
    walk(nodes[static_cast<std::size_t>(c.index)].negative);
    walk(nodes[static_cast<std::size_t>(c.index)].positive);
  };
  walk(root);
  std::vector<int> new_id(nodes.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) new_id[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  auto remap = [&](ChildRef c) {
    return c.is_leaf ? c : ChildRef{false, new_id[static_cast<std::size_t>(c.index)]};
  };
  std::vector<InternalNode> out(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& n = nodes[static_cast<std::size_t>(order[i])];
    out[i] = InternalNode{n.acquired, remap(n.negative), remap(n.positive)};
  }
  return out;
}

}  // namespace detail

// Agglomerative clustering of the leaf subsets: repeatedly merge the two
// clusters sharing the most sensors and replace them with their
// intersection. Ties go to the pair with the lexicographically smallest
// sorted sensor-id signatures. Within a merge the child with the smaller
// signature (sensor set, then leaf ids) becomes the negative branch. Leaf k
// keeps subset k; nodes are numbered in preorder from the root.
inline TreeStructure ClusterTree(const std::vector<SensorSet>& subsets, int num_sensors) {
  const int k_leaves = static_cast<int>(subsets.size());
  if (k_leaves < 2) throw Error(ErrorKind::kConfig, "tree_builder", "need at least 2 subsets");
  std::set<SensorSet> distinct;
  for (const auto& s : subsets) {
    SensorSet norm = MakeSensorSet(s);
    if (norm.empty()) throw Error(ErrorKind::kConfig, "tree_builder", "empty subset");
    if (!distinct.insert(norm).second) {
      throw Error(ErrorKind::kConfig, "tree_builder", "duplicate subsets");
    }
  }

  std::vector<detail::Cluster> clusters;
  std::vector<Leaf> leaves;
  for (int k = 0; k < k_leaves; ++k) {
    SensorSet s = MakeSensorSet(subsets[static_cast<std::size_t>(k)]);
    leaves.push_back(Leaf{s, {}});
    clusters.push_back({s, ChildRef{true, k}, {k}});
  }
  std::vector<InternalNode> nodes;
  while (clusters.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    std::size_t best_common = 0;
    bool have = false;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        std::size_t common = SetIntersection(clusters[a].set, clusters[b].set).size();
        std::size_t lo = a, hi = b;
        if (detail::SignatureLess(clusters[hi], clusters[lo])) std::swap(lo, hi);
        bool better = !have || common > best_common;
        if (have && common == best_common) {
          const auto& cur_lo = clusters[best_a];
          const auto& cur_hi = clusters[best_b];
          if (clusters[lo].set != cur_lo.set) {
            better = clusters[lo].set < cur_lo.set;
          } else if (clusters[hi].set != cur_hi.set) {
            better = clusters[hi].set < cur_hi.set;
          } else {
            better = false;  // identical signatures: keep the earlier pair
          }
        }
        if (better) {
          have = true;
          best_common = common;
          best_a = lo;
          best_b = hi;
        }
      }
    }
    // best_a holds the smaller signature, so it becomes the negative branch.
    detail::Cluster neg = clusters[best_a];
    detail::Cluster pos = clusters[best_b];
    InternalNode node{SetIntersection(neg.set, pos.set), neg.ref, pos.ref};
    nodes.push_back(node);
    detail::Cluster merged;
    merged.set = node.acquired;
    merged.ref = ChildRef{false, static_cast<int>(nodes.size()) - 1};
    merged.leaf_ids = neg.leaf_ids;
    merged.leaf_ids.insert(merged.leaf_ids.end(), pos.leaf_ids.begin(), pos.leaf_ids.end());
    std::sort(merged.leaf_ids.begin(), merged.leaf_ids.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(std::max(best_a, best_b)));
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(std::min(best_a, best_b)));
    clusters.push_back(std::move(merged));
  }
  auto ordered = detail::PreorderNodes(nodes, clusters.front().ref);
  return FinalizeTree(std::move(ordered), std::move(leaves), num_sensors);
}

// Leaf reached by following the signs from the root.
inline int Route(const TreeStructure& tree, const SignVector& signs) {
  ChildRef c = tree.root();
  while (!c.is_leaf) {
    const auto& node = tree.nodes[static_cast<std::size_t>(c.index)];
    c = signs[static_cast<std::size_t>(c.index)] ? node.positive : node.negative;
  }
  return c.index;
}

// G_k = prod_j [g_j > 0]^{P_kj} [g_j <= 0]^{N_kj}, evaluated from P/N only.
inline std::vector<int> StateIndicators(const TreeStructure& tree, const SignVector& signs) {
  std::vector<int> g(static_cast<std::size_t>(tree.num_leaves()), 1);
  for (int k = 0; k < tree.num_leaves(); ++k) {
    for (int j = 0; j < tree.num_nodes(); ++j) {
      const auto kk = static_cast<std::size_t>(k);
      const auto jj = static_cast<std::size_t>(j);
      if (tree.P[kk][jj] && !signs[jj]) g[kk] = 0;
      if (tree.N[kk][jj] && signs[jj]) g[kk] = 0;
    }
  }
  return g;
}

// Sign vector number `code` in binary: bit j is the sign of g_j.
inline SignVector SignsFromCode(std::uint64_t code, int num_nodes) {
  SignVector s(static_cast<std::size_t>(num_nodes));
  for (int j = 0; j < num_nodes; ++j) s[static_cast<std::size_t>(j)] = (code >> j) & 1u;
  return s;
}

// Random binary tree shape with K leaves (leaf k owns sensor {k}; decision
// nodes acquire nothing). Used by property tests and the risk-check command.
template <typename Rng>
TreeStructure RandomTree(int k_leaves, Rng& rng) {
  std::vector<ChildRef> pool;
  std::vector<Leaf> leaves;
  for (int k = 0; k < k_leaves; ++k) {
    leaves.push_back(Leaf{{k}, {}});
    pool.push_back(ChildRef{true, k});
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<InternalNode> nodes;
  while (pool.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    nodes.push_back(InternalNode{{}, pool[a], pool[b]});
    ChildRef merged{false, static_cast<int>(nodes.size()) - 1};
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(std::max(a, b)));
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(std::min(a, b)));
    pool.push_back(merged);
  }
  auto ordered = detail::PreorderNodes(nodes, pool.front());
  return FinalizeTree(std::move(ordered), std::move(leaves), k_leaves);
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_TREE_HPP_
