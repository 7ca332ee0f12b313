#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nestcut/errors.hpp"

namespace nestcut {

// One node of the global decomposition tree. Leaves are artifacts and carry
// their index; inner nodes are clusters annotated with the alpha at which
// they form. The fake root sits above everything at alpha = -infinity.
struct TreeNode {
  double alpha = 0.0;
  int parent = -1;
  std::vector<int> children;
  int leaf_artifact = -1;  // >= 0 exactly for leaves
  std::vector<int> heads;  // traversal sources that claimed this cluster
  int component = -1;      // disjoint component id, -1 on the fake root
  bool synthesized = false;
  long long leaf_count = 1;
};

inline constexpr const char* kClusterTreeHeader = "nestcut-cluster-tree v1";

// Rooted forest of clusters over a fixed leaf set, at most one node per
// distinct membership. merge_partition folds in a flat clustering produced
// at any alpha, in any order; along every path alpha strictly decreases
// toward the root, which is what makes arbitrary-order merging sound.
class ClusterTree {
 public:
  ClusterTree() = default;

  ClusterTree(std::vector<std::string> labels, std::vector<int> components)
      : labels_(std::move(labels)) {
    if (components.size() != labels_.size()) {
      throw InvariantError("label/component count mismatch");
    }
    int leaves = static_cast<int>(labels_.size());
    nodes_.resize(leaves + 1);
    for (int i = 0; i < leaves; ++i) {
      nodes_[i].leaf_artifact = i;
      nodes_[i].alpha = std::numeric_limits<double>::infinity();
      nodes_[i].parent = leaves;
      nodes_[i].component = components[i];
      nodes_[leaves].children.push_back(i);
    }
    nodes_[leaves].alpha = -std::numeric_limits<double>::infinity();
    nodes_[leaves].leaf_count = leaves;
  }

  int leaf_count() const { return static_cast<int>(labels_.size()); }
  int fake_root() const { return leaf_count(); }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int id) const { return nodes_[id]; }
  const std::string& label(int leaf) const { return labels_[leaf]; }
  const std::vector<std::string>& labels() const { return labels_; }
  long long location_touches() const { return location_touches_; }

  bool is_leaf(int id) const { return nodes_[id].leaf_artifact >= 0; }

  // Mutable alpha access for post-processing passes that re-anchor
  // synthesized levels; structural edits stay inside this class.
  void set_alpha(int id, double alpha) { nodes_[id].alpha = alpha; }

  void mark_synthesized(int id) { nodes_[id].synthesized = true; }

  // Splices a fresh inner node between `parent_id` and the given children,
  // which must all be current children of `parent_id`. Used by the merge
  // below and by the perfectization pass.
  int splice_node(int parent_id, const std::vector<int>& adopt, double alpha) {
    if (adopt.empty()) throw InvariantError("splice with no children");
    int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    TreeNode& fresh = nodes_.back();
    fresh.alpha = alpha;
    fresh.parent = parent_id;
    fresh.leaf_artifact = -1;
    fresh.component = nodes_[adopt.front()].component;
    fresh.leaf_count = 0;
    std::vector<char> taken(nodes_.size(), 0);
    for (int c : adopt) {
      if (nodes_[c].parent != parent_id || taken[c]) {
        throw InvariantError("splice children must be distinct children of the parent");
      }
      taken[c] = 1;
      fresh.children.push_back(c);
      fresh.leaf_count += nodes_[c].leaf_count;
      nodes_[c].parent = id;
    }
    std::vector<int>& siblings = nodes_[parent_id].children;
    siblings.erase(std::remove_if(siblings.begin(), siblings.end(),
                                  [&](int c) { return taken[c]; }),
                   siblings.end());
    siblings.push_back(id);
    return id;
  }

  // Folds one flat clustering at `alpha` into the tree. heads[i] annotates
  // clusters[i]; singleton clusters are not materialized. A membership that
  // already exists is reaffirmed instead of duplicated: its alpha and heads
  // are replaced when the new alpha is higher, so the stored annotation is
  // always the highest alpha at which the membership was observed and the
  // final tree does not depend on merge order.
  void merge_partition(double alpha, const std::vector<std::vector<int>>& clusters,
                       const std::vector<std::vector<int>>& heads = {}) {
    if (!std::isfinite(alpha)) throw InvariantError("merge needs a finite alpha");
    if (!heads.empty() && heads.size() != clusters.size()) {
      throw InvariantError("heads/clusters count mismatch");
    }
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
      const std::vector<int>& members = clusters[ci];
      if (members.size() < 2) continue;
      merge_cluster(alpha, members,
                    heads.empty() ? std::vector<int>{} : heads[ci]);
    }
  }

  // Checks every structural invariant; tests lean on this after mutations.
  void validate() const {
    int leaves = leaf_count();
    std::vector<long long> counted(nodes_.size(), 0);
    std::vector<char> seen(leaves, 0);
    for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
      const TreeNode& n = nodes_[id];
      if (id < leaves) {
        if (n.leaf_artifact != id || !n.children.empty() || n.leaf_count != 1) {
          throw InvariantError("leaf node " + std::to_string(id) + " malformed");
        }
        seen[id] = 1;
      }
      if (id == fake_root()) {
        if (n.parent != -1) throw InvariantError("fake root has a parent");
      } else if (n.parent < 0 || n.parent >= static_cast<int>(nodes_.size())) {
        throw InvariantError("node " + std::to_string(id) + " has no parent");
      } else {
        const TreeNode& p = nodes_[n.parent];
        if (std::find(p.children.begin(), p.children.end(), id) == p.children.end()) {
          throw InvariantError("parent/child link broken at node " + std::to_string(id));
        }
        if (!(p.alpha < n.alpha)) {
          throw InvariantError("alpha fails to decrease toward the root at node " +
                               std::to_string(id));
        }
      }
      long long from_children = 0;
      for (int c : n.children) {
        if (nodes_[c].parent != id) {
          throw InvariantError("child link broken at node " + std::to_string(id));
        }
        from_children += nodes_[c].leaf_count;
      }
      counted[id] = n.children.empty() ? n.leaf_count : from_children;
      if (!n.children.empty() && counted[id] != n.leaf_count) {
        throw InvariantError("leaf count stale at node " + std::to_string(id));
      }
      if (id >= leaves && id != fake_root() && n.children.empty()) {
        throw InvariantError("inner node " + std::to_string(id) + " has no children");
      }
    }
    for (int l = 0; l < leaves; ++l) {
      if (!seen[l]) throw InvariantError("leaf missing");
    }
  }

  // Depth of the deepest leaf under the fake root.
  int height() const {
    std::vector<int> depth(nodes_.size(), 0);
    int best = 0;
    // Nodes are appended after their parent exists, except fake-root links;
    // a simple forward pass over ids resolves depths only if parents precede
    // children, which creation order guarantees for inner nodes but not for
    // leaves; walk explicitly instead.
    for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
      int d = 0;
      for (int v = id; nodes_[v].parent >= 0; v = nodes_[v].parent) ++d;
      depth[id] = d;
      best = std::max(best, d);
    }
    return best;
  }

  // Canonical structural summary: children ordered by smallest contained
  // leaf, alphas printed at full precision. Two trees with equal
  // fingerprints are the same decomposition.
  std::string fingerprint(bool include_alpha = true) const {
    std::string out;
    fingerprint_node(fake_root(), include_alpha, out);
    return out;
  }

  void save(std::ostream& out) const {
    out << kClusterTreeHeader << '\n';
    out << "leaves " << leaf_count() << '\n';
    for (int l = 0; l < leaf_count(); ++l) {
      out << "v " << l << ' ' << labels_[l] << ' ' << nodes_[l].component << ' '
          << nodes_[l].parent << '\n';
    }
    out << "inner " << (node_count() - leaf_count() - 1) << '\n';
    char buf[64];
    for (int id = leaf_count() + 1; id < node_count(); ++id) {
      const TreeNode& n = nodes_[id];
      std::snprintf(buf, sizeof buf, "%.17g", n.alpha);
      out << "n " << id << ' ' << n.parent << ' ' << buf << ' ' << (n.synthesized ? 1 : 0)
          << ' ' << n.component << " heads " << n.heads.size();
      for (int h : n.heads) out << ' ' << h;
      out << '\n';
    }
  }

  static ClusterTree load(std::istream& in, const std::string& source_name) {
    std::string line;
    int line_no = 0;
    auto next_line = [&]() {
      if (!std::getline(in, line)) {
        throw ParseError(source_name, line_no + 1, "unexpected end of file");
      }
      ++line_no;
    };
    next_line();
    if (line != kClusterTreeHeader) {
      throw FormatError(source_name + ": expected header '" + std::string(kClusterTreeHeader) +
                        "'");
    }
    next_line();
    int leaves = 0;
    {
      std::istringstream ls(line);
      std::string tag;
      if (!(ls >> tag >> leaves) || tag != "leaves" || leaves < 0) {
        throw ParseError(source_name, line_no, "expected: leaves <count>");
      }
    }
    std::vector<std::string> labels(leaves);
    std::vector<int> components(leaves, -1);
    std::vector<int> leaf_parent(leaves, leaves);
    for (int i = 0; i < leaves; ++i) {
      next_line();
      std::istringstream ls(line);
      std::string tag;
      int id = -1;
      if (!(ls >> tag >> id) || tag != "v" || id != i ||
          !(ls >> labels[i] >> components[i] >> leaf_parent[i])) {
        throw ParseError(source_name, line_no, "expected: v <id> <label> <component> <parent>");
      }
    }
    ClusterTree tree(std::move(labels), std::move(components));
    next_line();
    int inner = 0;
    {
      std::istringstream ls(line);
      std::string tag;
      if (!(ls >> tag >> inner) || tag != "inner" || inner < 0) {
        throw ParseError(source_name, line_no, "expected: inner <count>");
      }
    }
    for (int i = 0; i < inner; ++i) {
      next_line();
      std::istringstream ls(line);
      std::string tag, heads_tag;
      int id = -1, parent = -1, synth = 0, component = -1;
      double alpha = 0.0;
      size_t head_count = 0;
      if (!(ls >> tag >> id >> parent >> alpha >> synth >> component >> heads_tag >>
            head_count) ||
          tag != "n" || heads_tag != "heads" || id != tree.node_count()) {
        throw ParseError(source_name, line_no, "expected: n <id> <parent> <alpha> ...");
      }
      // Splicing re-parents old nodes under new ones, so an inner parent id
      // may be larger than the child's; range-check after the last line.
      if (parent == id || parent < tree.leaf_count()) {
        throw ParseError(source_name, line_no, "inner node parent out of range");
      }
      TreeNode fresh;
      fresh.alpha = alpha;
      fresh.parent = parent;
      fresh.synthesized = synth != 0;
      fresh.component = component;
      fresh.leaf_count = 0;
      for (size_t h = 0; h < head_count; ++h) {
        int head = -1;
        if (!(ls >> head)) throw ParseError(source_name, line_no, "truncated head list");
        fresh.heads.push_back(head);
      }
      tree.nodes_.push_back(std::move(fresh));
    }
    for (int id = leaves + 1; id < tree.node_count(); ++id) {
      if (tree.nodes_[id].parent >= tree.node_count()) {
        throw ParseError(source_name, 0,
                         "inner node " + std::to_string(id) + " parent out of range");
      }
    }
    for (int l = 0; l < leaves; ++l) {
      if (leaf_parent[l] < leaves || leaf_parent[l] >= tree.node_count()) {
        throw ParseError(source_name, 0, "leaf " + std::to_string(l) + " parent out of range");
      }
      tree.nodes_[l].parent = leaf_parent[l];
    }
    for (auto& n : tree.nodes_) n.children.clear();
    for (int id = 0; id < tree.node_count(); ++id) {
      if (id == tree.fake_root()) continue;
      tree.nodes_[tree.nodes_[id].parent].children.push_back(id);
    }
    // Leaf counts bottom-up; id order is no guide (see splicing note above).
    std::vector<std::pair<int, size_t>> walk;
    walk.push_back({tree.fake_root(), 0});
    while (!walk.empty()) {
      int id = walk.back().first;
      const std::vector<int>& kids = tree.nodes_[id].children;
      if (walk.back().second < kids.size()) {
        walk.push_back({kids[walk.back().second++], 0});
      } else {
        if (!kids.empty()) {
          long long sum = 0;
          for (int c : kids) sum += tree.nodes_[c].leaf_count;
          tree.nodes_[id].leaf_count = sum;
        }
        walk.pop_back();
      }
    }
    try {
      tree.validate();
    } catch (const InvariantError& err) {
      throw ParseError(source_name, 0, std::string("inconsistent tree: ") + err.what());
    }
    return tree;
  }

  // Leaves of the subtree under id, ascending.
  std::vector<int> subtree_leaves(int id) const {
    std::vector<int> stack{id}, out;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (is_leaf(v)) {
        out.push_back(v);
      } else {
        for (int c : nodes_[v].children) stack.push_back(c);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void merge_cluster(double alpha, const std::vector<int>& members,
                     const std::vector<int>& cluster_heads) {
    int parent_id = -2;
    std::vector<int> attach;
    std::vector<char> attached(nodes_.size(), 0);
    for (int leaf : members) {
      if (leaf < 0 || leaf >= leaf_count()) {
        throw InvariantError("cluster member " + std::to_string(leaf) + " is not a leaf");
      }
      int v = leaf;
      while (nodes_[nodes_[v].parent].alpha >= alpha) {
        v = nodes_[v].parent;
        ++location_touches_;
      }
      ++location_touches_;
      if (parent_id == -2) {
        parent_id = nodes_[v].parent;
      } else if (nodes_[v].parent != parent_id) {
        throw InvariantError("cluster at alpha " + std::to_string(alpha) +
                             " straddles two insertion points; nesting violated");
      }
      if (!attached[v]) {
        attached[v] = 1;
        attach.push_back(v);
      }
    }
    long long covered = 0;
    for (int a : attach) covered += nodes_[a].leaf_count;
    if (covered != static_cast<long long>(members.size())) {
      throw InvariantError("cluster at alpha " + std::to_string(alpha) +
                           " splits an existing cluster; nesting violated");
    }
    if (attach.size() == 1 && !is_leaf(attach[0])) {
      // Same membership already in the tree: keep the annotation from the
      // highest alpha that observed it.
      TreeNode& existing = nodes_[attach[0]];
      if (alpha > existing.alpha) {
        existing.alpha = alpha;
        existing.heads = cluster_heads;
      }
      return;
    }
    if (parent_id != fake_root() && covered == nodes_[parent_id].leaf_count) {
      // The walk stopped just below a node with this exact membership, so
      // alpha exceeds its annotation; take over as the highest observation.
      nodes_[parent_id].alpha = alpha;
      nodes_[parent_id].heads = cluster_heads;
      return;
    }
    for (int a : attach) {
      if (!is_leaf(a) && nodes_[a].alpha == alpha) {
        throw InvariantError("two incompatible clusters claim alpha " + std::to_string(alpha));
      }
    }
    int id = splice_node(parent_id, attach, alpha);
    nodes_[id].heads = cluster_heads;
  }

  void fingerprint_node(int id, bool include_alpha, std::string& out) const {
    const TreeNode& n = nodes_[id];
    if (is_leaf(id)) {
      out += 'l';
      out += std::to_string(n.leaf_artifact);
      return;
    }
    out += '(';
    if (id != fake_root()) {
      if (include_alpha) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "a=%.17g%s ", n.alpha, n.synthesized ? "*" : "");
        out += buf;
      } else if (n.synthesized) {
        out += "* ";
      }
    }
    std::vector<std::pair<int, int>> ordered;  // (smallest leaf, child)
    for (int c : n.children) ordered.emplace_back(smallest_leaf(c), c);
    std::sort(ordered.begin(), ordered.end());
    for (size_t i = 0; i < ordered.size(); ++i) {
      if (i) out += ' ';
      fingerprint_node(ordered[i].second, include_alpha, out);
    }
    out += ')';
  }

  int smallest_leaf(int id) const {
    if (is_leaf(id)) return id;
    int best = -1;
    for (int c : nodes_[id].children) {
      int s = smallest_leaf(c);
      if (best < 0 || s < best) best = s;
    }
    return best;
  }

  std::vector<TreeNode> nodes_;
  std::vector<std::string> labels_;
  long long location_touches_ = 0;
};

}  // namespace nestcut
