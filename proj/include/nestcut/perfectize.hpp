#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "nestcut/cluster_tree.hpp"
#include "nestcut/errors.hpp"
#include "nestcut/undirected_graph.hpp"

namespace nestcut {

enum class RootHeuristic {
  kHeavyCyclesDeep,        // rebuilt union order: heavy cycle mass ends up deep
  kCentralPrioritizedBfs,  // weight-prioritized leaf peeling; empirically better
};

struct PerfectizeOptions {
  int child_threshold = 16;  // re-nest nodes with at least this many children
  RootHeuristic root_heuristic = RootHeuristic::kCentralPrioritizedBfs;
};

struct ChildGraphEdge {
  int i = 0, j = 0;  // i < j
  double weight = 0.0;
};

// Aggregated relations between the child clusters of one parent node.
struct ChildGraph {
  int vertex_count = 0;
  std::vector<ChildGraphEdge> edges;  // ascending (i, j)
};

// Children of `node` in a canonical order (by smallest contained leaf), so
// downstream vertex numbering does not depend on merge history.
inline std::vector<int> sorted_children(const ClusterTree& tree, int node) {
  std::vector<std::pair<int, int>> keyed;
  for (int c : tree.node(node).children) {
    keyed.emplace_back(tree.subtree_leaves(c).front(), c);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  out.reserve(keyed.size());
  for (const auto& [leaf, child] : keyed) out.push_back(child);
  return out;
}

// Child-graph weights: e_{i,j} sums every input-graph edge with one endpoint
// in child i's leaves and the other in child j's.
inline ChildGraph build_child_graph(const ClusterTree& tree, int node, const UndirectedGraph& g) {
  std::vector<int> children = sorted_children(tree, node);
  std::vector<int> slot_of(tree.leaf_count(), -1);
  for (size_t s = 0; s < children.size(); ++s) {
    for (int leaf : tree.subtree_leaves(children[s])) slot_of[leaf] = static_cast<int>(s);
  }
  std::map<std::pair<int, int>, double> acc;
  for (const UndirectedEdge& e : g.edges()) {
    int a = slot_of[e.u], b = slot_of[e.v];
    if (a < 0 || b < 0 || a == b) continue;
    acc[{std::min(a, b), std::max(a, b)}] += e.weight;
  }
  ChildGraph cg;
  cg.vertex_count = static_cast<int>(children.size());
  for (const auto& [key, w] : acc) cg.edges.push_back({key.first, key.second, w});
  return cg;
}

// Maximum spanning tree via the classic reduction: replace w with B - w for
// B = 1 + max w, take the minimum spanning tree, put the originals back.
// Returns indices into cg.edges; ties resolved by ascending (i, j).
inline std::vector<int> max_spanning_tree(ChildGraph& cg) {
  if (cg.vertex_count <= 1) return {};
  double top = 0.0;
  for (const ChildGraphEdge& e : cg.edges) top = std::max(top, e.weight);
  double b = 1.0 + top;
  std::vector<double> originals;
  originals.reserve(cg.edges.size());
  for (ChildGraphEdge& e : cg.edges) {
    originals.push_back(e.weight);
    e.weight = b - e.weight;
  }
  std::vector<int> order(cg.edges.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (cg.edges[x].weight != cg.edges[y].weight) return cg.edges[x].weight < cg.edges[y].weight;
    if (cg.edges[x].i != cg.edges[y].i) return cg.edges[x].i < cg.edges[y].i;
    return cg.edges[x].j < cg.edges[y].j;
  });
  std::vector<int> parent(cg.vertex_count);
  for (int v = 0; v < cg.vertex_count; ++v) parent[v] = v;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<int> tree;
  for (int idx : order) {
    int ru = find(cg.edges[idx].i), rv = find(cg.edges[idx].j);
    if (ru == rv) continue;
    parent[ru] = rv;
    tree.push_back(idx);
  }
  for (size_t i = 0; i < cg.edges.size(); ++i) cg.edges[i].weight = originals[i];
  if (static_cast<int>(tree.size()) != cg.vertex_count - 1) {
    throw InvariantError("child graph is disconnected; children cannot share a parent cluster");
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

namespace detail {

inline std::vector<std::vector<std::pair<int, double>>> tree_adjacency(
    const ChildGraph& cg, const std::vector<int>& tree_edges) {
  std::vector<std::vector<std::pair<int, double>>> adj(cg.vertex_count);
  for (int idx : tree_edges) {
    const ChildGraphEdge& e = cg.edges[idx];
    adj[e.i].emplace_back(e.j, e.weight);
    adj[e.j].emplace_back(e.i, e.weight);
  }
  return adj;
}

// Unique tree path between two vertices, endpoints included.
inline std::vector<int> tree_path(const std::vector<std::vector<std::pair<int, double>>>& adj,
                                  int from, int to) {
  std::vector<int> prev(adj.size(), -1);
  std::vector<int> queue{from};
  prev[from] = from;
  for (size_t head = 0; head < queue.size() && prev[to] < 0; ++head) {
    int v = queue[head];
    for (const auto& [u, w] : adj[v]) {
      if (prev[u] < 0) {
        prev[u] = v;
        queue.push_back(u);
      }
    }
  }
  std::vector<int> path;
  for (int v = to; v != from; v = prev[v]) path.push_back(v);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

inline int root_heavy_cycles_deep(const ChildGraph& cg, const std::vector<int>& tree_edges) {
  int n = cg.vertex_count;
  if (n == 1) return 0;
  auto adj = tree_adjacency(cg, tree_edges);
  std::vector<char> in_tree(cg.edges.size(), 0);
  for (int idx : tree_edges) in_tree[idx] = 1;
  std::vector<int> order(cg.edges.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (cg.edges[x].weight != cg.edges[y].weight) return cg.edges[x].weight > cg.edges[y].weight;
    if (cg.edges[x].i != cg.edges[y].i) return cg.edges[x].i < cg.edges[y].i;
    return cg.edges[x].j < cg.edges[y].j;
  });
  std::vector<int> parent(n), size(n, 1);
  for (int v = 0; v < n; ++v) parent[v] = v;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int groups = n;
  int last_vertex = 0;
  std::vector<int> last_path;
  for (int idx : order) {
    const ChildGraphEdge& e = cg.edges[idx];
    if (in_tree[idx]) {
      int ru = find(e.i), rv = find(e.j);
      if (ru == rv) continue;
      // The endpoint from the smaller camp is the one being pulled in; the
      // final such vertex makes the loosest-connected root. Ties: lower id.
      if (size[ru] < size[rv]) {
        last_vertex = e.i;
      } else if (size[rv] < size[ru]) {
        last_vertex = e.j;
      } else {
        last_vertex = std::min(e.i, e.j);
      }
      last_path.clear();
      size[rv] += size[ru];
      parent[ru] = rv;
      --groups;
    } else {
      std::vector<int> path = tree_path(adj, e.i, e.j);
      bool united = false;
      for (size_t t = 0; t + 1 < path.size(); ++t) {
        int ru = find(path[t]), rv = find(path[t + 1]);
        if (ru == rv) continue;
        size[rv] += size[ru];
        parent[ru] = rv;
        --groups;
        united = true;
      }
      if (united) last_path = path;
    }
    if (groups == 1) break;
  }
  if (last_path.empty()) return last_vertex;
  // Weighted middle of the final path: minimize the imbalance of weighted
  // distances to the two ends; ties to the lower vertex id.
  std::vector<double> dist(last_path.size(), 0.0);
  for (size_t t = 0; t + 1 < last_path.size(); ++t) {
    double w = 0.0;
    for (const auto& [u, wu] : adj[last_path[t]]) {
      if (u == last_path[t + 1]) w = wu;
    }
    dist[t + 1] = dist[t] + w;
  }
  double total = dist.back();
  int best = last_path[0];
  double best_gap = std::abs(total);
  for (size_t t = 0; t < last_path.size(); ++t) {
    double gap = std::abs(dist[t] - (total - dist[t]));
    if (gap < best_gap || (gap == best_gap && last_path[t] < best)) {
      best = last_path[t];
      best_gap = gap;
    }
  }
  return best;
}

inline int root_central_bfs(const ChildGraph& cg, const std::vector<int>& tree_edges) {
  int n = cg.vertex_count;
  if (n == 1) return 0;
  auto adj = tree_adjacency(cg, tree_edges);
  std::vector<int> togo(n);
  for (int v = 0; v < n; ++v) togo[v] = static_cast<int>(adj[v].size());
  // Max-heap on (priority, -vertex): heaviest first, ties to the lower id.
  std::priority_queue<std::pair<double, int>> queue;
  int last_pushed = -1;
  for (int v = 0; v < n; ++v) {
    if (togo[v] == 1) {
      queue.push({adj[v][0].second, -v});
      last_pushed = v;
    }
  }
  while (!queue.empty()) {
    int v = -queue.top().second;
    queue.pop();
    for (const auto& [u, w] : adj[v]) {
      if (--togo[u] == 1) {
        queue.push({w, -u});
        last_pushed = u;
      }
    }
  }
  return last_pushed;
}

}  // namespace detail

inline int select_root(const ChildGraph& cg, const std::vector<int>& tree_edges,
                       RootHeuristic heuristic) {
  if (cg.vertex_count == 0) throw InvariantError("empty child graph has no root");
  return heuristic == RootHeuristic::kHeavyCyclesDeep
             ? detail::root_heavy_cycles_deep(cg, tree_edges)
             : detail::root_central_bfs(cg, tree_edges);
}

namespace detail {

// Re-nests the children of one overloaded node along its rooted spanning
// tree. Every spanning-tree vertex with subordinates gets a fresh wrapper
// node holding that child plus the wrappers (or bare children) of its
// subordinates; leaf-to-root alpha monotonicity is kept by interpolating
// wrapper alphas between the parent's alpha and the lowest child alpha.
inline void renest_node(ClusterTree& tree, int node, const UndirectedGraph& g,
                        const PerfectizeOptions& opt) {
  std::vector<int> children = sorted_children(tree, node);
  int n = static_cast<int>(children.size());
  ChildGraph cg = build_child_graph(tree, node, g);
  std::vector<int> spanning = max_spanning_tree(cg);
  int root = select_root(cg, spanning, opt.root_heuristic);
  auto adj = tree_adjacency(cg, spanning);

  std::vector<int> depth(n, -1), bfs{root};
  depth[root] = 0;
  int deepest = 0;
  std::vector<std::vector<int>> below(n);  // spanning-tree children per slot
  for (size_t head = 0; head < bfs.size(); ++head) {
    int v = bfs[head];
    for (const auto& [u, w] : adj[v]) {
      if (depth[u] >= 0) continue;
      depth[u] = depth[v] + 1;
      deepest = std::max(deepest, depth[u]);
      below[v].push_back(u);
      bfs.push_back(u);
    }
  }

  double lo = tree.node(node).alpha;
  double hi = std::numeric_limits<double>::infinity();
  for (int c : children) hi = std::min(hi, tree.node(c).alpha);
  if (!std::isfinite(hi)) hi = lo + 2.0;  // all children are leaves; any span works

  // Slots of each spanning subtree, to hand entire branches to wrappers.
  std::vector<std::vector<int>> subtree(n);
  for (size_t i = bfs.size(); i-- > 0;) {
    int v = bfs[i];
    subtree[v].push_back(v);
    for (int u : below[v]) {
      subtree[v].insert(subtree[v].end(), subtree[u].begin(), subtree[u].end());
    }
  }

  // Top-down: wrap the root branch first, then carve deeper branches out.
  std::vector<std::pair<int, int>> stack{{root, node}};  // (slot, tree parent)
  while (!stack.empty()) {
    auto [slot, parent] = stack.back();
    stack.pop_back();
    if (below[slot].empty()) continue;  // bare child, stays where it is
    std::vector<int> adopt;
    adopt.reserve(subtree[slot].size());
    for (int s : subtree[slot]) adopt.push_back(children[s]);
    double alpha = lo + (hi - lo) * (depth[slot] + 1) / (deepest + 1);
    int wrap = tree.splice_node(parent, adopt, alpha);
    tree.mark_synthesized(wrap);
    for (int u : below[slot]) stack.push_back({u, wrap});
  }
}

}  // namespace detail

// Rewrites every non-synthesized inner node with at least child_threshold
// children, bottom-up. Leaves and cluster memberships of untouched nodes are
// preserved; a second application is a no-op.
inline ClusterTree& perfectize(ClusterTree& tree, const UndirectedGraph& g,
                               const PerfectizeOptions& opt = {}) {
  if (opt.child_threshold < 3) throw InvariantError("child threshold must be at least 3");
  if (g.vertex_count() != tree.leaf_count()) {
    throw InvariantError("input graph does not match the tree's leaf set");
  }
  std::vector<int> post;  // children before parents; fake root excluded
  std::vector<std::pair<int, size_t>> walk{{tree.fake_root(), 0}};
  while (!walk.empty()) {
    int id = walk.back().first;
    const std::vector<int>& kids = tree.node(id).children;
    if (walk.back().second < kids.size()) {
      walk.push_back({kids[walk.back().second++], 0});
    } else {
      if (!tree.is_leaf(id) && id != tree.fake_root()) post.push_back(id);
      walk.pop_back();
    }
  }
  for (int id : post) {
    if (tree.node(id).synthesized) continue;
    if (static_cast<int>(tree.node(id).children.size()) < opt.child_threshold) continue;
    detail::renest_node(tree, id, g, opt);
  }
  return tree;
}

}  // namespace nestcut
