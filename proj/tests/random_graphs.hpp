#pragma once

// Deterministic random instance generators shared by the test suites.

#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nestcut/relation_graph.hpp"
#include "nestcut/undirected_graph.hpp"

namespace testgen {

// Connected graph: a random spanning tree plus extra distinct edges.
// Weights are integers in [1, max_weight] stored as doubles.
inline nestcut::UndirectedGraph random_connected_graph(std::mt19937& rng, int n, int extra_edges,
                                                       int max_weight) {
  nestcut::UndirectedGraph g(0);
  for (int i = 0; i < n; ++i) g.add_vertex("v" + std::to_string(i));
  if (n <= 1) return g;
  std::uniform_int_distribution<int> weight(1, max_weight);
  std::set<std::pair<int, int>> used;
  for (int v = 1; v < n; ++v) {
    int parent = std::uniform_int_distribution<int>(0, v - 1)(rng);
    used.emplace(parent, v);
    g.add_edge(parent, v, weight(rng));
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int i = 0; i < extra_edges; ++i) {
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    auto key = std::minmax(u, v);
    if (!used.insert({key.first, key.second}).second) continue;
    g.add_edge(key.first, key.second, weight(rng));
  }
  return g;
}

// Same shape, real weights uniform in [lo, hi].
inline nestcut::UndirectedGraph random_real_graph(std::mt19937& rng, int n, int extra_edges,
                                                  double lo, double hi) {
  nestcut::UndirectedGraph g(0);
  for (int i = 0; i < n; ++i) g.add_vertex("v" + std::to_string(i));
  if (n <= 1) return g;
  std::uniform_real_distribution<double> weight(lo, hi);
  std::set<std::pair<int, int>> used;
  for (int v = 1; v < n; ++v) {
    int parent = std::uniform_int_distribution<int>(0, v - 1)(rng);
    used.emplace(parent, v);
    g.add_edge(parent, v, weight(rng));
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int i = 0; i < extra_edges; ++i) {
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    auto key = std::minmax(u, v);
    if (!used.insert({key.first, key.second}).second) continue;
    g.add_edge(key.first, key.second, weight(rng));
  }
  return g;
}

// Directed relation graph over classes only, random arc counts in [1, 9].
inline nestcut::RelationGraph random_relation_graph(std::mt19937& rng, int classes, int arcs) {
  nestcut::RelationGraph g;
  for (int i = 0; i < classes; ++i) g.add_class("C" + std::to_string(i));
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::uniform_int_distribution<int> count(1, 9);
  std::uniform_int_distribution<int> kind(0, nestcut::kRelationKindCount - 1);
  for (int i = 0; i < arcs; ++i) {
    int src = pick(rng), dst = pick(rng);
    if (src == dst) continue;
    g.add_arc(src, dst, static_cast<nestcut::RelationKind>(kind(rng)), count(rng));
  }
  return g;
}

}  // namespace testgen
