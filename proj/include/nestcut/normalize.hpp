#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "nestcut/relation_graph.hpp"
#include "nestcut/undirected_graph.hpp"

namespace nestcut {

// Fan-in leverage: kNone divides each incoming arc by the destination's total
// incoming weight S_j; kLog additionally multiplies by max(ln S_j, clamp), so
// heavily used destinations keep some of their pull instead of being flattened
// to a unit share.
enum class Leverage { kNone, kLog };

// Granularity handling when member-level relations are present.
// kLiftThenNormalize aggregates arcs to class level first and normalizes the
// aggregate; kNormalizeThenLift normalizes per member, derives member-level
// undirected edges, then sums them per class pair. The two differ whenever
// members of one class have unequal fan-in.
enum class LiftOrder { kLiftThenNormalize, kNormalizeThenLift };

struct NormalizeConfig {
  Leverage leverage = Leverage::kNone;
  double log_clamp = 1.0;
  LiftOrder lift_order = LiftOrder::kNormalizeThenLift;
};

// Undirected edges below this after assembly are dropped: they are rounding
// dust and would otherwise force the integer scaler to waste range on them.
inline constexpr double kEdgeFloor = 1e-12;

namespace detail {

// Pair key with u < v so both arc directions land on one accumulator.
inline std::pair<int, int> edge_key(int a, int b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

inline UndirectedGraph assemble_edges(std::vector<std::string> labels,
                                      const std::map<std::pair<int, int>, double>& acc) {
  UndirectedGraph g(0);
  for (std::string& l : labels) g.add_vertex(std::move(l));
  for (const auto& [key, weight] : acc) {
    if (weight < kEdgeFloor) continue;
    g.add_edge(key.first, key.second, weight);
  }
  return g;
}

}  // namespace detail

// Directed-to-undirected normalization at the graph's own granularity.
// Self loops are discarded. For each destination j with incoming weight
// S_j = sum_i w(i,j), every arc is rescaled to w(i,j)/S_j (times the log
// leverage factor), then opposite directions are added:
//   u(i,j) = w~(i,j) + w~(j,i).
// Per-vertex incoming mass is therefore exactly 1 (or max(ln S_j, clamp))
// for every vertex with any incoming arc.
inline UndirectedGraph normalize(const RelationGraph& g, Leverage leverage,
                                 double log_clamp = 1.0) {
  int n = g.artifact_count();
  std::vector<double> fan_in(n, 0.0);
  for (const RelationArc& arc : g.arcs()) {
    if (arc.src == arc.dst || arc.weight <= 0.0) continue;
    fan_in[arc.dst] += arc.weight;
  }
  std::vector<double> factor(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (fan_in[j] <= 0.0) continue;
    double leveraged = leverage == Leverage::kLog
                           ? std::max(std::log(fan_in[j]), log_clamp)
                           : 1.0;
    factor[j] = leveraged / fan_in[j];
  }
  std::map<std::pair<int, int>, double> acc;
  for (const RelationArc& arc : g.arcs()) {
    if (arc.src == arc.dst || arc.weight <= 0.0) continue;
    acc[detail::edge_key(arc.src, arc.dst)] += arc.weight * factor[arc.dst];
  }
  std::vector<std::string> labels;
  labels.reserve(n);
  for (int i = 0; i < n; ++i) labels.push_back(g.label(i));
  return detail::assemble_edges(std::move(labels), acc);
}

// Aggregates member-level arcs up to class level, keeping the direction.
// Arcs between members of one class become class self loops here; the
// follow-up normalize() discards them, which is where intra-class relations
// intentionally leave the picture.
inline RelationGraph lift_directed(const RelationGraph& g) {
  RelationGraph out;
  for (int slot = 0; slot < g.class_count(); ++slot) {
    out.add_class(g.label(g.class_at_slot(slot)));
  }
  std::map<std::pair<int, int>, std::pair<double, RelationKind>> acc;
  for (const RelationArc& arc : g.arcs()) {
    if (arc.weight <= 0.0) continue;
    int src = g.class_slot(g.owner_of(arc.src));
    int dst = g.class_slot(g.owner_of(arc.dst));
    auto key = std::make_pair(src, dst);
    auto it = acc.find(key);
    if (it == acc.end()) {
      acc.emplace(key, std::make_pair(arc.weight, arc.kind));
    } else {
      it->second.first += arc.weight;
      it->second.second = std::min(it->second.second, arc.kind);
    }
  }
  for (const auto& [key, value] : acc) {
    out.add_arc(key.first, key.second, value.second, value.first);
  }
  return out;
}

// Sums member-level undirected edges per class pair. member_level must have
// one vertex per artifact of g, in artifact order. Class self loops
// (edges between members of one class) are dropped.
inline UndirectedGraph lift_undirected(const RelationGraph& g,
                                       const UndirectedGraph& member_level) {
  if (member_level.vertex_count() != g.artifact_count()) {
    throw InvariantError("lift_undirected: vertex count does not match artifact count");
  }
  std::map<std::pair<int, int>, double> acc;
  for (const UndirectedEdge& e : member_level.edges()) {
    int cu = g.class_slot(g.owner_of(e.u));
    int cv = g.class_slot(g.owner_of(e.v));
    if (cu == cv) continue;
    acc[detail::edge_key(cu, cv)] += e.weight;
  }
  std::vector<std::string> labels;
  labels.reserve(g.class_count());
  for (int slot = 0; slot < g.class_count(); ++slot) {
    labels.push_back(g.label(g.class_at_slot(slot)));
  }
  return detail::assemble_edges(std::move(labels), acc);
}

// Front half of the pipeline after kind merging: produces the class-level
// undirected graph the clustering search runs on. Vertices are the classes
// in declaration order, including classes that end up isolated.
inline UndirectedGraph build_class_graph(const RelationGraph& merged,
                                         const NormalizeConfig& cfg) {
  if (cfg.lift_order == LiftOrder::kLiftThenNormalize) {
    return normalize(lift_directed(merged), cfg.leverage, cfg.log_clamp);
  }
  UndirectedGraph member_level = normalize(merged, cfg.leverage, cfg.log_clamp);
  return lift_undirected(merged, member_level);
}

}  // namespace nestcut
