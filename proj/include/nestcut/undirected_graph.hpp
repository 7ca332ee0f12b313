#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nestcut/errors.hpp"

namespace nestcut {

struct UndirectedEdge {
  int u = -1;
  int v = -1;
  double weight = 0.0;
};

// Undirected weighted graph the clustering stages operate on. Vertices are
// dense 0..n-1 and usually carry class labels from the relations input.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(int vertex_count) : labels_(vertex_count) {}

  int add_vertex(std::string label) {
    labels_.push_back(std::move(label));
    return vertex_count() - 1;
  }

  // Endpoints must differ; self loops have no meaning after normalization.
  void add_edge(int u, int v, double weight) {
    if (u < 0 || v < 0 || u >= vertex_count() || v >= vertex_count()) {
      throw InvariantError("edge endpoint outside 0.." + std::to_string(vertex_count() - 1));
    }
    if (u == v) throw InvariantError("self loop on vertex " + std::to_string(u));
    if (!(weight > 0.0)) {
      throw InvariantError("non-positive edge weight on (" + std::to_string(u) + "," +
                           std::to_string(v) + ")");
    }
    edges_.push_back(UndirectedEdge{u, v, weight});
  }

  int vertex_count() const { return static_cast<int>(labels_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<UndirectedEdge>& edges() const { return edges_; }
  const std::string& label(int v) const { return labels_[v]; }
  const std::vector<std::string>& labels() const { return labels_; }
  void set_label(int v, std::string label) { labels_[v] = std::move(label); }

  // Sum of incident edge weights per vertex.
  std::vector<double> adjacent_weight() const {
    std::vector<double> sum(vertex_count(), 0.0);
    for (const UndirectedEdge& e : edges_) {
      sum[e.u] += e.weight;
      sum[e.v] += e.weight;
    }
    return sum;
  }

  std::vector<std::vector<std::pair<int, double>>> adjacency() const {
    std::vector<std::vector<std::pair<int, double>>> adj(vertex_count());
    for (const UndirectedEdge& e : edges_) {
      adj[e.u].emplace_back(e.v, e.weight);
      adj[e.v].emplace_back(e.u, e.weight);
    }
    return adj;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<UndirectedEdge> edges_;
};

// Component id per vertex, numbered 0.. by smallest contained vertex index.
inline std::vector<int> components(const UndirectedGraph& g) {
  int n = g.vertex_count();
  auto adj = g.adjacency();
  std::vector<int> comp(n, -1);
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [w, weight] : adj[v]) {
        (void)weight;
        if (comp[w] < 0) {
          comp[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

inline constexpr const char* kNormalizedGraphHeader = "nestcut-normalized-graph v1";

// Self-describing stage file:
//
//   nestcut-normalized-graph v1
//   vertices <n>
//   v <index> <label>
//   edges <m>
//   e <u> <v> <weight>
//
// Weights use %.17g so a dump/load round trip is value-exact.
inline void save_undirected_graph(const UndirectedGraph& g, std::ostream& out) {
  out << kNormalizedGraphHeader << '\n';
  out << "vertices " << g.vertex_count() << '\n';
  for (int v = 0; v < g.vertex_count(); ++v) {
    out << "v " << v << ' ' << g.label(v) << '\n';
  }
  out << "edges " << g.edge_count() << '\n';
  char buf[64];
  for (const UndirectedEdge& e : g.edges()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.weight);
    out << "e " << e.u << ' ' << e.v << ' ' << buf << '\n';
  }
}

inline UndirectedGraph load_undirected_graph(std::istream& in, const std::string& source_name) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "empty file");
  if (line != kNormalizedGraphHeader) {
    throw FormatError(source_name + ": expected header '" + std::string(kNormalizedGraphHeader) +
                      "', found '" + line + "'");
  }
  auto next_tokens = [&](const char* what) {
    if (!std::getline(in, line)) throw ParseError(source_name, line_no + 1, std::string("missing ") + what);
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    return tok;
  };

  auto head = next_tokens("vertices line");
  if (head.size() != 2 || head[0] != "vertices") throw ParseError(source_name, line_no, "expected: vertices <n>");
  int n = std::stoi(head[1]);
  if (n < 0) throw ParseError(source_name, line_no, "negative vertex count");
  UndirectedGraph g(n);
  for (int i = 0; i < n; ++i) {
    auto tok = next_tokens("vertex line");
    if (tok.size() != 3 || tok[0] != "v") throw ParseError(source_name, line_no, "expected: v <index> <label>");
    int index = std::stoi(tok[1]);
    if (index != i) throw ParseError(source_name, line_no, "vertex indices must be dense and ordered");
    g.set_label(i, tok[2]);
  }
  auto ehead = next_tokens("edges line");
  if (ehead.size() != 2 || ehead[0] != "edges") throw ParseError(source_name, line_no, "expected: edges <m>");
  int m = std::stoi(ehead[1]);
  for (int i = 0; i < m; ++i) {
    auto tok = next_tokens("edge line");
    if (tok.size() != 4 || tok[0] != "e") throw ParseError(source_name, line_no, "expected: e <u> <v> <weight>");
    g.add_edge(std::stoi(tok[1]), std::stoi(tok[2]), std::stod(tok[3]));
  }
  return g;
}

// Restriction of g to the vertices of one component, preserving relative
// vertex order. to_local maps original index -> local index or -1.
struct ComponentView {
  UndirectedGraph graph;
  std::vector<int> to_original;
};

inline ComponentView component_subgraph(const UndirectedGraph& g, const std::vector<int>& comp,
                                        int component_id) {
  ComponentView view;
  std::vector<int> to_local(g.vertex_count(), -1);
  for (int v = 0; v < g.vertex_count(); ++v) {
    if (comp[v] == component_id) {
      to_local[v] = view.graph.add_vertex(g.label(v));
      view.to_original.push_back(v);
    }
  }
  for (const UndirectedEdge& e : g.edges()) {
    if (to_local[e.u] >= 0 && to_local[e.v] >= 0) {
      view.graph.add_edge(to_local[e.u], to_local[e.v], e.weight);
    }
  }
  return view;
}

}  // namespace nestcut
