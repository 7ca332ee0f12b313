#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nestcut/errors.hpp"
#include "nestcut/max_flow.hpp"
#include "nestcut/undirected_graph.hpp"

namespace nestcut {

// Real-weighted graph mapped onto integer capacities. scale is the largest
// power of two keeping (max adjacent weight sum + alpha) * scale within the
// flow solver's headroom, so relative rounding error per edge stays around
// 2^-50 for typical weight spreads. Edges that round to zero are dropped and
// counted; alpha may round to zero too, which correctly degenerates to the
// one-cluster-per-component regime.
struct ScaledNetwork {
  int base_vertex_count = 0;  // the artificial sink gets index base_vertex_count
  double scale = 1.0;
  Cap alpha_scaled = 0;
  long long dropped_edges = 0;
  std::vector<CapEdge> edges;  // scaled base edges, insertion order preserved
};

inline ScaledNetwork scale_to_integer(const UndirectedGraph& g, double alpha,
                                      double forced_scale = 0.0) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvariantError("alpha must be finite and non-negative");
  }
  ScaledNetwork net;
  net.base_vertex_count = g.vertex_count();
  // The artificial sink carries one alpha edge per base vertex, and it is an
  // ordinary vertex in cut-tree constructions, so its load counts too.
  double max_load = std::max(alpha, alpha * g.vertex_count());
  for (double sum : g.adjacent_weight()) max_load = std::max(max_load, sum + alpha);

  if (forced_scale > 0.0) {
    net.scale = forced_scale;
  } else if (max_load <= 0.0) {
    net.scale = 1.0;
  } else {
    int exponent = 0;
    std::frexp(static_cast<double>(kCapacityHeadroom) / max_load, &exponent);
    net.scale = std::ldexp(1.0, exponent - 1);
    while (max_load * (net.scale * 2.0) <= static_cast<double>(kCapacityHeadroom)) net.scale *= 2.0;
    while (max_load * net.scale > static_cast<double>(kCapacityHeadroom)) net.scale /= 2.0;
  }

  // Rounding each edge to the nearest integer can push a vertex's capacity
  // sum a few quanta past the target; back the scale off until the rounded
  // network itself honors the headroom the flow solver insists on.
  while (true) {
    net.alpha_scaled = std::llround(alpha * net.scale);
    net.dropped_edges = 0;
    net.edges.clear();
    std::vector<__int128> load(g.vertex_count(), static_cast<__int128>(net.alpha_scaled));
    for (const UndirectedEdge& e : g.edges()) {
      Cap cap = std::llround(e.weight * net.scale);
      if (cap == 0) {
        ++net.dropped_edges;
        continue;
      }
      net.edges.push_back(CapEdge{e.u, e.v, cap});
      load[e.u] += cap;
      load[e.v] += cap;
    }
    if (forced_scale > 0.0) break;
    bool fits = static_cast<__int128>(net.alpha_scaled) * g.vertex_count() <= kCapacityHeadroom;
    for (__int128 sum : load) fits = fits && sum <= kCapacityHeadroom;
    if (fits) break;
    net.scale /= 2.0;
  }
  return net;
}

// Base graph plus an artificial sink tied to every base vertex with capacity
// alpha. Minimal min-cut sides against that sink are the communities.
inline FlowNetwork expand_with_sink(const ScaledNetwork& net) {
  FlowNetwork flow(net.base_vertex_count + 1);
  int sink = net.base_vertex_count;
  for (const CapEdge& e : net.edges) flow.add_edge(e.u, e.v, e.capacity);
  for (int v = 0; v < net.base_vertex_count; ++v) flow.add_edge(v, sink, net.alpha_scaled);
  return flow;
}

// Sources are tried heaviest-adjacency first; ties go to the lower index.
inline std::vector<int> heavy_first_order(const ScaledNetwork& net) {
  std::vector<long long> load(net.base_vertex_count, 0);
  for (const CapEdge& e : net.edges) {
    load[e.u] += e.capacity;
    load[e.v] += e.capacity;
  }
  std::vector<int> order(net.base_vertex_count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return load[a] != load[b] ? load[a] > load[b] : a < b; });
  return order;
}

struct TraversalResult {
  std::vector<int> community_of;  // dense community ids
  std::vector<int> head_of;       // community id -> source vertex that formed it
  long long flow_calls = 0;
  long long remark_events = 0;
};

// One pass of the community heuristic: walk the given order, skip vertices
// that already belong somewhere, and claim the whole minimal cut side for
// each fresh source. A later, larger community may swallow earlier ones;
// every such absorption is one re-mark event and must take the old community
// wholesale, anything partial means the nesting lemma broke.
inline TraversalResult community_traversal(FlowNetwork& expanded, int sink,
                                           const std::vector<int>& pass_order) {
  TraversalResult out;
  out.community_of.assign(expanded.vertex_count(), -1);
  std::vector<long long> community_size;
  std::vector<long long> absorbed;
  for (int s : pass_order) {
    if (s == sink) throw InvariantError("pass order contains the sink");
    if (out.community_of[s] >= 0) continue;
    expanded.max_flow(s, sink);
    ++out.flow_calls;
    const std::vector<char>& side = expanded.last_source_side_mask();
    int id = static_cast<int>(out.head_of.size());
    out.head_of.push_back(s);
    community_size.push_back(0);
    absorbed.assign(community_size.size(), 0);
    for (int v = 0; v < sink; ++v) {
      if (!side[v]) continue;
      int old = out.community_of[v];
      if (old >= 0) ++absorbed[old];
      out.community_of[v] = id;
      ++community_size[id];
    }
    for (size_t old = 0; old + 1 < absorbed.size(); ++old) {
      if (absorbed[old] == 0) continue;
      if (absorbed[old] != community_size[old]) {
        throw InvariantError("community " + std::to_string(old) + " absorbed partially");
      }
      community_size[old] = 0;
      ++out.remark_events;
    }
  }
  for (int v = 0; v < sink; ++v) {
    if (out.community_of[v] < 0) throw InvariantError("vertex left unassigned by traversal");
  }
  return out;
}

struct Partition {
  double alpha = 0.0;
  std::vector<std::vector<int>> clusters;  // members sorted; clusters by smallest member
  std::vector<int> heads;                  // aligned with clusters
  double scale = 1.0;
  long long dropped_edges = 0;
  long long flow_calls = 0;
  long long remark_events = 0;
};

struct ClusterOptions {
  double forced_scale = 0.0;     // test hook for scale_to_integer
  bool verify_inner_bound = false;
  int inner_bound_limit = 12;    // max cluster size for the exhaustive inner check
};

namespace detail {

// Outer bicriterion bound, one edge sweep for all clusters:
// crossing(S) <= alpha * |V - S|, one integer quantum of slack.
inline void check_outer_bound(const ScaledNetwork& net, const std::vector<int>& community_of,
                              const std::vector<long long>& cluster_sizes) {
  std::vector<__int128> crossing(cluster_sizes.size(), 0);
  for (const CapEdge& e : net.edges) {
    if (community_of[e.u] != community_of[e.v]) {
      crossing[community_of[e.u]] += e.capacity;
      crossing[community_of[e.v]] += e.capacity;
    }
  }
  long long n = net.base_vertex_count;
  for (size_t i = 0; i < cluster_sizes.size(); ++i) {
    __int128 outside = n - cluster_sizes[i];
    if (crossing[i] > static_cast<__int128>(net.alpha_scaled) * outside + 1) {
      throw InvariantError("outer bicriterion bound violated for cluster " + std::to_string(i));
    }
  }
}

// Inner bound on small clusters, exhaustively:
// every split (P,Q) of S has crossing(P,Q) >= alpha * min(|P|,|Q|) - 1.
inline void check_inner_bound(const ScaledNetwork& net, const std::vector<int>& members,
                              Cap alpha_scaled) {
  int k = static_cast<int>(members.size());
  std::vector<int> pos(net.base_vertex_count, -1);
  for (int i = 0; i < k; ++i) pos[members[i]] = i;
  std::vector<std::pair<unsigned, Cap>> internal;  // (bit pair, capacity)
  for (const CapEdge& e : net.edges) {
    if (pos[e.u] >= 0 && pos[e.v] >= 0) {
      internal.emplace_back((1u << pos[e.u]) | (1u << pos[e.v]), e.capacity);
    }
  }
  unsigned full = (1u << k) - 1;
  for (unsigned mask = 1; mask < full; ++mask) {
    if (!(mask & 1u)) continue;  // fix member 0 on one side; complements are equivalent
    __int128 crossing = 0;
    for (const auto& [bits, cap] : internal) {
      unsigned inside = bits & mask;
      if (inside != 0 && inside != bits) crossing += cap;
    }
    int size_p = __builtin_popcount(mask);
    int smaller = std::min(size_p, k - size_p);
    if (crossing < static_cast<__int128>(alpha_scaled) * smaller - 1) {
      throw InvariantError("inner bicriterion bound violated inside a cluster");
    }
  }
}

}  // namespace detail

// Flat clustering of g at one alpha: scale, expand with the artificial sink,
// run the community traversal, and package the surviving communities. The
// outer bicriterion bound is checked on every call; the exhaustive inner
// check is opt-in and limited to small clusters.
inline Partition basic_cut_cluster(const UndirectedGraph& g, double alpha,
                                   const ClusterOptions& options = {}) {
  if (!(alpha > 0.0)) throw InvariantError("basic_cut_cluster requires alpha > 0");
  Partition part;
  part.alpha = alpha;
  if (g.vertex_count() == 0) return part;

  ScaledNetwork net = scale_to_integer(g, alpha, options.forced_scale);
  part.scale = net.scale;
  part.dropped_edges = net.dropped_edges;
  FlowNetwork expanded = expand_with_sink(net);
  std::vector<int> order = heavy_first_order(net);
  TraversalResult traversal = community_traversal(expanded, net.base_vertex_count, order);
  part.flow_calls = traversal.flow_calls;
  part.remark_events = traversal.remark_events;

  // Compact community ids to the surviving ones, ordered by smallest member.
  int n = net.base_vertex_count;
  std::vector<int> dense(traversal.head_of.size(), -1);
  std::vector<long long> sizes;
  for (int v = 0; v < n; ++v) {
    int id = traversal.community_of[v];
    if (dense[id] < 0) {
      dense[id] = static_cast<int>(part.clusters.size());
      part.clusters.emplace_back();
      part.heads.push_back(traversal.head_of[id]);
      sizes.push_back(0);
    }
    part.clusters[dense[id]].push_back(v);
    ++sizes[dense[id]];
  }
  if (part.flow_calls != static_cast<long long>(part.clusters.size()) + part.remark_events) {
    throw InvariantError("flow call accounting drifted in community traversal");
  }

  std::vector<int> compact_of(n);
  for (int v = 0; v < n; ++v) compact_of[v] = dense[traversal.community_of[v]];
  detail::check_outer_bound(net, compact_of, sizes);
  if (options.verify_inner_bound) {
    for (const std::vector<int>& cluster : part.clusters) {
      if (cluster.size() >= 2 &&
          cluster.size() <= static_cast<size_t>(options.inner_bound_limit)) {
        detail::check_inner_bound(net, cluster, net.alpha_scaled);
      }
    }
  }
  return part;
}

// Gusfield's cut-tree construction over the network's own vertex set.
// parent[0] = -1; the tree edge (i, parent[i]) carries the max-flow value
// between those two. Splitting the tree at any edge reproduces a minimum cut
// between its endpoints, so path minima equal all pairwise max flows, and
// removing a vertex splits the rest along genuine minimum cuts against it.
// The step re-parenting every current sibling inside the cut side, plus the
// parent swap when the old target's own parent lands there, is what upgrades
// the result from a flow-equivalent tree to a cut tree.
struct CutTree {
  std::vector<int> parent;
  std::vector<Cap> weight;
};

inline CutTree gusfield_tree(FlowNetwork& net) {
  int n = net.vertex_count();
  CutTree tree;
  tree.parent.assign(n, 0);
  tree.weight.assign(n, 0);
  tree.parent[0] = -1;
  for (int s = 1; s < n; ++s) {
    int t = tree.parent[s];
    Cap flow = net.max_flow(s, t);
    tree.weight[s] = flow;
    const std::vector<char>& side = net.last_source_side_mask();
    for (int i = 1; i < n; ++i) {
      if (i != s && tree.parent[i] == t && side[i]) tree.parent[i] = s;
    }
    if (t != 0 && side[tree.parent[t]]) {
      tree.parent[s] = tree.parent[t];
      tree.parent[t] = s;
      tree.weight[s] = tree.weight[t];
      tree.weight[t] = flow;
    }
  }
  return tree;
}

struct RealCutTree {
  std::vector<int> parent;
  std::vector<double> weight;
};

// Cut tree of a real-weighted graph via power-of-two scaling; exact whenever
// the scaled weights are (integers times the scale), in particular for
// integer-weighted inputs.
inline RealCutTree min_cut_tree(const UndirectedGraph& g) {
  if (g.vertex_count() < 2) {
    RealCutTree tree;
    tree.parent.assign(g.vertex_count(), -1);
    tree.weight.assign(g.vertex_count(), 0.0);
    return tree;
  }
  ScaledNetwork net = scale_to_integer(g, 0.0);
  FlowNetwork flow(net.base_vertex_count);
  for (const CapEdge& e : net.edges) flow.add_edge(e.u, e.v, e.capacity);
  CutTree scaled = gusfield_tree(flow);
  RealCutTree tree;
  tree.parent = scaled.parent;
  tree.weight.resize(scaled.weight.size());
  for (size_t i = 0; i < scaled.weight.size(); ++i) {
    tree.weight[i] = static_cast<double>(scaled.weight[i]) / net.scale;
  }
  return tree;
}

inline constexpr const char* kPassOrderHeader = "nestcut-pass-order v1";
inline constexpr const char* kClusterListHeader = "nestcut-cluster-list v1";

// Worker hand-off, outbound: the order in which a traversal worker should
// try sources, one vertex id per line.
inline void write_pass_order(const std::vector<int>& order, std::ostream& out) {
  out << kPassOrderHeader << '\n';
  for (int v : order) out << v << '\n';
}

inline std::vector<int> read_pass_order(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "empty file");
  if (line != kPassOrderHeader) {
    throw FormatError(source_name + ": expected header '" + std::string(kPassOrderHeader) + "'");
  }
  std::vector<int> order;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      order.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw ParseError(source_name, line_no, "expected a vertex id");
    }
  }
  return order;
}

// Worker hand-off, inbound: one line per cluster, the head vertex first,
// remaining members sorted ascending.
inline void write_cluster_list(const Partition& part, std::ostream& out) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", part.alpha);
  out << kClusterListHeader << '\n';
  out << "alpha " << buf << '\n';
  for (size_t i = 0; i < part.clusters.size(); ++i) {
    out << part.heads[i];
    for (int v : part.clusters[i]) {
      if (v != part.heads[i]) out << ' ' << v;
    }
    out << '\n';
  }
}

inline Partition read_cluster_list(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "empty file");
  if (line != kClusterListHeader) {
    throw FormatError(source_name + ": expected header '" + std::string(kClusterListHeader) + "'");
  }
  Partition part;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source_name, 2, "missing alpha line");
  ++line_no;
  {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag >> part.alpha) || tag != "alpha") {
      throw ParseError(source_name, line_no, "expected: alpha <value>");
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<int> members;
    int v;
    while (ls >> v) members.push_back(v);
    if (members.empty()) throw ParseError(source_name, line_no, "empty cluster line");
    part.heads.push_back(members[0]);
    std::sort(members.begin(), members.end());
    part.clusters.push_back(std::move(members));
  }
  return part;
}

}  // namespace nestcut
