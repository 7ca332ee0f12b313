#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nestcut/errors.hpp"
#include "nestcut/max_flow.hpp"

namespace nestcut {

// One max-flow task in DIMACS form: the expanded clustering network with its
// designated source and artificial sink. This is the hand-off format for
// running cut computations in a separate worker process.
struct DimacsNetwork {
  int vertex_count = 0;
  int source = -1;
  int sink = -1;
  std::vector<CapEdge> edges;  // undirected, one entry per unordered pair
};

// DIMACS max-flow writer. Vertex ids are 1-based in the file; every
// undirected edge is emitted as two mirrored arcs. Parallel edges are summed
// into one pair so the output is canonical for byte comparison.
inline void write_dimacs(const DimacsNetwork& net, std::ostream& out) {
  std::map<std::pair<int, int>, Cap> pairs;
  for (const CapEdge& e : net.edges) {
    auto key = e.u < e.v ? std::make_pair(e.u, e.v) : std::make_pair(e.v, e.u);
    pairs[key] += e.capacity;
  }
  out << "c undirected network, each edge written as two mirrored arcs\n";
  out << "p max " << net.vertex_count << ' ' << 2 * pairs.size() << '\n';
  out << "n " << net.source + 1 << " s\n";
  out << "n " << net.sink + 1 << " t\n";
  for (const auto& [key, cap] : pairs) {
    out << "a " << key.first + 1 << ' ' << key.second + 1 << ' ' << cap << '\n';
    out << "a " << key.second + 1 << ' ' << key.first + 1 << ' ' << cap << '\n';
  }
}

inline DimacsNetwork read_dimacs(std::istream& in, const std::string& source_name) {
  DimacsNetwork net;
  std::map<std::pair<int, int>, Cap> directed;
  std::string line;
  int line_no = 0;
  long long declared_arcs = -1;
  long long seen_arcs = 0;
  bool have_problem = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "c") continue;
    if (tag == "p") {
      std::string kind;
      if (have_problem || !(ls >> kind >> net.vertex_count >> declared_arcs) || kind != "max") {
        throw ParseError(source_name, line_no, "expected single problem line: p max <n> <m>");
      }
      if (net.vertex_count < 2 || declared_arcs < 0) {
        throw ParseError(source_name, line_no, "bad problem dimensions");
      }
      have_problem = true;
    } else if (tag == "n") {
      int id;
      std::string role;
      if (!have_problem || !(ls >> id >> role) || id < 1 || id > net.vertex_count) {
        throw ParseError(source_name, line_no, "bad node descriptor");
      }
      if (role == "s" && net.source < 0) {
        net.source = id - 1;
      } else if (role == "t" && net.sink < 0) {
        net.sink = id - 1;
      } else {
        throw ParseError(source_name, line_no, "duplicate or unknown node role '" + role + "'");
      }
    } else if (tag == "a") {
      int u, v;
      Cap cap;
      if (!have_problem || !(ls >> u >> v >> cap)) {
        throw ParseError(source_name, line_no, "expected: a <u> <v> <capacity>");
      }
      if (u < 1 || v < 1 || u > net.vertex_count || v > net.vertex_count || u == v || cap < 0) {
        throw ParseError(source_name, line_no, "bad arc");
      }
      directed[{u - 1, v - 1}] += cap;
      ++seen_arcs;
    } else {
      throw ParseError(source_name, line_no, "unknown line tag '" + tag + "'");
    }
  }
  if (!have_problem) throw ParseError(source_name, line_no, "missing problem line");
  if (net.source < 0 || net.sink < 0) {
    throw ParseError(source_name, line_no, "source or sink undeclared");
  }
  if (seen_arcs != declared_arcs) {
    throw ParseError(source_name, line_no, "arc count mismatch: declared " +
                                               std::to_string(declared_arcs) + ", found " +
                                               std::to_string(seen_arcs));
  }
  for (const auto& [key, cap] : directed) {
    auto [u, v] = key;
    if (u < v) {
      auto mirror = directed.find({v, u});
      if (mirror == directed.end() || mirror->second != cap) {
        throw ParseError(source_name, 0,
                         "arcs between " + std::to_string(u + 1) + " and " + std::to_string(v + 1) +
                             " are not mirrored; network is not undirected");
      }
      net.edges.push_back(CapEdge{u, v, cap});
    }
  }
  return net;
}

inline FlowNetwork to_flow_network(const DimacsNetwork& net) {
  FlowNetwork flow(net.vertex_count);
  for (const CapEdge& e : net.edges) flow.add_edge(e.u, e.v, e.capacity);
  return flow;
}

}  // namespace nestcut
