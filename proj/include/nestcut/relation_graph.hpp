#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nestcut/errors.hpp"

namespace nestcut {

// Relation kinds extracted from source code analysis.
enum class RelationKind : int {
  kCall = 0,
  kInheritance = 1,
  kFieldAccess = 2,
  kTypeUsage = 3,
  kParamReturn = 4,
};

inline constexpr int kRelationKindCount = 5;

inline constexpr std::array<std::string_view, kRelationKindCount> kRelationKindNames = {
    "CALL", "INHERITANCE", "FIELD_ACCESS", "TYPE_USAGE", "PARAM_RETURN"};

inline std::string_view to_string(RelationKind kind) {
  return kRelationKindNames[static_cast<int>(kind)];
}

inline std::optional<RelationKind> relation_kind_from_name(std::string_view name) {
  for (int i = 0; i < kRelationKindCount; ++i) {
    if (kRelationKindNames[i] == name) return static_cast<RelationKind>(i);
  }
  return std::nullopt;
}

// Per-kind multipliers applied when collapsing the five arc kinds into one
// weight. Unset kinds default to 1.
class KindWeights {
 public:
  KindWeights() { weights_.fill(1.0); }

  void set(RelationKind kind, double weight) { weights_[static_cast<int>(kind)] = weight; }
  double get(RelationKind kind) const { return weights_[static_cast<int>(kind)]; }

 private:
  std::array<double, kRelationKindCount> weights_;
};

// One software artifact. Classes own themselves; members point at their class.
struct Artifact {
  std::string label;
  bool is_class = true;
  int owner = -1;
};

struct RelationArc {
  int src = -1;
  int dst = -1;
  RelationKind kind = RelationKind::kCall;
  // Arc count as loaded; becomes real-valued after kind merging.
  double weight = 1.0;
};

// Directed weighted multigraph over class and member artifacts, as read from
// a relations file. Artifact indices are dense in declaration order.
class RelationGraph {
 public:
  int add_class(const std::string& label) {
    int index = add_artifact(label, /*is_class=*/true, /*owner=*/-1);
    artifacts_[index].owner = index;
    class_slot_.push_back(index);
    return index;
  }

  int add_member(const std::string& label, int class_index) {
    if (class_index < 0 || class_index >= artifact_count() || !artifacts_[class_index].is_class) {
      throw InvariantError("member '" + label + "' attached to a non-class artifact");
    }
    return add_artifact(label, /*is_class=*/false, class_index);
  }

  void add_arc(int src, int dst, RelationKind kind, double weight) {
    check_index(src);
    check_index(dst);
    arcs_.push_back(RelationArc{src, dst, kind, weight});
  }

  int artifact_count() const { return static_cast<int>(artifacts_.size()); }
  int class_count() const { return static_cast<int>(class_slot_.size()); }
  int arc_count() const { return static_cast<int>(arcs_.size()); }

  const Artifact& artifact(int index) const { return artifacts_[index]; }
  const std::vector<Artifact>& artifacts() const { return artifacts_; }
  const std::vector<RelationArc>& arcs() const { return arcs_; }

  const std::string& label(int index) const { return artifacts_[index].label; }
  bool is_class(int index) const { return artifacts_[index].is_class; }

  // Membership map: every artifact resolves to its class (classes to themselves).
  int owner_of(int index) const { return artifacts_[index].owner; }

  std::optional<int> find(const std::string& label) const {
    auto it = by_label_.find(label);
    if (it == by_label_.end()) return std::nullopt;
    return it->second;
  }

  // Dense numbering of class artifacts, 0..class_count()-1, in declaration order.
  int class_slot(int artifact_index) const {
    const Artifact& a = artifacts_[artifact_index];
    if (!a.is_class) throw InvariantError("class_slot queried for member '" + a.label + "'");
    return slot_of_class_[artifact_index];
  }

  // Artifact index of the class occupying a dense slot.
  int class_at_slot(int slot) const { return class_slot_[slot]; }

 private:
  int add_artifact(std::string label, bool is_class, int owner) {
    auto [it, inserted] = by_label_.emplace(label, artifact_count());
    if (!inserted) throw InvariantError("duplicate artifact label '" + label + "'");
    artifacts_.push_back(Artifact{std::move(label), is_class, owner});
    slot_of_class_.push_back(is_class ? static_cast<int>(class_slot_.size()) : -1);
    return it->second;
  }

  void check_index(int index) const {
    if (index < 0 || index >= artifact_count()) {
      throw InvariantError("arc references artifact index " + std::to_string(index) +
                           " outside 0.." + std::to_string(artifact_count() - 1));
    }
  }

  std::vector<Artifact> artifacts_;
  std::vector<RelationArc> arcs_;
  std::vector<int> class_slot_;     // dense slot -> artifact index
  std::vector<int> slot_of_class_;  // artifact index -> dense slot, -1 for members
  std::unordered_map<std::string, int> by_label_;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline bool parse_positive_count(const std::string& text, long long* value) {
  if (text.empty() || text.size() > 15) return false;
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  *value = std::stoll(text);
  return *value >= 1;
}

}  // namespace detail

// Reads the relations grammar:
//
//   # comment (also allowed after a directive)
//   class <label>
//   member <label> of <class-label>
//   arc <src-label> <dst-label> <KIND> <count>
//
// Labels are whitespace-free and must be declared before use. KIND is one of
// CALL, INHERITANCE, FIELD_ACCESS, TYPE_USAGE, PARAM_RETURN; count is a
// positive integer. Parallel arcs are legal and kept separate until merging.
inline RelationGraph load_relations(std::istream& in, const std::string& source_name) {
  RelationGraph g;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::vector<std::string> tok = detail::split_ws(raw);
    if (tok.empty()) continue;

    auto fail = [&](const std::string& what) -> void { throw ParseError(source_name, line_no, what); };

    if (tok[0] == "class") {
      if (tok.size() != 2) fail("expected: class <label>");
      if (g.find(tok[1])) fail("duplicate label '" + tok[1] + "'");
      g.add_class(tok[1]);
    } else if (tok[0] == "member") {
      if (tok.size() != 4 || tok[2] != "of") fail("expected: member <label> of <class-label>");
      if (g.find(tok[1])) fail("duplicate label '" + tok[1] + "'");
      std::optional<int> cls = g.find(tok[3]);
      if (!cls) fail("member '" + tok[1] + "' names undeclared class '" + tok[3] + "'");
      if (!g.is_class(*cls)) fail("member '" + tok[1] + "' names member '" + tok[3] + "' as its class");
      g.add_member(tok[1], *cls);
    } else if (tok[0] == "arc") {
      if (tok.size() != 5) fail("expected: arc <src> <dst> <KIND> <count>");
      std::optional<int> src = g.find(tok[1]);
      if (!src) fail("arc references undeclared label '" + tok[1] + "'");
      std::optional<int> dst = g.find(tok[2]);
      if (!dst) fail("arc references undeclared label '" + tok[2] + "'");
      std::optional<RelationKind> kind = relation_kind_from_name(tok[3]);
      if (!kind) fail("unknown relation kind '" + tok[3] + "'");
      long long count = 0;
      if (!detail::parse_positive_count(tok[4], &count)) {
        fail("arc count '" + tok[4] + "' is not a positive integer");
      }
      g.add_arc(*src, *dst, *kind, static_cast<double>(count));
    } else {
      fail("unknown directive '" + tok[0] + "'");
    }
  }
  return g;
}

// Writes the graph back in the input grammar. Requires integral arc weights,
// which holds for any loaded (unmerged) graph.
inline void dump_relations(const RelationGraph& g, std::ostream& out) {
  for (int i = 0; i < g.artifact_count(); ++i) {
    const Artifact& a = g.artifact(i);
    if (a.is_class) {
      out << "class " << a.label << '\n';
    } else {
      out << "member " << a.label << " of " << g.label(a.owner) << '\n';
    }
  }
  for (const RelationArc& arc : g.arcs()) {
    double rounded = std::floor(arc.weight + 0.5);
    if (rounded != arc.weight || rounded < 1.0) {
      throw InvariantError("dump_relations requires positive integral arc counts");
    }
    out << "arc " << g.label(arc.src) << ' ' << g.label(arc.dst) << ' ' << to_string(arc.kind)
        << ' ' << static_cast<long long>(rounded) << '\n';
  }
}

// Collapses the five kinds into one weight per (src, dst): each arc
// contributes count * weight(kind), contributions are summed, and arcs whose
// merged weight is exactly zero are dropped. Negative multipliers are
// rejected. The surviving arc keeps the lowest contributing kind ordinal;
// downstream stages treat merged graphs as kindless.
inline RelationGraph merge_relation_kinds(const RelationGraph& g, const KindWeights& weights) {
  for (int i = 0; i < kRelationKindCount; ++i) {
    if (weights.get(static_cast<RelationKind>(i)) < 0.0) {
      throw InvariantError(std::string("negative weight for kind ") +
                           std::string(kRelationKindNames[i]));
    }
  }
  RelationGraph out;
  for (int i = 0; i < g.artifact_count(); ++i) {
    const Artifact& a = g.artifact(i);
    if (a.is_class) {
      out.add_class(a.label);
    } else {
      out.add_member(a.label, a.owner);
    }
  }
  std::map<std::pair<int, int>, std::pair<double, RelationKind>> merged;
  for (const RelationArc& arc : g.arcs()) {
    double contribution = arc.weight * weights.get(arc.kind);
    auto key = std::make_pair(arc.src, arc.dst);
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(key, std::make_pair(contribution, arc.kind));
    } else {
      it->second.first += contribution;
      it->second.second = std::min(it->second.second, arc.kind);
    }
  }
  for (const auto& [key, value] : merged) {
    if (value.first == 0.0) continue;
    out.add_arc(key.first, key.second, value.second, value.first);
  }
  return out;
}

// Component id per artifact, numbered 0.. in order of first appearance.
// undirected_view: arcs taken as edges (weak components); otherwise strongly
// connected components (Tarjan).
inline std::vector<int> components(const RelationGraph& g, bool undirected_view) {
  int n = g.artifact_count();
  std::vector<std::vector<int>> adj(n);
  for (const RelationArc& arc : g.arcs()) {
    adj[arc.src].push_back(arc.dst);
    if (undirected_view) adj[arc.dst].push_back(arc.src);
  }
  std::vector<int> comp(n, -1);
  if (undirected_view) {
    int next = 0;
    std::vector<int> stack;
    for (int start = 0; start < n; ++start) {
      if (comp[start] >= 0) continue;
      comp[start] = next;
      stack.push_back(start);
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v]) {
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

  // Iterative Tarjan; scc ids are then renumbered by first vertex appearance.
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0), scc(n, -1);
  std::vector<int> stack;
  int next_index = 0, next_scc = 0;
  struct Frame {
    int v;
    size_t child;
  };
  for (int start = 0; start < n; ++start) {
    if (index[start] >= 0) continue;
    std::vector<Frame> frames{{start, 0}};
    index[start] = low[start] = next_index++;
    stack.push_back(start);
    on_stack[start] = 1;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.child < adj[f.v].size()) {
        int w = adj[f.v][f.child++];
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          frames.push_back(Frame{w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            scc[w] = next_scc;
            if (w == f.v) break;
          }
          ++next_scc;
        }
        int v = f.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }
  std::vector<int> renumber(next_scc, -1);
  std::vector<int> comp_out(n, -1);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    if (renumber[scc[v]] < 0) renumber[scc[v]] = next++;
    comp_out[v] = renumber[scc[v]];
  }
  return comp_out;
}

}  // namespace nestcut
