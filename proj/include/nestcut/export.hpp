#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "nestcut/cluster_tree.hpp"
#include "nestcut/errors.hpp"

namespace nestcut {

enum class TextStyle { kDepthIndent, kHeightIndent, kBracketed };

struct ExportOptions {
  // Leaves whose label starts with one of these are flagged as client code
  // in the viewer exports; everything else counts as library code.
  std::vector<std::string> client_prefixes;
};

// Synthesized wrapper nodes carry real interpolated alphas internally, but
// exports print this fixed sentinel so they are recognizable in the output.
inline constexpr double kSynthesizedAlphaExport = -0.15834708966782382;

namespace detail {

// Canonical presentation order shared by every exporter: leaves keep their
// ids, inner nodes are renumbered from leaf_count() in preorder, siblings are
// ordered by descending subtree leaf count with ties broken by the smallest
// leaf label. The fake root is never exported.
struct ExportView {
  std::vector<int> export_id;          // tree id -> export id; fake root -1
  std::vector<std::vector<int>> kids;  // canonical child order, tree ids
  std::vector<int> preorder;           // exported tree ids in traversal order
  std::vector<int> depth;              // roots at 0
  std::vector<int> height;             // leaves at 0
};

inline ExportView make_export_view(const ClusterTree& tree) {
  int total = tree.node_count();
  ExportView v;
  if (total == 0) return v;
  v.export_id.assign(total, -1);
  v.kids.resize(total);
  v.depth.assign(total, 0);
  v.height.assign(total, 0);
  std::vector<const std::string*> min_label(total, nullptr);
  std::vector<std::pair<int, size_t>> walk{{tree.fake_root(), 0}};
  while (!walk.empty()) {
    int id = walk.back().first;
    const std::vector<int>& children = tree.node(id).children;
    if (walk.back().second < children.size()) {
      walk.push_back({children[walk.back().second++], 0});
    } else {
      if (tree.is_leaf(id)) {
        min_label[id] = &tree.label(id);
      } else {
        int h = 0;
        const std::string* m = nullptr;
        for (int c : children) {
          h = std::max(h, v.height[c] + 1);
          if (m == nullptr || *min_label[c] < *m) m = min_label[c];
        }
        v.height[id] = h;
        min_label[id] = m;
      }
      walk.pop_back();
    }
  }
  for (int id = 0; id < total; ++id) {
    if (tree.is_leaf(id)) continue;
    std::vector<int> order = tree.node(id).children;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (tree.node(a).leaf_count != tree.node(b).leaf_count) {
        return tree.node(a).leaf_count > tree.node(b).leaf_count;
      }
      return *min_label[a] < *min_label[b];
    });
    v.kids[id] = std::move(order);
  }
  int next_inner = tree.leaf_count();
  std::vector<int> dfs;
  const std::vector<int>& roots = v.kids[tree.fake_root()];
  for (size_t i = roots.size(); i-- > 0;) dfs.push_back(roots[i]);
  while (!dfs.empty()) {
    int id = dfs.back();
    dfs.pop_back();
    v.preorder.push_back(id);
    v.export_id[id] = tree.is_leaf(id) ? id : next_inner++;
    for (size_t i = v.kids[id].size(); i-- > 0;) dfs.push_back(v.kids[id][i]);
  }
  for (int id : v.preorder) {
    for (int c : v.kids[id]) v.depth[c] = v.depth[id] + 1;
  }
  return v;
}

// A stored head is the community's source vertex; presentations reference the
// immediate child of the annotated node that contains it.
inline std::vector<int> display_heads(const ClusterTree& tree, const ExportView& v, int id) {
  std::vector<int> out;
  for (int h : tree.node(id).heads) {
    int c = h;
    while (tree.node(c).parent != id) {
      c = tree.node(c).parent;
      if (c < 0 || c == tree.fake_root()) {
        throw InvariantError("head vertex outside its own cluster");
      }
    }
    out.push_back(v.export_id[c]);
  }
  return out;
}

inline std::string alpha_text(const ClusterTree& tree, int id) {
  if (tree.is_leaf(id)) return "VeryBig";
  double a = tree.node(id).synthesized ? kSynthesizedAlphaExport : tree.node(id).alpha;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.20f", a);
  return buf;
}

inline std::string node_line(const ClusterTree& tree, const ExportView& v, int id) {
  std::string out = std::to_string(v.export_id[id]);
  out += ' ';
  out += std::to_string(v.kids[id].size());
  out += ' ';
  out += std::to_string(tree.node(id).component);
  out += ' ';
  out += alpha_text(tree, id);
  out += " ; ";
  std::vector<int> heads = display_heads(tree, v, id);
  out += std::to_string(heads.size());
  out += " heads";
  for (int h : heads) {
    out += ' ';
    out += std::to_string(h);
  }
  if (tree.is_leaf(id)) {
    out += ' ';
    out += tree.label(id);
  }
  return out;
}

inline void bracketed_text(const ClusterTree& tree, const ExportView& v, std::string& out) {
  // One header token per inner node: h<height><id>, its parent link, and the
  // inner children with their heights. Leaf children follow as quoted lines;
  // inner nodes without leaf children share a header line with the next one.
  std::string line;
  auto flush = [&] {
    if (!line.empty()) {
      out += line;
      out += '\n';
      line.clear();
    }
  };
  for (int id : v.preorder) {
    if (tree.is_leaf(id)) {
      if (tree.node(id).parent != tree.fake_root()) continue;  // listed by parent
      flush();
      out += "0 " + std::to_string(v.export_id[id]) + " \"" + tree.label(id) + "\"\n";
      continue;
    }
    std::string token = "h" + std::to_string(v.height[id]) + "<" +
                        std::to_string(v.export_id[id]) + ">";
    if (tree.node(id).parent != tree.fake_root()) {
      token += " p" + std::to_string(v.export_id[tree.node(id).parent]);
    }
    bool has_leaf_child = false;
    for (int c : v.kids[id]) {
      if (tree.is_leaf(c)) {
        has_leaf_child = true;
      } else {
        token += " <" + std::to_string(v.export_id[c]) + ">h" + std::to_string(v.height[c]);
      }
    }
    if (!line.empty()) line += ' ';
    line += token;
    if (has_leaf_child) {
      flush();
      for (int c : v.kids[id]) {
        if (!tree.is_leaf(c)) continue;
        out += std::to_string(v.depth[c]) + ' ' + std::to_string(v.export_id[c]) + " \"" +
               tree.label(c) + "\"\n";
      }
    }
  }
  flush();
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline int disjoint_count(const ClusterTree& tree) {
  int top = -1;
  for (int l = 0; l < tree.leaf_count(); ++l) top = std::max(top, tree.node(l).component);
  return top + 1;
}

inline bool is_client(const std::string& label, const ExportOptions& opt) {
  for (const std::string& p : opt.client_prefixes) {
    if (label.compare(0, p.size(), p) == 0) return true;
  }
  return false;
}

}  // namespace detail

inline std::string export_text(const ClusterTree& tree, TextStyle style) {
  detail::ExportView v = detail::make_export_view(tree);
  std::string out;
  if (style == TextStyle::kBracketed) {
    detail::bracketed_text(tree, v, out);
    return out;
  }
  for (int id : v.preorder) {
    int units = style == TextStyle::kDepthIndent ? v.depth[id] : v.height[id];
    out.append(2 * static_cast<size_t>(units), ' ');
    out += detail::node_line(tree, v, id);
    out += '\n';
  }
  return out;
}

inline std::string export_xml(const ClusterTree& tree) {
  detail::ExportView v = detail::make_export_view(tree);
  int inner = tree.node_count() > 0 ? tree.node_count() - tree.leaf_count() - 1 : 0;
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<clusterTree vertexCount=\"" + std::to_string(tree.leaf_count()) + "\" nodeCount=\"" +
         std::to_string(tree.leaf_count() + inner) + "\" rootCount=\"" +
         std::to_string(v.kids.empty() ? 0 : v.kids[tree.fake_root()].size()) +
         "\" disjointCount=\"" + std::to_string(detail::disjoint_count(tree)) + "\">\n";
  struct Frame {
    int id;
    size_t next = 0;
  };
  std::vector<Frame> stack;
  auto open_node = [&](int id) {
    std::string pad(2 * static_cast<size_t>(v.depth[id] + 1), ' ');
    std::string dj = std::to_string(tree.node(id).component + 1);
    if (tree.is_leaf(id)) {
      out += pad + "<node id=\"" + std::to_string(v.export_id[id]) + "\" label=\"" +
             detail::xml_escape(tree.label(id)) + "\" djComp=\"" + dj + "\" />\n";
      return false;
    }
    std::vector<int> heads = detail::display_heads(tree, v, id);
    std::string joined;
    for (size_t i = 0; i < heads.size(); ++i) {
      if (i) joined += ", ";
      joined += std::to_string(heads[i]);
    }
    out += pad + "<node id=\"" + std::to_string(v.export_id[id]) + "\" childCount=\"" +
           std::to_string(v.kids[id].size()) + "\" alb=\"" + detail::alpha_text(tree, id) +
           "\" heads=\"" + joined + "\" djComp=\"" + dj + "\">\n";
    return true;
  };
  if (tree.node_count() > 0) {
    for (int root : v.kids[tree.fake_root()]) {
      if (!open_node(root)) continue;
      stack.push_back({root});
      while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < v.kids[f.id].size()) {
          int c = v.kids[f.id][f.next++];
          if (open_node(c)) stack.push_back({c});
        } else {
          out += std::string(2 * static_cast<size_t>(v.depth[f.id] + 1), ' ') + "</node>\n";
          stack.pop_back();
        }
      }
    }
  }
  out += "</clusterTree>\n";
  return out;
}

inline std::string export_treeviz(const ClusterTree& tree, const ExportOptions& opt = {}) {
  detail::ExportView v = detail::make_export_view(tree);
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<tree>\n";
  struct Frame {
    int id;
    size_t next = 0;
  };
  std::vector<Frame> stack;
  auto open_node = [&](int id) {
    std::string pad(2 * static_cast<size_t>(v.depth[id] + 1), ' ');
    if (tree.is_leaf(id)) {
      const std::string& label = tree.label(id);
      out += pad + "<node name=\"" + detail::xml_escape(label) + "\" client=\"" +
             (detail::is_client(label, opt) ? "1" : "0") + "\" />\n";
      return false;
    }
    out += pad + "<node name=\"c" + std::to_string(v.export_id[id]) + "\">\n";
    return true;
  };
  if (tree.node_count() > 0) {
    for (int root : v.kids[tree.fake_root()]) {
      if (!open_node(root)) continue;
      stack.push_back({root});
      while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < v.kids[f.id].size()) {
          int c = v.kids[f.id][f.next++];
          if (open_node(c)) stack.push_back({c});
        } else {
          out += std::string(2 * static_cast<size_t>(v.depth[f.id] + 1), ' ') + "</node>\n";
          stack.pop_back();
        }
      }
    }
  }
  out += "</tree>\n";
  return out;
}

// Flat level list: one line per node ordered by (depth, export id), so a
// viewer can build the tree breadth-first. Columns: depth, id, parent id
// (-1 for roots), node kind, then the label or cluster name.
inline std::string export_h3(const ClusterTree& tree, const ExportOptions& opt = {}) {
  detail::ExportView v = detail::make_export_view(tree);
  int levels = 0;
  for (int id : v.preorder) levels = std::max(levels, v.depth[id] + 1);
  std::string out = "h3 nodes " + std::to_string(v.preorder.size()) + " levels " +
                    std::to_string(levels) + "\n";
  std::vector<int> order = v.preorder;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (v.depth[a] != v.depth[b]) return v.depth[a] < v.depth[b];
    return v.export_id[a] < v.export_id[b];
  });
  for (int id : order) {
    int parent = tree.node(id).parent;
    int parent_eid = parent == tree.fake_root() ? -1 : v.export_id[parent];
    out += std::to_string(v.depth[id]) + ' ' + std::to_string(v.export_id[id]) + ' ' +
           std::to_string(parent_eid) + ' ';
    if (tree.is_leaf(id)) {
      const std::string& label = tree.label(id);
      out += detail::is_client(label, opt) ? "client " : "library ";
      out += label;
    } else {
      out += "cluster c" + std::to_string(v.export_id[id]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace nestcut
