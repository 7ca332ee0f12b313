#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nestcut/cluster_tree.hpp"

namespace testfix {

// Shared presentation fixture: two disjoint components, nested clusters,
// heads on both a nested cluster and a direct leaf child, plus one
// synthesized wrapper. Node ids follow creation order: the fake root is 10,
// merges produce 11..15, the final splice produces 16.
inline nestcut::ClusterTree golden_fixture_tree() {
  std::vector<std::string> labels = {
      "app.Main", "app.Util",  "core.Alloc", "core.Buffer", "core.Pool",
      "net.Socket", "net.Tls", "ui.View",    "ui.Widget",   "zlib.Inflate"};
  std::vector<int> comps = {0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
  nestcut::ClusterTree tree(labels, comps);
  tree.merge_partition(5.0, {{2, 3, 4}}, {{2}});
  tree.merge_partition(3.0, {{5, 6}}, {{5}});
  tree.merge_partition(1.5, {{0, 1, 2, 3, 4, 5, 6}}, {{2}});
  tree.merge_partition(2.0, {{7, 8}}, {{7}});
  tree.merge_partition(0.75, {{7, 8, 9}}, {{9}});
  int wrap = tree.splice_node(13, {0, 1}, 2.2);
  tree.mark_synthesized(wrap);
  tree.validate();
  return tree;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testfix
