#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "nestcut/cluster_tree.hpp"

namespace nestcut {

// Ubiquity summary for one label prefix: how deep and how wide the clusters
// that first bring its carriers together sit in the decomposition.
struct PrefixStats {
  std::string prefix;
  long long suffix_count = 0;  // leaves whose label starts with the prefix
  double avg_mh = 0.0;         // mean height of the match nodes
  double avg_md = 0.0;         // mean depth of the match nodes (roots at 0)
  double avg_nu = 0.0;         // mean subtree node count of the match nodes
  int rank = 0;                // 1 = most ubiquitous; ties share a rank
};

namespace detail {

// Dot-separated token prefixes of a label, including the full label.
inline std::vector<std::string> label_prefixes(const std::string& label) {
  std::vector<std::string> out;
  for (size_t pos = label.find('.'); pos != std::string::npos; pos = label.find('.', pos + 1)) {
    out.push_back(label.substr(0, pos));
  }
  out.push_back(label);
  return out;
}

}  // namespace detail

// Scores every prefix shared by at least two leaf labels. A "match" for a
// prefix is an inner node joining two or more children whose subtrees carry
// it; prefixes that are never joined anywhere (e.g. split across disjoint
// components) are dropped. Rows come back sorted by (rank, prefix).
inline std::vector<PrefixStats> ubiquity_stats(const ClusterTree& tree) {
  int total = tree.node_count();
  int leaves = tree.leaf_count();
  std::map<std::string, std::vector<int>> carriers;
  for (int l = 0; l < leaves; ++l) {
    for (const std::string& p : detail::label_prefixes(tree.label(l))) {
      std::vector<int>& list = carriers[p];
      if (list.empty() || list.back() != l) list.push_back(l);
    }
  }
  if (total == 0) return {};

  // Post-order once for height/subtree size, then depths top-down.
  std::vector<int> post;
  post.reserve(total);
  std::vector<std::pair<int, size_t>> walk{{tree.fake_root(), 0}};
  while (!walk.empty()) {
    auto& [id, next] = walk.back();
    const std::vector<int>& kids = tree.node(id).children;
    if (next < kids.size()) {
      walk.push_back({kids[next++], 0});
    } else {
      post.push_back(id);
      walk.pop_back();
    }
  }
  std::vector<int> height(total, 0), nodes_under(total, 1), depth(total, 0);
  for (int id : post) {
    for (int c : tree.node(id).children) {
      height[id] = std::max(height[id], height[c] + 1);
      nodes_under[id] += nodes_under[c];
    }
  }
  for (size_t i = post.size(); i-- > 0;) {
    int id = post[i];
    int parent = tree.node(id).parent;
    depth[id] = parent < 0 || parent == tree.fake_root() ? 0 : depth[parent] + 1;
  }

  std::vector<PrefixStats> rows;
  std::vector<char> carries(total);
  for (const auto& [prefix, leaf_list] : carriers) {
    if (leaf_list.size() < 2) continue;
    std::fill(carries.begin(), carries.end(), 0);
    for (int l : leaf_list) carries[l] = 1;
    long long events = 0;
    double sum_md = 0.0, sum_mh = 0.0, sum_nu = 0.0;
    for (int id : post) {
      if (tree.is_leaf(id) || id == tree.fake_root()) continue;
      int joined = 0;
      for (int c : tree.node(id).children) joined += carries[c];
      if (joined) carries[id] = 1;
      if (joined < 2) continue;
      ++events;
      sum_md += depth[id];
      sum_mh += height[id];
      sum_nu += nodes_under[id];
    }
    if (events == 0) continue;
    PrefixStats row;
    row.prefix = prefix;
    row.suffix_count = static_cast<long long>(leaf_list.size());
    row.avg_md = sum_md / static_cast<double>(events);
    row.avg_mh = sum_mh / static_cast<double>(events);
    row.avg_nu = sum_nu / static_cast<double>(events);
    rows.push_back(std::move(row));
  }

  // Pairwise tournament: a point per dimension won, higher mh / lower md /
  // higher nu meaning more ubiquitous; rank by strictly-better totals.
  size_t n = rows.size();
  std::vector<long long> score(n, 0);
  auto cmp = [](double x, double y) { return x < y ? -1 : x > y ? 1 : 0; };
  for (size_t a = 0; a < n; ++a) {
    for (size_t b = a + 1; b < n; ++b) {
      int won = cmp(rows[a].avg_mh, rows[b].avg_mh)    // higher match height wins
                - cmp(rows[a].avg_md, rows[b].avg_md)  // lower match depth wins
                + cmp(rows[a].avg_nu, rows[b].avg_nu); // bigger subtrees win
      score[a] += won;
      score[b] -= won;
    }
  }
  for (size_t a = 0; a < n; ++a) {
    int better = 0;
    for (size_t b = 0; b < n; ++b) better += score[b] > score[a];
    rows[a].rank = 1 + better;
  }
  std::sort(rows.begin(), rows.end(), [](const PrefixStats& a, const PrefixStats& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.prefix < b.prefix;
  });
  return rows;
}

inline std::string ubiquity_tsv(const ClusterTree& tree) {
  std::string out = "rank\tavgMH\tavgMD\tavgNU\t!Suff.!\tPrefix\n";
  char buf[128];
  for (const PrefixStats& row : ubiquity_stats(tree)) {
    std::snprintf(buf, sizeof buf, "%d\t%#.6g\t%#.6g\t%#.6g\t%#.6g\t", row.rank, row.avg_mh,
                  row.avg_md, row.avg_nu, static_cast<double>(row.suffix_count));
    out += buf;
    out += row.prefix;
    out += '\n';
  }
  return out;
}

}  // namespace nestcut
