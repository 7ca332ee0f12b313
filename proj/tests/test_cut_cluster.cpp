#include "nestcut/cut_cluster.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "nestcut/dimacs.hpp"
#include "oracle.hpp"
#include "random_graphs.hpp"

using namespace nestcut;

namespace {

UndirectedGraph two_triangles_with_bridge(double bridge_weight) {
  UndirectedGraph g(0);
  for (int i = 0; i < 6; ++i) g.add_vertex("v" + std::to_string(i));
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  g.add_edge(0, 2, 1.0);
  g.add_edge(3, 4, 1.0);
  g.add_edge(4, 5, 1.0);
  g.add_edge(3, 5, 1.0);
  g.add_edge(2, 3, bridge_weight);
  return g;
}

TEST(ScaleToInteger, ForcedScaleRoundsToNearest) {
  UndirectedGraph g(0);
  for (int i = 0; i < 4; ++i) g.add_vertex("v" + std::to_string(i));
  g.add_edge(0, 1, 0.5);
  g.add_edge(1, 2, 0.25);
  g.add_edge(2, 3, 0.125);
  ScaledNetwork net = scale_to_integer(g, 0.0625, /*forced_scale=*/16.0);
  ASSERT_EQ(net.edges.size(), 3u);
  EXPECT_EQ(net.edges[0].capacity, 8);
  EXPECT_EQ(net.edges[1].capacity, 4);
  EXPECT_EQ(net.edges[2].capacity, 2);
  EXPECT_EQ(net.alpha_scaled, 1);
  EXPECT_EQ(net.dropped_edges, 0);
}

TEST(ScaleToInteger, AutoScaleIsMaximalPowerOfTwoWithinHeadroom) {
  std::mt19937 rng(777);
  for (int iter = 0; iter < 20; ++iter) {
    UndirectedGraph g = testgen::random_real_graph(rng, 10, 15, 0.01, 5.0);
    double alpha = std::uniform_real_distribution<double>(0.001, 2.0)(rng);
    ScaledNetwork net = scale_to_integer(g, alpha);
    double log2_scale = std::log2(net.scale);
    EXPECT_EQ(log2_scale, std::floor(log2_scale));
    std::vector<__int128> load(g.vertex_count(), net.alpha_scaled);
    for (const CapEdge& e : net.edges) {
      load[e.u] += e.capacity;
      load[e.v] += e.capacity;
    }
    __int128 max_load = 0;
    for (__int128 l : load) max_load = std::max(max_load, l);
    EXPECT_LE(static_cast<long long>(max_load), kCapacityHeadroom);
    // The artificial sink's incident sum must fit too; it is a plain vertex
    // whenever a cut tree of the expanded network is built.
    EXPECT_TRUE(static_cast<__int128>(net.alpha_scaled) * g.vertex_count() <= kCapacityHeadroom);
    // Doubling the scale must overflow the target, otherwise it was not maximal.
    double max_real = std::max(alpha, alpha * g.vertex_count());
    for (double s : g.adjacent_weight()) max_real = std::max(max_real, s + alpha);
    EXPECT_GT(max_real * net.scale * 2.0, static_cast<double>(kCapacityHeadroom) * 0.999);
  }
}

TEST(ScaleToInteger, TinyWeightsDropWithCounter) {
  UndirectedGraph g(0);
  for (int i = 0; i < 3; ++i) g.add_vertex("v" + std::to_string(i));
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1e-300);
  ScaledNetwork net = scale_to_integer(g, 0.5);
  EXPECT_EQ(net.dropped_edges, 1);
  ASSERT_EQ(net.edges.size(), 1u);
}

TEST(BasicCutCluster, TwoTrianglesSplitAtModerateAlpha) {
  Partition part = basic_cut_cluster(two_triangles_with_bridge(0.2), 0.5);
  ASSERT_EQ(part.clusters.size(), 2u);
  EXPECT_EQ(part.clusters[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(part.clusters[1], (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(part.flow_calls, 2);
  EXPECT_EQ(part.remark_events, 0);
}

TEST(BasicCutCluster, TinyAlphaYieldsOneCluster) {
  Partition part = basic_cut_cluster(two_triangles_with_bridge(0.2), 1e-9);
  ASSERT_EQ(part.clusters.size(), 1u);
  EXPECT_EQ(part.clusters[0], (std::vector<int>{0, 1, 2, 3, 4, 5}));
}

TEST(BasicCutCluster, HugeAlphaYieldsSingletons) {
  Partition part = basic_cut_cluster(two_triangles_with_bridge(0.2), 10.0);
  ASSERT_EQ(part.clusters.size(), 6u);
  for (int v = 0; v < 6; ++v) {
    EXPECT_EQ(part.clusters[v], std::vector<int>{v});
    EXPECT_EQ(part.heads[v], v);
  }
}

TEST(BasicCutCluster, InnerBoundCheckPassesWhereEnabled) {
  ClusterOptions options;
  options.verify_inner_bound = true;
  Partition part = basic_cut_cluster(two_triangles_with_bridge(0.2), 0.5, options);
  EXPECT_EQ(part.clusters.size(), 2u);
}

TEST(CommunityTraversal, LaterCommunityAbsorbsEarlierOne) {
  // Triangle {0,1,2} with pendant 3 hanging off 0 by 0.25 at alpha 0.1:
  // community(3) = {3}, community(0) = everything.
  UndirectedGraph g(0);
  for (int i = 0; i < 4; ++i) g.add_vertex("v" + std::to_string(i));
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  g.add_edge(0, 2, 1.0);
  g.add_edge(0, 3, 0.25);
  ScaledNetwork net = scale_to_integer(g, 0.1);
  FlowNetwork expanded = expand_with_sink(net);

  TraversalResult absorbing = community_traversal(expanded, 4, {3, 0, 1, 2});
  EXPECT_EQ(absorbing.flow_calls, 2);
  EXPECT_EQ(absorbing.remark_events, 1);
  EXPECT_EQ(absorbing.community_of[3], absorbing.community_of[0]);

  // The production order starts at the heavy vertex and needs one probe.
  Partition part = basic_cut_cluster(g, 0.1);
  ASSERT_EQ(part.clusters.size(), 1u);
  EXPECT_EQ(part.clusters[0], (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(part.flow_calls, 1);
  EXPECT_EQ(part.heads[0], 0);
}

TEST(BasicCutCluster, MatchesBruteForceGreedyCover) {
  std::mt19937 rng(31007);
  for (int iter = 0; iter < 60; ++iter) {
    int n = std::uniform_int_distribution<int>(2, 8)(rng);
    UndirectedGraph g = testgen::random_connected_graph(
        rng, n, std::uniform_int_distribution<int>(0, n)(rng), 16);
    double alpha = std::uniform_real_distribution<double>(0.2, 20.0)(rng);
    Partition part = basic_cut_cluster(g, alpha);
    ScaledNetwork net = scale_to_integer(g, alpha);
    auto brute = oracle::brute_cluster(n, net.edges, net.alpha_scaled, heavy_first_order(net));
    ASSERT_EQ(part.clusters, brute) << "iteration " << iter;
  }
}

TEST(Gusfield, TriangleFrozenTree) {
  UndirectedGraph g(0);
  for (int i = 0; i < 3; ++i) g.add_vertex("v" + std::to_string(i));
  g.add_edge(0, 1, 3.0);
  g.add_edge(0, 2, 1.0);
  g.add_edge(1, 2, 2.0);
  RealCutTree tree = min_cut_tree(g);
  ASSERT_EQ(tree.parent.size(), 3u);
  EXPECT_EQ(tree.parent[0], -1);
  EXPECT_EQ(tree.parent[1], 0);
  EXPECT_DOUBLE_EQ(tree.weight[1], 4.0);
  EXPECT_EQ(tree.parent[2], 1);
  EXPECT_DOUBLE_EQ(tree.weight[2], 3.0);
}

// All pairwise max flows must equal the minimum tree edge on the connecting path.
TEST(Gusfield, PathMinimaReproducePairwiseFlows) {
  std::mt19937 rng(60301);
  for (int iter = 0; iter < 40; ++iter) {
    int n = std::uniform_int_distribution<int>(2, 6)(rng);
    UndirectedGraph g = testgen::random_connected_graph(
        rng, n, std::uniform_int_distribution<int>(0, n)(rng), 12);
    RealCutTree tree = min_cut_tree(g);
    std::vector<CapEdge> edges;
    for (const UndirectedEdge& e : g.edges()) {
      edges.push_back(CapEdge{e.u, e.v, static_cast<Cap>(e.weight)});
    }
    for (int s = 0; s < n; ++s) {
      for (int t = s + 1; t < n; ++t) {
        // Minimum weight along the unique tree path between s and t.
        std::vector<char> on_chain(n, 0);
        for (int v = s; v != -1; v = tree.parent[v]) on_chain[v] = 1;
        double path_min = std::numeric_limits<double>::infinity();
        int meet = t;
        while (!on_chain[meet]) {
          path_min = std::min(path_min, tree.weight[meet]);
          meet = tree.parent[meet];
        }
        for (int v = s; v != meet; v = tree.parent[v]) {
          path_min = std::min(path_min, tree.weight[v]);
        }
        oracle::BruteCut brute = oracle::brute_min_cut(n, edges, s, t);
        EXPECT_DOUBLE_EQ(path_min, static_cast<double>(brute.value))
            << "pair (" << s << "," << t << ") iteration " << iter;
      }
    }
  }
}

// Removing the artificial sink from the cut tree of the expanded network
// must reproduce the communities (the textbook clustering construction).
// The two-triangle case is deliberately symmetric: the halves tie on size,
// so several minimum cuts coincide and only careful side selection keeps
// the two paths in agreement.
TEST(Gusfield, CutTreeComponentsMatchCommunities) {
  for (double alpha : {0.1, 0.5, 2.0}) {
    UndirectedGraph g = two_triangles_with_bridge(0.2);
    Partition part = basic_cut_cluster(g, alpha);
    EXPECT_EQ(oracle::fig41_cluster(g, alpha), part.clusters) << "alpha " << alpha;
  }
  std::mt19937 rng(88011);
  for (int iter = 0; iter < 30; ++iter) {
    int n = std::uniform_int_distribution<int>(2, 8)(rng);
    UndirectedGraph g = testgen::random_connected_graph(
        rng, n, std::uniform_int_distribution<int>(0, n)(rng), 12);
    for (double alpha : {0.3, 0.9, 2.7}) {
      Partition part = basic_cut_cluster(g, alpha);
      EXPECT_EQ(oracle::fig41_cluster(g, alpha), part.clusters)
          << "iteration " << iter << " alpha " << alpha;
    }
  }
}

TEST(WorkerFiles, PassOrderAndClusterListRoundTrip) {
  std::vector<int> order{3, 1, 4, 1, 5};
  std::ostringstream out;
  write_pass_order(order, out);
  std::istringstream in(out.str());
  EXPECT_EQ(read_pass_order(in, "po"), order);

  Partition part = basic_cut_cluster(two_triangles_with_bridge(0.2), 0.5);
  std::ostringstream cl;
  write_cluster_list(part, cl);
  std::istringstream clin(cl.str());
  Partition back = read_cluster_list(clin, "cl");
  EXPECT_EQ(back.clusters, part.clusters);
  EXPECT_EQ(back.heads, part.heads);
  EXPECT_DOUBLE_EQ(back.alpha, part.alpha);

  std::istringstream bad("wrong header\n");
  EXPECT_THROW(read_pass_order(bad, "bad"), FormatError);
}

TEST(WorkerFiles, DimacsTaskMatchesInProcessTraversal) {
  UndirectedGraph g = two_triangles_with_bridge(0.2);
  ScaledNetwork net = scale_to_integer(g, 0.5);
  DimacsNetwork task;
  task.vertex_count = net.base_vertex_count + 1;
  task.source = 0;
  task.sink = net.base_vertex_count;
  task.edges = net.edges;
  for (int v = 0; v < net.base_vertex_count; ++v) {
    task.edges.push_back(CapEdge{v, task.sink, net.alpha_scaled});
  }
  std::ostringstream out;
  write_dimacs(task, out);
  std::istringstream in(out.str());
  DimacsNetwork back = read_dimacs(in, "task");
  FlowNetwork worker_net = to_flow_network(back);
  TraversalResult worker = community_traversal(worker_net, back.sink, heavy_first_order(net));
  FlowNetwork local_net = expand_with_sink(net);
  TraversalResult local = community_traversal(local_net, net.base_vertex_count,
                                              heavy_first_order(net));
  EXPECT_EQ(worker.community_of, local.community_of);
  EXPECT_EQ(worker.head_of, local.head_of);
}

}  // namespace
