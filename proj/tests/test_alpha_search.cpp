#include "nestcut/alpha_search.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "random_graphs.hpp"

using namespace nestcut;

namespace {

// Three heavy pairs joined in a light ring. The dyadic bracketing grid sees
// cluster counts 6, 3, 3, 1 and never 2, which pins both bracket endpoints.
UndirectedGraph ring_of_pairs() {
  UndirectedGraph g(0);
  for (int i = 0; i < 6; ++i) g.add_vertex("p" + std::to_string(i));
  g.add_edge(0, 1, 4.0);
  g.add_edge(2, 3, 4.0);
  g.add_edge(4, 5, 4.0);
  g.add_edge(1, 2, 1.0);
  g.add_edge(3, 4, 1.0);
  g.add_edge(5, 0, 1.0);
  return g;
}

TEST(AlphaSearch, PriorityMatchesPinnedExample) {
  double p = priority(0.1, 0.2, 0.3, 10, 100, 150);
  EXPECT_NEAR(p, 59.279, 1e-3);
  EXPECT_DOUBLE_EQ(p, 2.0 * std::log(90.0) + std::log(0.1) + 50.0 + 1.0 / std::sqrt(0.15));
}

TEST(AlphaSearch, DoublingTheJumpAddsLogFour) {
  double base = priority(0.1, 0.2, 0.3, 10, 100, 150);
  double doubled = priority(0.1, 0.2, 0.3, 10, 190, 240);  // own jump 180, sibling still 50
  EXPECT_NEAR(doubled - base, std::log(4.0), 1e-12);
}

TEST(AlphaSearch, BracketingFindsOneClusterAndAllSingletons) {
  UndirectedGraph g = ring_of_pairs();
  AlphaSearch search(g, SearchOptions{});
  ASSERT_EQ(search.brackets().size(), 1u);
  const AlphaSearch::ComponentBracket& b = search.brackets()[0];
  EXPECT_DOUBLE_EQ(b.alpha_min, 0.25);
  EXPECT_EQ(b.k_min, 1);
  EXPECT_DOUBLE_EQ(b.alpha_max, 4.0);
  EXPECT_EQ(b.k_max, 6);
  // The endpoints really produce one cluster and all singletons.
  EXPECT_EQ(oracle::fig41_cluster(g, b.alpha_min),
            (std::vector<std::vector<int>>{{0, 1, 2, 3, 4, 5}}));
  EXPECT_EQ(oracle::fig41_cluster(g, b.alpha_max),
            (std::vector<std::vector<int>>{{0}, {1}, {2}, {3}, {4}, {5}}));
}

TEST(AlphaSearch, BudgetZeroReturnsBareTree) {
  SearchOptions opt;
  opt.max_probes = 0;
  AlphaSearch search(ring_of_pairs(), opt);
  ClusterTree tree = search.run();
  EXPECT_EQ(search.probes_done(), 0);
  EXPECT_EQ(tree.fingerprint(false), "(l0 l1 l2 l3 l4 l5)");
  EXPECT_GE(search.pending_intervals(), 1u);
}

TEST(AlphaSearch, IsolatedVertexStaysUnderTheRoot) {
  UndirectedGraph g(0);
  g.add_vertex("a");
  g.add_vertex("b");
  g.add_vertex("c");
  g.add_edge(0, 1, 2.0);
  AlphaSearch search(g, SearchOptions{});
  EXPECT_EQ(search.brackets().size(), 1u);  // only the two-vertex component searches
  ClusterTree tree = search.run();
  tree.validate();
  EXPECT_EQ(tree.node(2).parent, tree.fake_root());
  EXPECT_EQ(tree.node_count(), 5);  // a+b clustered, c left alone
  EXPECT_EQ(tree.subtree_leaves(4), (std::vector<int>{0, 1}));
}

TEST(AlphaSearch, FanoutThreeSplitsAnIntervalPerTask) {
  SearchOptions opt;
  opt.fanout = 3;
  opt.max_probes = 2;  // exactly one task at fanout 3
  AlphaSearch search(ring_of_pairs(), opt);
  ClusterTree tree = search.run();
  EXPECT_EQ(search.probes_done(), 2);
  // Probes at 1.5 and 2.75 both see the three pairs; the middle child is a
  // dead interval, the outer two survive.
  EXPECT_EQ(search.pending_intervals(), 2u);
  EXPECT_EQ(tree.fingerprint(),
            "((a=2.75 l0 l1) (a=2.75 l2 l3) (a=2.75 l4 l5))");
}

TEST(AlphaSearch, ExhaustiveSweepFindsTheSameHierarchy) {
  std::mt19937 rng(61304);
  for (int iter = 0; iter < 6; ++iter) {
    int n = std::uniform_int_distribution<int>(4, 8)(rng);
    UndirectedGraph g = testgen::random_connected_graph(
        rng, n, std::uniform_int_distribution<int>(0, n)(rng), 12);
    AlphaSearch search(g, SearchOptions{});
    ClusterTree found = search.run();
    found.validate();
    ASSERT_EQ(search.brackets().size(), 1u);
    const AlphaSearch::ComponentBracket& b = search.brackets()[0];
    ClusterTree swept = oracle::sweep_tree(g, b.alpha_min, b.alpha_max);
    EXPECT_EQ(found.fingerprint(false), swept.fingerprint(false)) << "iteration " << iter;
  }
}

TEST(AlphaSearch, WorkerCountDoesNotChangeTheTree) {
  std::mt19937 rng(77518);
  for (int iter = 0; iter < 4; ++iter) {
    int n = std::uniform_int_distribution<int>(4, 8)(rng);
    UndirectedGraph g = testgen::random_connected_graph(
        rng, n, std::uniform_int_distribution<int>(0, n)(rng), 9);
    SearchOptions one;
    one.workers = 1;
    SearchOptions four;
    four.workers = 4;
    EXPECT_EQ(run_search(g, one).fingerprint(), run_search(g, four).fingerprint())
        << "iteration " << iter;
  }
}

TEST(AlphaSearch, ProbeFailureIsRetriedOnce) {
  UndirectedGraph g = ring_of_pairs();
  auto armed = std::make_shared<bool>(false);
  auto injected = std::make_shared<int>(0);
  SearchOptions opt;
  opt.probe_observer = [armed, injected](int, double, int attempt) {
    if (*armed && attempt == 0) {
      ++*injected;
      throw InvariantError("injected probe fault");
    }
  };
  AlphaSearch search(g, opt);
  *armed = true;  // bracketing above ran clean; every interval probe now fails once
  ClusterTree tree = search.run();
  EXPECT_GT(*injected, 0);
  EXPECT_EQ(tree.fingerprint(), run_search(g, SearchOptions{}).fingerprint());
}

TEST(AlphaSearch, RepeatedProbeFailureSurfaces) {
  UndirectedGraph g = ring_of_pairs();
  auto armed = std::make_shared<bool>(false);
  SearchOptions opt;
  opt.probe_observer = [armed](int, double, int) {
    if (*armed) throw InvariantError("persistent probe fault");
  };
  AlphaSearch search(g, opt);
  *armed = true;
  EXPECT_THROW(search.run(), InvariantError);
}

TEST(AlphaSearch, StopSentinelPreventsProbing) {
  std::filesystem::path sig =
      std::filesystem::temp_directory_path() / "nestcut_test_stop.sig";
  std::ofstream(sig).put('\n');
  SearchOptions opt;
  opt.stop_sentinel = sig.string();
  AlphaSearch search(ring_of_pairs(), opt);
  ClusterTree tree = search.run();
  std::filesystem::remove(sig);
  EXPECT_EQ(search.probes_done(), 0);
  EXPECT_GE(search.pending_intervals(), 1u);
  EXPECT_EQ(tree.fingerprint(false), "(l0 l1 l2 l3 l4 l5)");
}

TEST(AlphaSearch, SnapshotResumeReachesTheFullTree) {
  std::mt19937 rng(90041);
  UndirectedGraph g = testgen::random_connected_graph(rng, 7, 5, 10);
  std::filesystem::path snap =
      std::filesystem::temp_directory_path() / "nestcut_test_search.snapshot";
  std::filesystem::remove(snap);

  SearchOptions limited;
  limited.max_probes = 3;
  limited.snapshot_path = snap.string();
  limited.snapshot_secs = 0.0;  // snapshot after every merge
  AlphaSearch partial(g, limited);
  partial.run();
  ASSERT_TRUE(std::filesystem::exists(snap));

  std::ifstream in(snap);
  AlphaSearch continued = AlphaSearch::resumed(g, SearchOptions{}, in, snap.string());
  ClusterTree resumed_tree = continued.run();
  std::filesystem::remove(snap);

  ClusterTree direct = run_search(g, SearchOptions{});
  EXPECT_EQ(resumed_tree.fingerprint(), direct.fingerprint());
}

TEST(AlphaSearch, ResumeRejectsMismatchedInput) {
  UndirectedGraph g = ring_of_pairs();
  AlphaSearch search(g, SearchOptions{});
  std::ostringstream out;
  search.save_state(out);

  UndirectedGraph other(0);
  for (int i = 0; i < 7; ++i) other.add_vertex("q" + std::to_string(i));
  for (int i = 0; i + 1 < 7; ++i) other.add_edge(i, i + 1, 2.0);
  {
    std::istringstream in(out.str());
    EXPECT_THROW(AlphaSearch::resumed(other, SearchOptions{}, in, "state"), ParseError);
  }
  {
    std::istringstream in("who is this\n");
    EXPECT_THROW(AlphaSearch::resumed(g, SearchOptions{}, in, "state"), FormatError);
  }
}

}  // namespace
