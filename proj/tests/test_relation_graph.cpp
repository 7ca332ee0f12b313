#include "nestcut/relation_graph.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "random_graphs.hpp"

using namespace nestcut;

namespace {

RelationGraph load_text(const std::string& text) {
  std::istringstream in(text);
  return load_relations(in, "test");
}

TEST(RelationGraph, LoadsMinimalFile) {
  RelationGraph g = load_text(
      "class A\n"
      "class B\n"
      "arc A B CALL 2\n");
  ASSERT_EQ(g.artifact_count(), 2);
  ASSERT_EQ(g.arc_count(), 1);
  EXPECT_EQ(g.label(0), "A");
  EXPECT_TRUE(g.is_class(0));
  const RelationArc& arc = g.arcs()[0];
  EXPECT_EQ(arc.src, 0);
  EXPECT_EQ(arc.dst, 1);
  EXPECT_EQ(arc.kind, RelationKind::kCall);
  EXPECT_DOUBLE_EQ(arc.weight, 2.0);
}

TEST(RelationGraph, MembersResolveToTheirClass) {
  RelationGraph g = load_text(
      "class X\n"
      "member X.f of X\n"
      "class Y\n"
      "member Y.g of Y\n"
      "arc X.f Y.g FIELD_ACCESS 3\n");
  ASSERT_EQ(g.artifact_count(), 4);
  EXPECT_EQ(g.class_count(), 2);
  EXPECT_FALSE(g.is_class(1));
  EXPECT_EQ(g.owner_of(1), 0);
  EXPECT_EQ(g.owner_of(0), 0);
  EXPECT_EQ(g.class_slot(0), 0);
  EXPECT_EQ(g.class_slot(2), 1);
  EXPECT_EQ(g.class_at_slot(1), 2);
}

TEST(RelationGraph, CommentsAndBlankLinesIgnored) {
  RelationGraph g = load_text(
      "# full line comment\n"
      "\n"
      "class A  # trailing comment\n"
      "class B\n"
      "arc A B TYPE_USAGE 1  # another\n");
  EXPECT_EQ(g.artifact_count(), 2);
  EXPECT_EQ(g.arc_count(), 1);
}

TEST(RelationGraph, ParseErrorsCarryLineNumbers) {
  auto expect_error_on_line = [](const std::string& text, int line) {
    std::istringstream in(text);
    try {
      load_relations(in, "bad");
      FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_error_on_line("class A\nbogus A\n", 2);
  expect_error_on_line("class A\narc A B CALL 1\n", 2);          // undeclared B
  expect_error_on_line("class A\nclass A\n", 2);                 // duplicate
  expect_error_on_line("class A\nclass B\narc A B NOPE 1\n", 3); // bad kind
  expect_error_on_line("class A\nclass B\narc A B CALL 0\n", 3); // zero count
  expect_error_on_line("class A\nclass B\narc A B CALL -3\n", 3);
  expect_error_on_line("class A\nclass B\narc A B CALL 1.5\n", 3);
  expect_error_on_line("member m of A\n", 1);                    // class unknown
  expect_error_on_line("class A\nmember m of A\nmember n of m\n", 3);
  expect_error_on_line("class A\nmember A of A\n", 2);           // duplicate label
}

TEST(RelationGraph, SelfArcsAreLegalInput) {
  RelationGraph g = load_text("class A\narc A A CALL 4\n");
  EXPECT_EQ(g.arc_count(), 1);
}

TEST(RelationGraph, DumpRoundTripsLoadedGraphs) {
  std::mt19937 rng(7101);
  for (int iter = 0; iter < 25; ++iter) {
    RelationGraph g = testgen::random_relation_graph(rng, 6, 15);
    std::ostringstream dump;
    dump_relations(g, dump);
    RelationGraph back = load_text(dump.str());
    ASSERT_EQ(back.artifact_count(), g.artifact_count());
    ASSERT_EQ(back.arc_count(), g.arc_count());
    for (int i = 0; i < g.artifact_count(); ++i) {
      EXPECT_EQ(back.label(i), g.label(i));
      EXPECT_EQ(back.is_class(i), g.is_class(i));
      EXPECT_EQ(back.owner_of(i), g.owner_of(i));
    }
    for (int i = 0; i < g.arc_count(); ++i) {
      EXPECT_EQ(back.arcs()[i].src, g.arcs()[i].src);
      EXPECT_EQ(back.arcs()[i].dst, g.arcs()[i].dst);
      EXPECT_EQ(back.arcs()[i].kind, g.arcs()[i].kind);
      EXPECT_DOUBLE_EQ(back.arcs()[i].weight, g.arcs()[i].weight);
    }
  }
}

TEST(MergeKinds, CombinesParallelArcsAcrossKinds) {
  RelationGraph g = load_text(
      "class A\n"
      "class B\n"
      "arc A B CALL 3\n"
      "arc A B INHERITANCE 2\n");
  KindWeights weights;
  weights.set(RelationKind::kInheritance, 0.5);
  RelationGraph merged = merge_relation_kinds(g, weights);
  ASSERT_EQ(merged.arc_count(), 1);
  EXPECT_DOUBLE_EQ(merged.arcs()[0].weight, 4.0);
  EXPECT_EQ(merged.arcs()[0].src, 0);
  EXPECT_EQ(merged.arcs()[0].dst, 1);
}

TEST(MergeKinds, ZeroWeightDropsArcs) {
  RelationGraph g = load_text(
      "class A\n"
      "class B\n"
      "arc A B CALL 3\n"
      "arc B A INHERITANCE 2\n");
  KindWeights weights;
  weights.set(RelationKind::kCall, 0.0);
  RelationGraph merged = merge_relation_kinds(g, weights);
  ASSERT_EQ(merged.arc_count(), 1);
  EXPECT_EQ(merged.arcs()[0].src, 1);
}

TEST(MergeKinds, NegativeWeightRejected) {
  RelationGraph g = load_text("class A\nclass B\narc A B CALL 1\n");
  KindWeights weights;
  weights.set(RelationKind::kTypeUsage, -0.1);
  EXPECT_THROW(merge_relation_kinds(g, weights), InvariantError);
}

TEST(MergeKinds, MassConservedExactlyWithDyadicWeights) {
  std::mt19937 rng(40419);
  KindWeights weights;
  weights.set(RelationKind::kCall, 1.0);
  weights.set(RelationKind::kInheritance, 0.5);
  weights.set(RelationKind::kFieldAccess, 2.0);
  weights.set(RelationKind::kTypeUsage, 0.25);
  weights.set(RelationKind::kParamReturn, 4.0);
  for (int iter = 0; iter < 30; ++iter) {
    RelationGraph g = testgen::random_relation_graph(rng, 8, 40);
    double before = 0.0;
    for (const RelationArc& arc : g.arcs()) before += arc.weight * weights.get(arc.kind);
    RelationGraph merged = merge_relation_kinds(g, weights);
    double after = 0.0;
    for (const RelationArc& arc : merged.arcs()) after += arc.weight;
    EXPECT_EQ(before, after);
  }
}

TEST(Components, UndirectedViewGroupsWeakly) {
  RelationGraph g = load_text(
      "class A\nclass B\nclass C\nclass D\nclass E\n"
      "arc A B CALL 1\n"
      "arc B C CALL 1\n"
      "arc D E CALL 1\n");
  std::vector<int> comp = components(g, /*undirected_view=*/true);
  EXPECT_EQ(comp, (std::vector<int>{0, 0, 0, 1, 1}));
}

TEST(Components, DirectedViewIsStronglyConnected) {
  RelationGraph g = load_text(
      "class A\nclass B\nclass C\n"
      "arc A B CALL 1\n"
      "arc B A CALL 1\n"
      "arc B C CALL 1\n");
  std::vector<int> comp = components(g, /*undirected_view=*/false);
  EXPECT_EQ(comp[0], comp[1]);
  EXPECT_NE(comp[0], comp[2]);
}

}  // namespace
