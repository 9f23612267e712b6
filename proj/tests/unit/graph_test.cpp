#include <gtest/gtest.h>

#include <random>
#include <set>

#include "selftrack/graph.hpp"
#include "support/oracles.hpp"

namespace selftrack {
namespace {

std::vector<Detection> one_per_frame(int frames) {
  std::vector<Detection> dets;
  for (int f = 1; f <= frames; ++f) dets.push_back(Detection{f, BBox{0, 0, 10, 10}, 1.0, std::nullopt});
  return dets;
}

TEST(BuildGraph, ThreeFramesGapTwo) {
  const auto dets = one_per_frame(3);
  const auto g = build_graph(dets, 2, {});
  EXPECT_EQ(g.num_nodes(), 3u);
  ASSERT_EQ(g.num_edges(), 3u);
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& e : g.edges()) pairs.emplace(e.u, e.v);
  EXPECT_EQ(pairs, (std::set<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}, {0, 2}}));
  EXPECT_EQ(g.num_lifted_edges(), 0u);
}

TEST(BuildGraph, TwelveFramesLiftedGapTen) {
  const auto dets = one_per_frame(12);
  const std::vector<int> lifted{10};
  const auto g = build_graph(dets, 1, lifted);
  EXPECT_EQ(g.num_edges(), 11u);
  ASSERT_EQ(g.num_lifted_edges(), 2u);
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& e : g.lifted_edges()) pairs.emplace(e.u, e.v);
  EXPECT_EQ(pairs, (std::set<std::pair<NodeId, NodeId>>{{0, 10}, {1, 11}}));
}

TEST(BuildGraph, MatchesExhaustivePairEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> frame(1, 40);
  std::vector<Detection> dets;
  for (int i = 0; i < 90; ++i) dets.push_back(Detection{frame(rng), BBox{0, 0, 1, 1}, 1.0, std::nullopt});
  const std::vector<int> lifted{10, 20, 30};
  const auto g = build_graph(dets, 5, lifted);

  std::set<std::pair<NodeId, NodeId>> want_regular;
  std::set<std::pair<NodeId, NodeId>> want_lifted;
  for (NodeId i = 0; i < dets.size(); ++i) {
    for (NodeId j = i + 1; j < dets.size(); ++j) {
      const int d = std::abs(dets[i].frame - dets[j].frame);
      if (d <= 5) want_regular.emplace(i, j);
      if (d == 10 || d == 20 || d == 30) want_lifted.emplace(i, j);
    }
  }
  std::set<std::pair<NodeId, NodeId>> got_regular;
  std::set<std::pair<NodeId, NodeId>> got_lifted;
  for (const auto& e : g.edges()) {
    EXPECT_LT(e.u, e.v);
    got_regular.emplace(e.u, e.v);
  }
  for (const auto& e : g.lifted_edges()) {
    EXPECT_LT(e.u, e.v);
    got_lifted.emplace(e.u, e.v);
  }
  EXPECT_EQ(got_regular, want_regular);
  EXPECT_EQ(got_lifted, want_lifted);
  for (const auto& p : got_lifted) EXPECT_FALSE(got_regular.count(p));
}

TEST(BuildGraph, SameFramePairsAreRegularEdges) {
  std::vector<Detection> dets{{1, BBox{}, 1.0, {}}, {1, BBox{}, 1.0, {}}, {1, BBox{}, 1.0, {}}};
  const auto g = build_graph(dets, 1, {});
  EXPECT_EQ(g.num_edges(), 3u);
}

TEST(BuildGraph, EmptyInput) {
  const auto g = build_graph({}, 3, {});
  EXPECT_EQ(g.num_nodes(), 0u);
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.num_lifted_edges(), 0u);
}

TEST(BuildGraph, RejectsLiftedGapInsideRegularWindow) {
  const auto dets = one_per_frame(4);
  const std::vector<int> bad{3};
  EXPECT_THROW(build_graph(dets, 3, bad), std::invalid_argument);
  EXPECT_THROW(build_graph(dets, 0, {}), std::invalid_argument);
}

TEST(MulticutInstance, RejectsInvalidEdges) {
  EXPECT_THROW(MulticutInstance(2, {{0, 0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(MulticutInstance(2, {{0, 2, 1.0}}), std::invalid_argument);
  EXPECT_THROW(MulticutInstance(3, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(MulticutInstance(3, {{0, 1, 1.0}}, {{1, 0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(MulticutInstance(3, {{0, 1, std::numeric_limits<double>::infinity()}}), std::invalid_argument);
  const MulticutInstance ok(3, {{2, 0, 1.0}});
  EXPECT_EQ(ok.edges()[0].u, 0u);
  EXPECT_EQ(ok.edges()[0].v, 2u);
}

MulticutInstance path_abc() { return MulticutInstance(3, {{0, 1, 0.0}, {1, 2, 0.0}}); }

TEST(LabelingToPartition, AllJoinIsSingleComponent) {
  const auto g = path_abc();
  EXPECT_EQ(labeling_to_partition(g, EdgeLabeling::all(g, 0)).num_components(), 1u);
}

TEST(LabelingToPartition, AllCutIsSingletons) {
  const auto g = path_abc();
  EXPECT_EQ(labeling_to_partition(g, EdgeLabeling::all(g, 1)), Partition::singletons(3));
}

TEST(LabelingToPartition, PathWithOneCut) {
  const auto g = path_abc();
  const EdgeLabeling y{{0, 1}, {}};
  EXPECT_EQ(labeling_to_partition(g, y), Partition({0, 0, 1}));
}

TEST(LabelingToPartition, LiftedEdgesNeverMerge) {
  const MulticutInstance g(3, {{0, 1, 0.0}}, {{1, 2, 0.0}});
  const EdgeLabeling y{{1}, {0}};
  EXPECT_EQ(labeling_to_partition(g, y), Partition::singletons(3));
}

TEST(LabelingToPartition, AllJoinEqualsConnectedComponentsOfG) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = testing::random_instance(rng, 1, 14, 0.2);
    const auto y = EdgeLabeling::all(g, 0);
    const auto want = testing::bfs_components(g, y);
    EXPECT_EQ(labeling_to_partition(g, y), Partition(std::vector<std::size_t>(want.begin(), want.end())));
  }
}

TEST(Partition, NormalizesLabels) {
  const Partition p({7, 3, 7, 9});
  EXPECT_EQ(p.component_of(), (std::vector<std::size_t>{0, 1, 0, 2}));
  EXPECT_EQ(p.num_components(), 3u);
  EXPECT_EQ(p, Partition({1, 2, 1, 0}));
}

TEST(ConnectedRefinement, SplitsDisconnectedBlocks) {
  const MulticutInstance g(3, {{0, 1, 0.0}}, {{0, 2, 0.0}});
  EXPECT_EQ(connected_refinement(g, Partition::single_block(3)), Partition({0, 0, 1}));
}

}  // namespace
}  // namespace selftrack
