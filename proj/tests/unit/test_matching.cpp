#include <stdexcept>

#include <gtest/gtest.h>

#include "ace/matching.hpp"

using namespace ace::matching;

namespace {
WeightedBipartiteGraph G(std::vector<std::vector<double>> w) { return WeightedBipartiteGraph(std::move(w)); }
}  // namespace

TEST(Matching, SingleEdge) {
  const auto r = max_weight_match(G({{0.8}}));
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_DOUBLE_EQ(r.tp, 0.8);
}

TEST(Matching, TwoByTwoBeatsGreedy) {
  const auto r = max_weight_match(G({{0.9, 0.1}, {0.8, 0.7}}));
  EXPECT_NEAR(r.tp, 1.6, 1e-12);
  const std::vector<std::pair<std::size_t, std::size_t>> want = {{0, 0}, {1, 1}};
  EXPECT_EQ(r.pairs, want);
}

TEST(Matching, TwoByThreeRates) {
  const auto r = max_weight_match(G({{0.9, 0.1, 0.0}, {0.8, 0.7, 0.0}}));
  EXPECT_NEAR(r.tp, 1.6, 1e-12);
  EXPECT_NEAR(r.fp, 0.4, 1e-12);
  EXPECT_NEAR(r.fn, 1.4, 1e-12);
  EXPECT_NEAR(r.precision, 0.8, 1e-12);
  EXPECT_NEAR(r.recall, 1.6 / 3.0, 1e-12);
  EXPECT_NEAR(r.f1, 0.64, 1e-12);
}

TEST(Matching, TallGraph) {
  const auto r = max_weight_match(G({{0.2}, {0.9}, {0.4}}));
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].first, 1u);
  EXPECT_NEAR(r.precision, 0.3, 1e-12);
  EXPECT_NEAR(r.recall, 0.9, 1e-12);
}

TEST(Matching, EmptySides) {
  const auto r = max_weight_match(WeightedBipartiteGraph(0, 3));
  EXPECT_EQ(r.tp, 0.0);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
}

TEST(Matching, ZeroWeightsGiveZeroF1) {
  const auto r = max_weight_match(G({{0.0, 0.0}, {0.0, 0.0}}));
  EXPECT_EQ(r.f1, 0.0);
}

TEST(Matching, InvalidWeights) {
  EXPECT_THROW(G({{0.5, 1.5}}), std::invalid_argument);
  EXPECT_THROW(G({{0.5, 0.1}, {0.2}}), std::invalid_argument);
  WeightedBipartiteGraph g(1, 1);
  EXPECT_THROW(g.set_weight(0, 0, -0.1), std::invalid_argument);
}

TEST(Matching, AssignmentValueAgrees) {
  const std::vector<std::vector<double>> w = {{0.3, 0.6, 0.2}, {0.5, 0.4, 0.9}};
  EXPECT_NEAR(max_assignment_value(w), max_weight_match(G(w)).tp, 1e-12);
  EXPECT_NEAR(max_assignment_value(w), 1.5, 1e-12);
}
