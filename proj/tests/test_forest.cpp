#include <gtest/gtest.h>

#include <numeric>

#include "lexsub/error.hpp"
#include "lexsub/forest.hpp"
#include "lexsub/random.hpp"

using namespace lexsub;

namespace {

BinaryMatrix random_binary(std::size_t n, std::size_t d, double density, Rng& rng) {
  BinaryMatrix m;
  m.n_features = d;
  for (std::size_t i = 0; i < n; ++i) {
    BinaryRow r;
    for (std::uint32_t j = 0; j < d; ++j) {
      if (rng.bernoulli(density)) r.push_back(j);
    }
    m.rows.push_back(r);
  }
  return m;
}

ForestConfig small_config(int trees = 20) {
  ForestConfig c;
  c.n_trees = trees;
  c.min_samples_leaf = 3;
  c.seed = 99;
  return c;
}

}  // namespace

TEST(ForestConfig, ValidationAndJson) {
  ForestConfig c;
  EXPECT_EQ(c.n_trees, 200);
  EXPECT_EQ(c.min_samples_leaf, 10);
  EXPECT_EQ(c.max_features, MaxFeatures::kLog2);
  EXPECT_TRUE(c.bootstrap);
  c.n_trees = 0;
  EXPECT_THROW(c.validate(), Error);
  c.n_trees = 5;
  c.max_features = MaxFeatures::kSqrt;
  const auto back = ForestConfig::from_json(c.to_json());
  EXPECT_EQ(back.n_trees, 5);
  EXPECT_EQ(back.max_features, MaxFeatures::kSqrt);
  EXPECT_THROW(parse_max_features("cube"), Error);
}

TEST(ForestConfig, CandidateCounts) {
  EXPECT_EQ(candidate_feature_count(MaxFeatures::kLog2, 1000), 10u);
  EXPECT_EQ(candidate_feature_count(MaxFeatures::kLog2, 1024), 10u);
  EXPECT_EQ(candidate_feature_count(MaxFeatures::kSqrt, 10), 4u);
  EXPECT_EQ(candidate_feature_count(MaxFeatures::kAll, 7), 7u);
  EXPECT_EQ(candidate_feature_count(MaxFeatures::kLog2, 1), 1u);
}

TEST(RandomForest, RootSplitsOnDeterminingFeature) {
  Rng rng(1);
  auto x = random_binary(100, 6, 0.5, rng);
  std::vector<int> y;
  for (const auto& r : x.rows) y.push_back(contains_feature(r, 2) ? 1 : 0);
  auto c = small_config();
  c.max_features = MaxFeatures::kAll;
  const auto f = fit_random_forest(x, y, c);
  for (const auto& t : f.trees) {
    ASSERT_FALSE(t.nodes[0].is_leaf());
    EXPECT_EQ(t.nodes[0].feature, 2);
  }
}

TEST(RandomForest, DegenerateConfigIsSingleLeaf) {
  Rng rng(2);
  const auto x = random_binary(30, 4, 0.5, rng);
  std::vector<int> y(30, 0);
  for (int i = 0; i < 12; ++i) y[i] = 1;
  ForestConfig c;
  c.n_trees = 1;
  c.bootstrap = false;
  c.min_samples_leaf = 30;
  const auto f = fit_random_forest(x, y, c);
  ASSERT_EQ(f.trees[0].nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(f.probability(x.rows[0]), 0.4);
  // every row is in the only bag
  for (std::size_t i = 0; i < 30; ++i) EXPECT_THROW(f.oob_probability(i), Error);
}

TEST(RandomForest, SameSeedSameForest) {
  Rng rng(3);
  const auto x = random_binary(80, 10, 0.3, rng);
  std::vector<int> y;
  for (const auto& r : x.rows) y.push_back(r.size() % 2);
  const auto a = fit_random_forest(x, y, small_config());
  const auto b = fit_random_forest(x, y, small_config(), 3);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  auto other = small_config();
  other.seed = 100;
  EXPECT_NE(a.to_json().dump(), fit_random_forest(x, y, other).to_json().dump());
}

TEST(RandomForest, LeafFractionsMatchInBagCounts) {
  Rng rng(4);
  const auto x = random_binary(120, 8, 0.4, rng);
  std::vector<int> y;
  for (const auto& r : x.rows) y.push_back(rng.bernoulli(contains_feature(r, 0) ? 0.8 : 0.3));
  const auto f = fit_random_forest(x, y, small_config());
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const auto& tree = f.trees[t];
    std::vector<std::uint32_t> count(tree.leaves.size(), 0), pos(tree.leaves.size(), 0);
    for (auto i : f.inbag[t]) {
      const auto leaf = tree.leaf_index(x.rows[i]);
      ++count[leaf];
      pos[leaf] += static_cast<std::uint32_t>(y[i]);
    }
    for (std::size_t l = 0; l < tree.leaves.size(); ++l) {
      EXPECT_EQ(tree.leaves[l].count, count[l]);
      EXPECT_GE(count[l], 3u);
      EXPECT_EQ(tree.leaves[l].fraction, static_cast<double>(pos[l]) / static_cast<double>(count[l]));
    }
    EXPECT_EQ(f.inbag[t].size(), 120u);
  }
}

TEST(RandomForest, ProbabilityIsMeanOfTrees) {
  Rng rng(5);
  const auto x = random_binary(60, 5, 0.5, rng);
  std::vector<int> y;
  for (const auto& r : x.rows) y.push_back(rng.bernoulli(0.5));
  y[0] = 0;
  y[1] = 1;
  const auto f = fit_random_forest(x, y, small_config(15));
  for (const auto& row : x.rows) {
    double sum = 0;
    for (std::size_t t = 0; t < f.trees.size(); ++t) sum += f.trees[t].route(row).fraction;
    EXPECT_NEAR(f.probability(row), sum / 15.0, 1e-12);
  }
}

TEST(RandomForest, StumpTrace) {
  // Hand-built stump: feature 1 present -> 0.7, absent -> 0.3.
  ForestModel m;
  m.n_features = 2;
  ClassificationTree t;
  t.nodes = {{1, 1, 2, -1}, {-1, -1, -1, 0}, {-1, -1, -1, 1}};
  t.leaves = {{10, 3, 0.3}, {10, 7, 0.7}};
  m.trees = {t};
  m.inbag = {{}};
  EXPECT_DOUBLE_EQ(m.probability({1}), 0.7);
  EXPECT_DOUBLE_EQ(m.probability({0}), 0.3);
  EXPECT_THROW(m.probability({5}), Error);
}

TEST(RandomForest, OobUsesExactlyTheExcludingTrees) {
  Rng rng(6);
  const auto x = random_binary(50, 6, 0.5, rng);
  std::vector<int> y;
  for (const auto& r : x.rows) y.push_back(rng.bernoulli(0.4));
  y[0] = 1;
  y[1] = 0;
  ForestConfig c = small_config(1);
  const auto one = fit_random_forest(x, y, c);
  for (std::size_t i = 0; i < 50; ++i) {
    if (one.in_bag(0, i)) EXPECT_THROW(one.oob_probability(i), Error);
  }
  const auto f = fit_random_forest(x, y, small_config(40));
  for (std::size_t i = 0; i < 50; ++i) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < f.trees.size(); ++t) {
      if (std::binary_search(f.inbag[t].begin(), f.inbag[t].end(), static_cast<std::uint32_t>(i))) continue;
      sum += f.trees[t].route(x.rows[i]).fraction;
      ++n;
    }
    ASSERT_GT(n, 0u);
    EXPECT_NEAR(f.oob_probability(i), sum / static_cast<double>(n), 1e-12);
  }
}

TEST(RandomForest, JsonRoundTripPredictsSame) {
  Rng rng(7);
  const auto x = random_binary(40, 5, 0.5, rng);
  std::vector<int> y;
  for (const auto& r : x.rows) y.push_back(r.empty() ? 0 : static_cast<int>(r[0] % 2));
  y[0] = 0;
  y[1] = 1;
  const auto f = fit_random_forest(x, y, small_config(5));
  const auto g = ForestModel::from_json(f.to_json());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(f.probability(x.rows[i]), g.probability(x.rows[i]));
}

TEST(RandomForest, Errors) {
  Rng rng(8);
  const auto x = random_binary(20, 3, 0.5, rng);
  EXPECT_THROW(fit_random_forest(x, std::vector<int>(20, 1), small_config()), Error);
  EXPECT_THROW(fit_random_forest(x, std::vector<int>(19, 0), small_config()), Error);
  BinaryMatrix bad = x;
  bad.rows[0] = {2, 1};
  std::vector<int> y(20, 0);
  y[0] = 1;
  EXPECT_THROW(fit_random_forest(bad, y, small_config()), Error);
}

TEST(CausalForest, ConstantOutcomeGivesZeroEverywhere) {
  Rng rng(9);
  const auto x = random_binary(80, 5, 0.5, rng);
  std::vector<int> t(80);
  for (std::size_t i = 0; i < 80; ++i) t[i] = static_cast<int>(i % 2);
  const std::vector<double> y(80, 1.0);
  const auto f = fit_causal_forest(x, t, y, small_config());
  for (const auto& tree : f.trees) {
    for (const auto& leaf : tree.leaves) {
      if (leaf.has_both_arms()) EXPECT_EQ(leaf.effect(), 0.0);
    }
  }
  EXPECT_EQ(f.estimate(x.rows[3]), 0.0);
}

TEST(CausalForest, RootSplitsOnEffectModifier) {
  Rng rng(10);
  const auto x = random_binary(400, 4, 0.5, rng);
  std::vector<int> t(400);
  std::vector<double> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    t[i] = rng.bernoulli(0.5);
    // effect +1 where feature 1 is present, 0 elsewhere
    y[i] = (t[i] == 1 && contains_feature(x.rows[i], 1)) ? 1.0 : 0.0;
  }
  auto c = small_config();
  c.max_features = MaxFeatures::kAll;
  const auto f = fit_causal_forest(x, t, y, c);
  for (const auto& tree : f.trees) {
    ASSERT_FALSE(tree.nodes[0].is_leaf());
    EXPECT_EQ(tree.nodes[0].feature, 1);
  }
  EXPECT_NEAR(f.estimate({1}), 1.0, 1e-12);
  EXPECT_NEAR(f.estimate({0}), 0.0, 1e-12);
}

TEST(CausalForest, LeavesRespectMinimaAndSubsamplesAreHalf) {
  Rng rng(11);
  const auto x = random_binary(200, 8, 0.4, rng);
  std::vector<int> t(200);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    t[i] = rng.bernoulli(0.5);
    y[i] = rng.bernoulli(0.3 + 0.3 * t[i]);
  }
  auto c = small_config();
  c.honest = false;
  const auto f = fit_causal_forest(x, t, y, c);
  for (std::size_t k = 0; k < f.trees.size(); ++k) {
    EXPECT_EQ(f.subsamples[k].size(), 100u);
    for (const auto& leaf : f.trees[k].leaves) {
      EXPECT_GE(leaf.treated_count + leaf.control_count, 3u);
      EXPECT_TRUE(leaf.has_both_arms());
    }
  }
}

TEST(CausalForest, EstimateIsMeanOfValidTreesWithExclusion) {
  Rng rng(12);
  const auto x = random_binary(150, 6, 0.5, rng);
  std::vector<int> t(150);
  std::vector<double> y(150);
  for (std::size_t i = 0; i < 150; ++i) {
    t[i] = rng.bernoulli(0.5);
    y[i] = rng.bernoulli(0.4 + 0.2 * t[i]);
  }
  const auto f = fit_causal_forest(x, t, y, small_config(30));
  for (std::size_t i = 0; i < 150; i += 7) {
    double all = 0, kept = 0;
    std::size_t n_all = 0, n_kept = 0;
    for (std::size_t k = 0; k < f.trees.size(); ++k) {
      const auto& leaf = f.trees[k].route(x.rows[i]);
      if (!leaf.has_both_arms()) continue;
      all += leaf.treated_mean - leaf.control_mean;
      ++n_all;
      if (std::binary_search(f.subsamples[k].begin(), f.subsamples[k].end(), static_cast<std::uint32_t>(i))) continue;
      kept += leaf.treated_mean - leaf.control_mean;
      ++n_kept;
    }
    EXPECT_NEAR(f.estimate(x.rows[i]), all / static_cast<double>(n_all), 1e-12);
    if (n_kept > 0) EXPECT_NEAR(f.estimate(x.rows[i], i), kept / static_cast<double>(n_kept), 1e-12);
    const double est = f.estimate(x.rows[i]);
    EXPECT_GE(est, -1.0);
    EXPECT_LE(est, 1.0);
  }
}

TEST(CausalForest, HandBuiltSingleTree) {
  CausalForestModel m;
  m.n_features = 1;
  m.training_size = 4;
  CausalTree tree;
  tree.nodes = {{-1, -1, -1, 0}};
  tree.leaves = {{0.8, 0.3, 2, 2}};
  m.trees = {tree};
  m.subsamples = {{0, 1}};
  EXPECT_DOUBLE_EQ(m.estimate({}), 0.5);
  EXPECT_THROW(m.estimate({}, 1), Error);
  EXPECT_DOUBLE_EQ(m.estimate({}, 3), 0.5);
  m.trees[0].leaves[0].control_count = 0;
  EXPECT_THROW(m.estimate({}), Error);
}

TEST(CausalForest, DeterministicAndErrors) {
  Rng rng(13);
  const auto x = random_binary(60, 4, 0.5, rng);
  std::vector<int> t(60);
  std::vector<double> y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    t[i] = static_cast<int>(i % 2);
    y[i] = rng.bernoulli(0.5);
  }
  const auto a = fit_causal_forest(x, t, y, small_config(10));
  const auto b = fit_causal_forest(x, t, y, small_config(10), 4);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(CausalForestModel::from_json(a.to_json()).to_json().dump(), a.to_json().dump());
  EXPECT_THROW(fit_causal_forest(x, std::vector<int>(60, 1), y, small_config()), Error);
}
