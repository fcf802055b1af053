#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lexsub/io.hpp"
#include "lexsub/sparse.hpp"

namespace lexsub {

enum class MaxFeatures { kLog2, kSqrt, kAll };

std::string_view max_features_name(MaxFeatures rule);
MaxFeatures parse_max_features(std::string_view name);

struct ForestConfig {
  int n_trees = 200;
  MaxFeatures max_features = MaxFeatures::kLog2;
  int min_samples_leaf = 10;
  bool bootstrap = true;
  // Causal forests only: grow each tree on one half of its subsample and
  // fill the leaves from the other half.
  bool honest = true;
  std::uint64_t seed = 0;

  void validate() const;
  io::Json to_json() const;
  static ForestConfig from_json(const io::Json& j);
};

// Candidate features examined per node: ceil(log2 V), ceil(sqrt V) or V.
std::size_t candidate_feature_count(MaxFeatures rule, std::size_t n_features);

// Internal nodes test presence of one binary feature; rows lacking it go to
// `absent`, rows having it to `present`.
struct TreeNode {
  std::int32_t feature = -1;
  std::int32_t absent = -1;
  std::int32_t present = -1;
  std::int32_t leaf = -1;

  bool is_leaf() const { return leaf >= 0; }
};

template <class Leaf>
struct BinaryTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<Leaf> leaves;

  std::size_t leaf_index(const BinaryRow& row) const {
    std::size_t at = 0;
    while (!nodes[at].is_leaf()) {
      const auto& n = nodes[at];
      at = static_cast<std::size_t>(contains_feature(row, static_cast<std::uint32_t>(n.feature)) ? n.present
                                                                                                  : n.absent);
    }
    return static_cast<std::size_t>(nodes[at].leaf);
  }
  const Leaf& route(const BinaryRow& row) const { return leaves[leaf_index(row)]; }
  std::size_t depth() const;
};

struct ClassLeaf {
  std::uint32_t count = 0;      // bootstrap draws reaching the leaf
  std::uint32_t positives = 0;  // of which y = 1
  double fraction = 0.0;        // positives / count
};

struct CausalLeaf {
  double treated_mean = 0.0;
  double control_mean = 0.0;
  std::uint32_t treated_count = 0;
  std::uint32_t control_count = 0;

  bool has_both_arms() const { return treated_count > 0 && control_count > 0; }
  double effect() const { return treated_mean - control_mean; }
};

using ClassificationTree = BinaryTree<ClassLeaf>;
using CausalTree = BinaryTree<CausalLeaf>;

class ForestModel {
 public:
  ForestConfig config;
  std::size_t n_features = 0;
  // Training rows are kept so out-of-bag predictions can be made by index.
  BinaryMatrix training;
  std::vector<ClassificationTree> trees;
  // Per tree: sorted bootstrap draws (duplicates kept).
  std::vector<std::vector<std::uint32_t>> inbag;

  std::size_t training_size() const { return training.size(); }
  bool in_bag(std::size_t tree, std::size_t index) const;

  double tree_probability(std::size_t tree, const BinaryRow& row) const;
  double probability(const BinaryRow& row) const;
  // Trees whose bootstrap sample excludes `index`.
  std::vector<std::size_t> oob_trees(std::size_t index) const;
  // Throws a degenerate error ("no OOB trees") if every tree saw `index`.
  double oob_probability(std::size_t index) const;

  io::Json to_json() const;
  static ForestModel from_json(const io::Json& j);
};

ForestModel fit_random_forest(const BinaryMatrix& x, std::span<const int> y, const ForestConfig& config,
                              int jobs = 1);
inline double forest_probability(const ForestModel& model, const BinaryRow& row) {
  return model.probability(row);
}
inline double oob_probability(const ForestModel& model, std::size_t index) {
  return model.oob_probability(index);
}

class CausalForestModel {
 public:
  ForestConfig config;
  std::size_t n_features = 0;
  std::size_t training_size = 0;
  std::vector<CausalTree> trees;
  // Per tree: sorted training indices of its subsample (both honest halves).
  std::vector<std::vector<std::uint32_t>> subsamples;

  bool in_subsample(std::size_t tree, std::size_t index) const;
  // Leaf effect for one tree, or nullopt when its leaf lacks an arm.
  std::optional<double> tree_effect(std::size_t tree, const BinaryRow& row) const;
  // Mean effect over trees with both arms in the leaf, skipping trees whose
  // subsample holds exclude_index. Throws "no valid trees" when none remain.
  double estimate(const BinaryRow& row, std::optional<std::size_t> exclude_index = std::nullopt) const;

  io::Json to_json() const;
  static CausalForestModel from_json(const io::Json& j);
};

CausalForestModel fit_causal_forest(const BinaryMatrix& x, std::span<const int> treatment,
                                    std::span<const double> outcome, const ForestConfig& config, int jobs = 1);
inline double causal_estimate(const CausalForestModel& model, const BinaryRow& row,
                              std::optional<std::size_t> exclude_index = std::nullopt) {
  return model.estimate(row, exclude_index);
}

}  // namespace lexsub
