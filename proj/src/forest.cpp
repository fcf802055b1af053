#include "lexsub/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "lexsub/error.hpp"
#include "lexsub/parallel.hpp"
#include "lexsub/random.hpp"

namespace lexsub {
namespace {

void check_rows(const BinaryMatrix& x) {
  for (const auto& row : x.rows) {
    if (!row.empty() && row.back() >= x.n_features) {
      throw Error(ErrorKind::kInvalidArgument, "feature index out of range");
    }
    if (!std::is_sorted(row.begin(), row.end()) ||
        std::adjacent_find(row.begin(), row.end()) != row.end()) {
      throw Error(ErrorKind::kInvalidArgument, "binary rows must hold strictly increasing feature indices");
    }
  }
}

void check_dimension(const BinaryRow& row, std::size_t n_features) {
  if (!row.empty() && row.back() >= n_features) {
    throw Error(ErrorKind::kInvalidArgument, "dimension mismatch: feature " + std::to_string(row.back()) +
                                                 " outside model with " + std::to_string(n_features) +
                                                 " features");
  }
}

// Per-node feature tallies over a reusable dense scratch buffer.
template <class Tally>
class FeatureTallies {
 public:
  explicit FeatureTallies(std::size_t n_features) : tallies_(n_features) {}

  template <class Fn>
  void accumulate(const BinaryMatrix& x, std::span<const std::uint32_t> rows, Fn&& add) {
    touched_.clear();
    for (auto r : rows) {
      for (auto f : x.rows[r]) {
        auto& t = tallies_[f];
        if (t.count == 0) touched_.push_back(f);
        add(t, r);
      }
    }
    std::sort(touched_.begin(), touched_.end());
  }

  // Features present in some but not all node rows.
  std::vector<std::uint32_t> varying(std::size_t node_size) const {
    std::vector<std::uint32_t> out;
    for (auto f : touched_) {
      if (tallies_[f].count < node_size) out.push_back(f);
    }
    return out;
  }

  const Tally& operator[](std::uint32_t f) const { return tallies_[f]; }

  void reset() {
    for (auto f : touched_) tallies_[f] = Tally{};
    touched_.clear();
  }

 private:
  std::vector<Tally> tallies_;
  std::vector<std::uint32_t> touched_;
};

// Partial Fisher-Yates: the first `m` entries become a uniform sample without replacement.
void sample_prefix(std::vector<std::uint32_t>& items, std::size_t m, Rng& rng) {
  m = std::min(m, items.size());
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(m);
}

void partition_rows(const BinaryMatrix& x, std::span<const std::uint32_t> rows, std::uint32_t feature,
                    std::vector<std::uint32_t>& absent, std::vector<std::uint32_t>& present) {
  for (auto r : rows) (contains_feature(x.rows[r], feature) ? present : absent).push_back(r);
}

struct GiniTally {
  std::uint32_t count = 0;
  std::uint32_t positives = 0;
};

class ClassificationTreeBuilder {
 public:
  ClassificationTreeBuilder(const BinaryMatrix& x, std::span<const int> y, const ForestConfig& config, Rng& rng)
      : x_(x),
        y_(y),
        min_leaf_(static_cast<std::size_t>(config.min_samples_leaf)),
        mtry_(candidate_feature_count(config.max_features, x.n_features)),
        rng_(rng),
        tallies_(x.n_features) {}

  ClassificationTree build(std::vector<std::uint32_t> rows) {
    tree_.nodes.emplace_back();
    grow(0, std::move(rows));
    return std::move(tree_);
  }

 private:
  void make_leaf(std::size_t node, std::span<const std::uint32_t> rows, std::uint32_t positives) {
    ClassLeaf leaf;
    leaf.count = static_cast<std::uint32_t>(rows.size());
    leaf.positives = positives;
    leaf.fraction = rows.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(rows.size());
    tree_.nodes[node].leaf = static_cast<std::int32_t>(tree_.leaves.size());
    tree_.leaves.push_back(leaf);
  }

  void grow(std::size_t node, std::vector<std::uint32_t> rows) {
    const std::size_t n = rows.size();
    std::uint32_t positives = 0;
    for (auto r : rows) positives += static_cast<std::uint32_t>(y_[r]);
    if (positives == 0 || positives == n || n < 2 * min_leaf_) {
      make_leaf(node, rows, positives);
      return;
    }
    tallies_.accumulate(x_, rows, [&](GiniTally& t, std::uint32_t r) {
      ++t.count;
      t.positives += static_cast<std::uint32_t>(y_[r]);
    });
    auto candidates = tallies_.varying(n);
    sample_prefix(candidates, mtry_, rng_);

    // Minimize n * (weighted child Gini) = 2 pL (nL - pL) / nL + 2 pR (nR - pR) / nR.
    std::int64_t best = -1;
    double best_impurity = 0.0;
    for (auto f : candidates) {
      const double n_present = tallies_[f].count;
      const double n_absent = static_cast<double>(n) - n_present;
      if (n_present < static_cast<double>(min_leaf_) || n_absent < static_cast<double>(min_leaf_)) continue;
      const double p_present = tallies_[f].positives;
      const double p_absent = static_cast<double>(positives) - p_present;
      const double impurity = 2.0 * p_present * (n_present - p_present) / n_present +
                              2.0 * p_absent * (n_absent - p_absent) / n_absent;
      if (best < 0 || impurity < best_impurity ||
          (impurity == best_impurity && f < static_cast<std::uint32_t>(best))) {
        best = f;
        best_impurity = impurity;
      }
    }
    tallies_.reset();
    if (best < 0) {
      make_leaf(node, rows, positives);
      return;
    }
    std::vector<std::uint32_t> absent, present;
    partition_rows(x_, rows, static_cast<std::uint32_t>(best), absent, present);
    rows.clear();
    rows.shrink_to_fit();
    const auto absent_node = tree_.nodes.size();
    tree_.nodes.emplace_back();
    const auto present_node = tree_.nodes.size();
    tree_.nodes.emplace_back();
    tree_.nodes[node].feature = static_cast<std::int32_t>(best);
    tree_.nodes[node].absent = static_cast<std::int32_t>(absent_node);
    tree_.nodes[node].present = static_cast<std::int32_t>(present_node);
    grow(absent_node, std::move(absent));
    grow(present_node, std::move(present));
  }

  const BinaryMatrix& x_;
  std::span<const int> y_;
  std::size_t min_leaf_;
  std::size_t mtry_;
  Rng& rng_;
  FeatureTallies<GiniTally> tallies_;
  ClassificationTree tree_;
};

struct ArmTally {
  std::uint32_t count = 0;
  std::uint32_t treated = 0;
  double treated_sum = 0.0;
  double control_sum = 0.0;
};

struct ArmStats {
  double treated = 0, control = 0, treated_sum = 0, control_sum = 0;

  double n() const { return treated + control; }
  double effect() const { return treated_sum / treated - control_sum / control; }
};

class CausalTreeBuilder {
 public:
  CausalTreeBuilder(const BinaryMatrix& x, std::span<const int> t, std::span<const double> y,
                    const ForestConfig& config, Rng& rng)
      : x_(x),
        t_(t),
        y_(y),
        min_leaf_(static_cast<std::size_t>(config.min_samples_leaf)),
        mtry_(candidate_feature_count(config.max_features, x.n_features)),
        rng_(rng),
        tallies_(x.n_features) {}

  CausalTree build(std::vector<std::uint32_t> structure_rows) {
    tree_.nodes.emplace_back();
    grow(0, std::move(structure_rows));
    return std::move(tree_);
  }

 private:
  ArmStats stats(std::span<const std::uint32_t> rows) const {
    ArmStats s;
    for (auto r : rows) {
      if (t_[r] == 1) {
        ++s.treated;
        s.treated_sum += y_[r];
      } else {
        ++s.control;
        s.control_sum += y_[r];
      }
    }
    return s;
  }

  void grow(std::size_t node, std::vector<std::uint32_t> rows) {
    const std::size_t n = rows.size();
    const ArmStats parent = stats(rows);
    if (n < 2 * min_leaf_ || parent.treated < 2 || parent.control < 2) {
      make_leaf(node);
      return;
    }
    tallies_.accumulate(x_, rows, [&](ArmTally& a, std::uint32_t r) {
      ++a.count;
      if (t_[r] == 1) {
        ++a.treated;
        a.treated_sum += y_[r];
      } else {
        a.control_sum += y_[r];
      }
    });
    auto candidates = tallies_.varying(n);
    sample_prefix(candidates, mtry_, rng_);

    // Maximize sum over children of n_child * effect_child^2.
    std::int64_t best = -1;
    double best_score = 0.0;
    for (auto f : candidates) {
      const auto& a = tallies_[f];
      ArmStats present{static_cast<double>(a.treated), static_cast<double>(a.count - a.treated), a.treated_sum,
                       a.control_sum};
      ArmStats absent{parent.treated - present.treated, parent.control - present.control,
                      parent.treated_sum - present.treated_sum, parent.control_sum - present.control_sum};
      if (present.n() < static_cast<double>(min_leaf_) || absent.n() < static_cast<double>(min_leaf_)) continue;
      if (present.treated < 1 || present.control < 1 || absent.treated < 1 || absent.control < 1) continue;
      const double tp = present.effect();
      const double ta = absent.effect();
      const double score = present.n() * tp * tp + absent.n() * ta * ta;
      if (best < 0 || score > best_score || (score == best_score && f < static_cast<std::uint32_t>(best))) {
        best = f;
        best_score = score;
      }
    }
    tallies_.reset();
    if (best < 0) {
      make_leaf(node);
      return;
    }
    std::vector<std::uint32_t> absent, present;
    partition_rows(x_, rows, static_cast<std::uint32_t>(best), absent, present);
    rows.clear();
    rows.shrink_to_fit();
    const auto absent_node = tree_.nodes.size();
    tree_.nodes.emplace_back();
    const auto present_node = tree_.nodes.size();
    tree_.nodes.emplace_back();
    tree_.nodes[node].feature = static_cast<std::int32_t>(best);
    tree_.nodes[node].absent = static_cast<std::int32_t>(absent_node);
    tree_.nodes[node].present = static_cast<std::int32_t>(present_node);
    grow(absent_node, std::move(absent));
    grow(present_node, std::move(present));
  }

  void make_leaf(std::size_t node) {
    tree_.nodes[node].leaf = static_cast<std::int32_t>(tree_.leaves.size());
    tree_.leaves.emplace_back();
  }

  const BinaryMatrix& x_;
  std::span<const int> t_;
  std::span<const double> y_;
  std::size_t min_leaf_;
  std::size_t mtry_;
  Rng& rng_;
  FeatureTallies<ArmTally> tallies_;
  CausalTree tree_;
};

// Leaf statistics from the estimation rows.
void fill_causal_leaves(CausalTree& tree, const BinaryMatrix& x, std::span<const int> t,
                        std::span<const double> y, std::span<const std::uint32_t> rows) {
  std::vector<ArmStats> acc(tree.leaves.size());
  for (auto r : rows) {
    auto& s = acc[tree.leaf_index(x.rows[r])];
    if (t[r] == 1) {
      ++s.treated;
      s.treated_sum += y[r];
    } else {
      ++s.control;
      s.control_sum += y[r];
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto& leaf = tree.leaves[i];
    leaf.treated_count = static_cast<std::uint32_t>(acc[i].treated);
    leaf.control_count = static_cast<std::uint32_t>(acc[i].control);
    leaf.treated_mean = acc[i].treated > 0 ? acc[i].treated_sum / acc[i].treated : 0.0;
    leaf.control_mean = acc[i].control > 0 ? acc[i].control_sum / acc[i].control : 0.0;
  }
}

io::Json nodes_to_json(const std::vector<TreeNode>& nodes) {
  io::Json out = io::Json::array();
  for (const auto& n : nodes) out.push_back({n.feature, n.absent, n.present, n.leaf});
  return out;
}

std::vector<TreeNode> nodes_from_json(const io::Json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    nodes.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<std::int32_t>(), n.at(2).get<std::int32_t>(),
                     n.at(3).get<std::int32_t>()});
  }
  return nodes;
}

void check_format(const io::Json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format || j.value("version", 0) != 1) {
    throw Error(ErrorKind::kSchema, std::string("expected a version 1 '") + format + "' document");
  }
}

}  // namespace

template <class Leaf>
std::size_t BinaryTree<Leaf>::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[at].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[at].absent), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[at].present), d + 1);
    }
  }
  return deepest;
}

template struct BinaryTree<ClassLeaf>;
template struct BinaryTree<CausalLeaf>;

std::string_view max_features_name(MaxFeatures rule) {
  switch (rule) {
    case MaxFeatures::kLog2: return "log2";
    case MaxFeatures::kSqrt: return "sqrt";
    case MaxFeatures::kAll: return "all";
  }
  return "log2";
}

MaxFeatures parse_max_features(std::string_view name) {
  if (name == "log2") return MaxFeatures::kLog2;
  if (name == "sqrt") return MaxFeatures::kSqrt;
  if (name == "all") return MaxFeatures::kAll;
  throw Error(ErrorKind::kInvalidArgument, "unknown max_features rule '" + std::string(name) + "'");
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw Error(ErrorKind::kInvalidArgument, "n_trees must be >= 1");
  if (min_samples_leaf < 1) throw Error(ErrorKind::kInvalidArgument, "min_samples_leaf must be >= 1");
}

io::Json ForestConfig::to_json() const {
  return {{"n_trees", n_trees},     {"max_features", std::string(max_features_name(max_features))},
          {"min_samples_leaf", min_samples_leaf}, {"bootstrap", bootstrap},
          {"honest", honest},       {"seed", seed}};
}

ForestConfig ForestConfig::from_json(const io::Json& j) {
  ForestConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  c.max_features = parse_max_features(j.value("max_features", std::string("log2")));
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.honest = j.value("honest", c.honest);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::size_t candidate_feature_count(MaxFeatures rule, std::size_t n_features) {
  if (n_features <= 1) return n_features;
  const double v = static_cast<double>(n_features);
  switch (rule) {
    case MaxFeatures::kLog2: return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log2(v))));
    case MaxFeatures::kSqrt: return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(v))));
    case MaxFeatures::kAll: return n_features;
  }
  return n_features;
}

bool ForestModel::in_bag(std::size_t tree, std::size_t index) const {
  const auto& bag = inbag[tree];
  return std::binary_search(bag.begin(), bag.end(), static_cast<std::uint32_t>(index));
}

double ForestModel::tree_probability(std::size_t tree, const BinaryRow& row) const {
  return trees[tree].route(row).fraction;
}

double ForestModel::probability(const BinaryRow& row) const {
  check_dimension(row, n_features);
  double sum = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) sum += tree_probability(t, row);
  return sum / static_cast<double>(trees.size());
}

std::vector<std::size_t> ForestModel::oob_trees(std::size_t index) const {
  if (index >= training_size()) {
    throw Error(ErrorKind::kInvalidArgument, "training index " + std::to_string(index) + " out of range");
  }
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (!in_bag(t, index)) out.push_back(t);
  }
  return out;
}

double ForestModel::oob_probability(std::size_t index) const {
  const auto oob = oob_trees(index);
  if (oob.empty()) {
    throw Error(ErrorKind::kDegenerate, "no OOB trees for training index " + std::to_string(index));
  }
  const auto& row = training.rows[index];
  double sum = 0.0;
  for (auto t : oob) sum += tree_probability(t, row);
  return sum / static_cast<double>(oob.size());
}

io::Json ForestModel::to_json() const {
  io::Json trees_json = io::Json::array();
  for (const auto& tree : trees) {
    io::Json leaves = io::Json::array();
    for (const auto& l : tree.leaves) leaves.push_back({l.count, l.positives});
    trees_json.push_back({{"nodes", nodes_to_json(tree.nodes)}, {"leaves", leaves}});
  }
  return {{"format", "lexsub.random_forest"}, {"version", 1},        {"config", config.to_json()},
          {"n_features", n_features},       {"training", training.rows}, {"inbag", inbag},
          {"trees", trees_json}};
}

ForestModel ForestModel::from_json(const io::Json& j) {
  check_format(j, "lexsub.random_forest");
  ForestModel m;
  m.config = ForestConfig::from_json(j.at("config"));
  m.n_features = j.at("n_features").get<std::size_t>();
  m.training.n_features = m.n_features;
  m.training.rows = j.at("training").get<std::vector<BinaryRow>>();
  m.inbag = j.at("inbag").get<std::vector<std::vector<std::uint32_t>>>();
  for (const auto& t : j.at("trees")) {
    ClassificationTree tree;
    tree.nodes = nodes_from_json(t.at("nodes"));
    for (const auto& l : t.at("leaves")) {
      ClassLeaf leaf{l.at(0).get<std::uint32_t>(), l.at(1).get<std::uint32_t>(), 0.0};
      leaf.fraction = leaf.count == 0 ? 0.0 : static_cast<double>(leaf.positives) / leaf.count;
      tree.leaves.push_back(leaf);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

ForestModel fit_random_forest(const BinaryMatrix& x, std::span<const int> y, const ForestConfig& config,
                              int jobs) {
  config.validate();
  check_rows(x);
  const std::size_t n = x.size();
  if (y.size() != n) throw Error(ErrorKind::kInvalidArgument, "feature/label count mismatch");
  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    positives += static_cast<std::size_t>(label);
  }
  if (positives == 0 || positives == n) {
    throw Error(ErrorKind::kDegenerate, "degenerate labels: random forest needs both classes");
  }
  if (n < static_cast<std::size_t>(config.min_samples_leaf)) {
    throw Error(ErrorKind::kDegenerate, "random forest needs at least min_samples_leaf rows");
  }

  ForestModel model;
  model.config = config;
  model.n_features = x.n_features;
  model.training = x;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  model.inbag.resize(static_cast<std::size_t>(config.n_trees));
  parallel_for(model.trees.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::uint32_t> rows(n);
    if (config.bootstrap) {
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.uniform_index(n));
    } else {
      std::iota(rows.begin(), rows.end(), 0U);
    }
    std::sort(rows.begin(), rows.end());
    model.inbag[t] = rows;
    ClassificationTreeBuilder builder(x, y, config, rng);
    model.trees[t] = builder.build(std::move(rows));
  });
  return model;
}

bool CausalForestModel::in_subsample(std::size_t tree, std::size_t index) const {
  const auto& s = subsamples[tree];
  return std::binary_search(s.begin(), s.end(), static_cast<std::uint32_t>(index));
}

std::optional<double> CausalForestModel::tree_effect(std::size_t tree, const BinaryRow& row) const {
  const auto& leaf = trees[tree].route(row);
  if (!leaf.has_both_arms()) return std::nullopt;
  return leaf.effect();
}

double CausalForestModel::estimate(const BinaryRow& row, std::optional<std::size_t> exclude_index) const {
  check_dimension(row, n_features);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (exclude_index && in_subsample(t, *exclude_index)) continue;
    if (auto e = tree_effect(t, row)) {
      sum += *e;
      ++used;
    }
  }
  if (used == 0) throw Error(ErrorKind::kDegenerate, "no valid trees for causal estimate");
  return sum / static_cast<double>(used);
}

io::Json CausalForestModel::to_json() const {
  io::Json trees_json = io::Json::array();
  for (const auto& tree : trees) {
    io::Json leaves = io::Json::array();
    for (const auto& l : tree.leaves) {
      leaves.push_back({l.treated_mean, l.control_mean, l.treated_count, l.control_count});
    }
    trees_json.push_back({{"nodes", nodes_to_json(tree.nodes)}, {"leaves", leaves}});
  }
  return {{"format", "lexsub.causal_forest"}, {"version", 1},      {"config", config.to_json()},
          {"n_features", n_features},       {"training_size", training_size}, {"subsamples", subsamples},
          {"trees", trees_json}};
}

CausalForestModel CausalForestModel::from_json(const io::Json& j) {
  check_format(j, "lexsub.causal_forest");
  CausalForestModel m;
  m.config = ForestConfig::from_json(j.at("config"));
  m.n_features = j.at("n_features").get<std::size_t>();
  m.training_size = j.at("training_size").get<std::size_t>();
  m.subsamples = j.at("subsamples").get<std::vector<std::vector<std::uint32_t>>>();
  for (const auto& t : j.at("trees")) {
    CausalTree tree;
    tree.nodes = nodes_from_json(t.at("nodes"));
    for (const auto& l : t.at("leaves")) {
      tree.leaves.push_back({l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<std::uint32_t>(),
                             l.at(3).get<std::uint32_t>()});
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

CausalForestModel fit_causal_forest(const BinaryMatrix& x, std::span<const int> treatment,
                                    std::span<const double> outcome, const ForestConfig& config, int jobs) {
  config.validate();
  check_rows(x);
  const std::size_t n = x.size();
  if (treatment.size() != n || outcome.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "feature/treatment/outcome count mismatch");
  }
  std::size_t treated = 0;
  for (int t : treatment) {
    if (t != 0 && t != 1) throw Error(ErrorKind::kInvalidArgument, "treatment must be 0 or 1");
    treated += static_cast<std::size_t>(t);
  }
  for (double y : outcome) {
    if (!std::isfinite(y)) throw Error(ErrorKind::kNumerical, "non-finite outcome");
  }
  if (treated == 0 || treated == n) {
    throw Error(ErrorKind::kDegenerate, "causal forest needs both treated and control rows");
  }
  if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
    throw Error(ErrorKind::kDegenerate, "causal forest needs at least 2 * min_samples_leaf rows");
  }

  CausalForestModel model;
  model.config = config;
  model.n_features = x.n_features;
  model.training_size = n;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  model.subsamples.resize(static_cast<std::size_t>(config.n_trees));
  parallel_for(model.trees.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0U);
    sample_prefix(all, std::max<std::size_t>(n / 2, 1), rng);
    std::vector<std::uint32_t> structure = all;
    std::vector<std::uint32_t> estimation;
    if (config.honest) {
      const auto half = static_cast<std::ptrdiff_t>(all.size() / 2);
      structure.assign(all.begin(), all.begin() + half);
      estimation.assign(all.begin() + half, all.end());
      std::sort(estimation.begin(), estimation.end());
    }
    std::sort(structure.begin(), structure.end());
    std::sort(all.begin(), all.end());
    model.subsamples[t] = all;
    CausalTreeBuilder builder(x, treatment, outcome, config, rng);
    model.trees[t] = builder.build(structure);
    fill_causal_leaves(model.trees[t], x, treatment, outcome, config.honest ? estimation : structure);
  });
  return model;
}

}  // namespace lexsub
