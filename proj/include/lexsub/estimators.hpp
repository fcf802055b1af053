#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/forest.hpp"
#include "lexsub/perception.hpp"
#include "lexsub/sparse.hpp"

namespace lexsub {

// Per-corpus features shared by every pair. Holds a reference to the corpus,
// which must outlive it.
struct CorpusFeatures {
  const Corpus* corpus = nullptr;
  Vocabulary vocab;
  TfidfModel tfidf;
  std::vector<BinaryRow> binary;
  std::vector<SparseVector> tfidf_rows;
  // Word -> corpus indices of sentences containing it, ascending.
  std::unordered_map<std::string, std::vector<std::size_t>> postings;

  static CorpusFeatures build(const Corpus& corpus, std::size_t min_doc_count, const StopList* stop_list = nullptr);
};

struct ProblemRow {
  std::string sentence_id;
  std::size_t corpus_index = 0;
  int treated = 0;  // 1 iff the sentence has w2 and not w1
  int outcome = 0;
  bool has_both_words = false;
  BinaryRow features;     // binary bag-of-words, w1/w2 columns kept
  SparseVector context;   // tf-idf with w1/w2 columns removed
  double context_norm = 0.0;
};

// All sentences holding w1 (control) or w2 (treatment), ordered by sentence id.
struct EstimationProblem {
  SubstitutionPair pair;
  std::size_t n_features = 0;
  std::optional<std::uint32_t> control_column;
  std::optional<std::uint32_t> treatment_column;
  std::vector<ProblemRow> rows;
  std::vector<std::size_t> control_rows;    // positions into rows
  std::vector<std::size_t> treatment_rows;  // positions into rows
  std::unordered_map<std::string, std::size_t> row_of;

  std::size_t query_row(const std::string& sentence_id) const;
  // Position of a control row within control_rows.
  std::size_t control_position(std::size_t row) const;
  // Query features with w1 switched off and w2 switched on.
  BinaryRow twin(std::size_t row) const;
  BinaryMatrix union_matrix() const;
  BinaryMatrix group_matrix(const std::vector<std::size_t>& group) const;
};

EstimationProblem build_problem(const CorpusFeatures& features, const SubstitutionPair& pair);

struct EstimateResult {
  double value = 0.0;
  std::vector<std::string> flags;
};

// K nearest treatment and control neighbours by cosine similarity of the
// context vectors; the query is excluded from both pools. Similarities are
// rounded to 9 decimals and ties go to the smaller sentence id.
EstimateResult lse_knn(const EstimationProblem& problem, std::size_t query_row, int k = 30);

ForestModel fit_virtual_twin_forest(const EstimationProblem& problem, const ForestConfig& config, int jobs = 1);
EstimateResult lse_vt_rf(const EstimationProblem& problem, const ForestModel& forest, std::size_t query_row);

// A group-level outcome model: a random forest, or the group's class rate
// when a forest cannot be fitted (single class or too few rows).
class GroupPredictor {
 public:
  GroupPredictor() = default;
  explicit GroupPredictor(ForestModel forest) : model_(std::move(forest)) {}
  explicit GroupPredictor(double constant) : model_(constant) {}

  static GroupPredictor fit(const BinaryMatrix& x, std::span<const int> y, const ForestConfig& config, int jobs = 1);

  bool is_constant() const { return std::holds_alternative<double>(model_); }
  const ForestModel* forest() const { return std::get_if<ForestModel>(&model_); }
  double probability(const BinaryRow& row) const;
  // OOB probability; falls back to the full model (flagged) when no tree is out of bag.
  double oob_probability(std::size_t index, bool& fell_back) const;

 private:
  std::variant<double, ForestModel> model_ = 0.0;
};

struct CounterfactualForests {
  GroupPredictor control;
  GroupPredictor treatment;
};

CounterfactualForests fit_counterfactual_forests(const EstimationProblem& problem, const ForestConfig& config,
                                                 int jobs = 1);
EstimateResult lse_cf_rf(const EstimationProblem& problem, const CounterfactualForests& forests,
                         std::size_t query_row);

CausalForestModel fit_problem_causal_forest(const EstimationProblem& problem, const ForestConfig& config,
                                            int jobs = 1);
EstimateResult lse_csf(const EstimationProblem& problem, const CausalForestModel& forest, std::size_t query_row);

struct EstimatorConfig {
  std::vector<std::string> estimators{"knn", "vt_rf", "cf_rf", "csf"};
  int knn_k = 30;
  ForestConfig forest;         // VT-RF and CF-RF
  ForestConfig causal_forest;  // CSF
  std::uint64_t seed = 0;
  int jobs = 1;
  // Required when "perception_clf" is requested.
  const PerceptionModel* perception = nullptr;
  const SentenceClassifier* sentence_classifier = nullptr;

  void validate() const;
};

// Seed for one estimator's models on one pair.
std::uint64_t pair_seed(std::uint64_t seed, const SubstitutionPair& pair, std::string_view estimator);

struct EstimationLog {
  std::vector<std::string> messages;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
};

// Fits each requested estimator once per pair and fills every tuple's
// estimates. Estimators that cannot run on a pair are skipped and logged.
std::vector<LseTuple> estimate_all(const std::vector<LseTuple>& tuples, const CorpusFeatures& features,
                                   const EstimatorConfig& config, EstimationLog* log = nullptr);

// Tuples carrying `estimator`, sorted by estimate then (w1, w2, sentence id).
std::vector<LseTuple> rank_estimates(const std::vector<LseTuple>& table, const std::string& estimator,
                                     bool descending = true);

}  // namespace lexsub
