#include "lexsub/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "lexsub/error.hpp"
#include "lexsub/parallel.hpp"
#include "lexsub/random.hpp"

namespace lexsub {
namespace {

void add_flag(std::vector<std::string>& flags, const std::string& flag) {
  if (std::find(flags.begin(), flags.end(), flag) == flags.end()) flags.push_back(flag);
}

const ProblemRow& control_query(const EstimationProblem& problem, std::size_t query_row) {
  if (query_row >= problem.rows.size()) throw Error(ErrorKind::kInvalidArgument, "query row out of range");
  const auto& row = problem.rows[query_row];
  if (row.treated != 0) {
    throw Error(ErrorKind::kInvalidArgument, "query sentence '" + row.sentence_id + "' is not a control sentence");
  }
  return row;
}

std::vector<int> outcomes(const EstimationProblem& problem, const std::vector<std::size_t>& group) {
  std::vector<int> y;
  y.reserve(group.size());
  for (auto r : group) y.push_back(problem.rows[r].outcome);
  return y;
}

struct Neighbour {
  double similarity;
  const std::string* id;
  int outcome;
};

// Cosines are compared at this resolution so that mathematically equal
// similarities tie exactly and fall back to the id order.
constexpr double kSimilarityResolution = 1e9;

// Mean outcome of the k most similar pool members (ties by ascending id).
double neighbour_mean(const EstimationProblem& problem, const std::vector<std::size_t>& pool, const ProblemRow& query,
                      int k, bool& short_pool) {
  std::vector<Neighbour> candidates;
  candidates.reserve(pool.size());
  for (auto r : pool) {
    const auto& row = problem.rows[r];
    if (row.sentence_id == query.sentence_id) continue;
    const double denom = query.context_norm * row.context_norm;
    const double sim = denom > 0.0 ? dot(query.context, row.context) / denom : 0.0;
    candidates.push_back({std::round(sim * kSimilarityResolution), &row.sentence_id, row.outcome});
  }
  if (candidates.empty()) throw Error(ErrorKind::kDegenerate, "empty neighbour pool");
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
  short_pool = candidates.size() < static_cast<std::size_t>(k);
  auto closer = [](const Neighbour& a, const Neighbour& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return *a.id < *b.id;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    closer);
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += candidates[i].outcome;
  return sum / static_cast<double>(take);
}

}  // namespace

CorpusFeatures CorpusFeatures::build(const Corpus& corpus, std::size_t min_doc_count, const StopList* stop_list) {
  CorpusFeatures f;
  f.corpus = &corpus;
  f.vocab = Vocabulary::build(corpus, min_doc_count, stop_list);
  f.tfidf = TfidfModel::fit(corpus, f.vocab);
  f.binary.reserve(corpus.size());
  f.tfidf_rows.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    f.binary.push_back(vectorize_binary(s, f.vocab));
    f.tfidf_rows.push_back(f.tfidf.transform(s));
    auto tokens = s.tokens;
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) f.postings[t].push_back(i);
  }
  return f;
}

std::size_t EstimationProblem::query_row(const std::string& sentence_id) const {
  auto it = row_of.find(sentence_id);
  if (it == row_of.end()) {
    throw Error(ErrorKind::kSchema, "sentence '" + sentence_id + "' does not contain '" + pair.control_word + "'");
  }
  return it->second;
}

std::size_t EstimationProblem::control_position(std::size_t row) const {
  auto it = std::lower_bound(control_rows.begin(), control_rows.end(), row);
  if (it == control_rows.end() || *it != row) throw Error(ErrorKind::kInvalidArgument, "row is not a control row");
  return static_cast<std::size_t>(it - control_rows.begin());
}

BinaryRow EstimationProblem::twin(std::size_t row) const {
  BinaryRow out = rows.at(row).features;
  if (control_column) {
    auto it = std::lower_bound(out.begin(), out.end(), *control_column);
    if (it != out.end() && *it == *control_column) out.erase(it);
  }
  if (treatment_column) {
    auto it = std::lower_bound(out.begin(), out.end(), *treatment_column);
    if (it == out.end() || *it != *treatment_column) out.insert(it, *treatment_column);
  }
  return out;
}

BinaryMatrix EstimationProblem::union_matrix() const {
  BinaryMatrix m;
  m.n_features = n_features;
  m.rows.reserve(rows.size());
  for (const auto& r : rows) m.rows.push_back(r.features);
  return m;
}

BinaryMatrix EstimationProblem::group_matrix(const std::vector<std::size_t>& group) const {
  BinaryMatrix m;
  m.n_features = n_features;
  m.rows.reserve(group.size());
  for (auto r : group) m.rows.push_back(rows[r].features);
  return m;
}

EstimationProblem build_problem(const CorpusFeatures& features, const SubstitutionPair& pair) {
  if (features.corpus == nullptr) throw Error(ErrorKind::kInvalidArgument, "corpus features without a corpus");
  const Corpus& corpus = *features.corpus;
  EstimationProblem p;
  p.pair = pair;
  p.n_features = features.vocab.size();
  p.control_column = features.vocab.index_of(pair.control_word);
  p.treatment_column = features.vocab.index_of(pair.treatment_word);

  static const std::vector<std::size_t> kNone;
  auto postings_of = [&](const std::string& w) -> const std::vector<std::size_t>& {
    auto it = features.postings.find(w);
    return it == features.postings.end() ? kNone : it->second;
  };
  const auto& with_w1 = postings_of(pair.control_word);
  const auto& with_w2 = postings_of(pair.treatment_word);
  std::vector<std::pair<std::size_t, int>> members;  // (corpus index, treated)
  for (auto i : with_w1) members.emplace_back(i, 0);
  for (auto i : with_w2) {
    if (!std::binary_search(with_w1.begin(), with_w1.end(), i)) members.emplace_back(i, 1);
  }
  std::sort(members.begin(), members.end(),
            [&](const auto& a, const auto& b) { return corpus[a.first].id < corpus[b.first].id; });

  p.rows.reserve(members.size());
  for (const auto& [i, treated] : members) {
    ProblemRow row;
    row.sentence_id = corpus[i].id;
    row.corpus_index = i;
    row.treated = treated;
    row.outcome = corpus[i].label;
    row.has_both_words = treated == 0 && std::binary_search(with_w2.begin(), with_w2.end(), i);
    row.features = features.binary[i];
    row.context = features.tfidf_rows[i];
    if (p.control_column) row.context.erase(*p.control_column);
    if (p.treatment_column) row.context.erase(*p.treatment_column);
    row.context_norm = l2_norm(row.context);
    const std::size_t pos = p.rows.size();
    p.row_of.emplace(row.sentence_id, pos);
    (treated ? p.treatment_rows : p.control_rows).push_back(pos);
    p.rows.push_back(std::move(row));
  }
  return p;
}

EstimateResult lse_knn(const EstimationProblem& problem, std::size_t query_row, int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "K must be >= 1");
  if (query_row >= problem.rows.size()) throw Error(ErrorKind::kInvalidArgument, "query row out of range");
  const auto& query = problem.rows[query_row];
  if (problem.treatment_rows.empty() || problem.control_rows.empty()) {
    throw Error(ErrorKind::kDegenerate, "KNN needs nonempty treatment and control groups");
  }
  EstimateResult result;
  bool short_treatment = false, short_control = false;
  const double treated = neighbour_mean(problem, problem.treatment_rows, query, k, short_treatment);
  const double control = neighbour_mean(problem, problem.control_rows, query, k, short_control);
  result.value = treated - control;
  if (short_treatment) result.flags.push_back("knn_short_treatment_pool");
  if (short_control) result.flags.push_back("knn_short_control_pool");
  return result;
}

ForestModel fit_virtual_twin_forest(const EstimationProblem& problem, const ForestConfig& config, int jobs) {
  std::vector<std::size_t> all(problem.rows.size());
  std::iota(all.begin(), all.end(), 0);
  return fit_random_forest(problem.union_matrix(), outcomes(problem, all), config, jobs);
}

EstimateResult lse_vt_rf(const EstimationProblem& problem, const ForestModel& forest, std::size_t query_row) {
  control_query(problem, query_row);
  if (forest.training_size() != problem.rows.size()) {
    throw Error(ErrorKind::kInvalidArgument, "virtual-twin forest was not fitted on this problem");
  }
  EstimateResult result;
  const double twin = forest.probability(problem.twin(query_row));
  double original;
  if (forest.oob_trees(query_row).empty()) {
    original = forest.probability(problem.rows[query_row].features);
    result.flags.push_back("vt_rf_no_oob_fallback");
  } else {
    original = forest.oob_probability(query_row);
  }
  result.value = twin - original;
  return result;
}

GroupPredictor GroupPredictor::fit(const BinaryMatrix& x, std::span<const int> y, const ForestConfig& config,
                                   int jobs) {
  if (y.empty()) throw Error(ErrorKind::kDegenerate, "empty group");
  const double positives = static_cast<double>(std::accumulate(y.begin(), y.end(), 0));
  const double rate = positives / static_cast<double>(y.size());
  if (positives == 0 || positives == static_cast<double>(y.size()) ||
      y.size() < static_cast<std::size_t>(config.min_samples_leaf)) {
    return GroupPredictor(rate);
  }
  return GroupPredictor(fit_random_forest(x, y, config, jobs));
}

double GroupPredictor::probability(const BinaryRow& row) const {
  if (const auto* c = std::get_if<double>(&model_)) return *c;
  return std::get<ForestModel>(model_).probability(row);
}

double GroupPredictor::oob_probability(std::size_t index, bool& fell_back) const {
  fell_back = false;
  if (const auto* c = std::get_if<double>(&model_)) return *c;
  const auto& forest = std::get<ForestModel>(model_);
  if (forest.oob_trees(index).empty()) {
    fell_back = true;
    return forest.probability(forest.training.rows[index]);
  }
  return forest.oob_probability(index);
}

CounterfactualForests fit_counterfactual_forests(const EstimationProblem& problem, const ForestConfig& config,
                                                 int jobs) {
  if (problem.control_rows.empty() || problem.treatment_rows.empty()) {
    throw Error(ErrorKind::kDegenerate, "CF-RF needs nonempty treatment and control groups");
  }
  ForestConfig treatment_config = config;
  treatment_config.seed = derive_seed(config.seed, 1);
  CounterfactualForests f;
  f.control = GroupPredictor::fit(problem.group_matrix(problem.control_rows), outcomes(problem, problem.control_rows),
                                  config, jobs);
  f.treatment = GroupPredictor::fit(problem.group_matrix(problem.treatment_rows),
                                    outcomes(problem, problem.treatment_rows), treatment_config, jobs);
  return f;
}

EstimateResult lse_cf_rf(const EstimationProblem& problem, const CounterfactualForests& forests,
                         std::size_t query_row) {
  control_query(problem, query_row);
  EstimateResult result;
  bool fell_back = false;
  const double twin = forests.treatment.probability(problem.twin(query_row));
  const double original = forests.control.oob_probability(problem.control_position(query_row), fell_back);
  result.value = twin - original;
  if (fell_back) result.flags.push_back("cf_rf_no_oob_fallback");
  if (forests.control.is_constant()) result.flags.push_back("cf_rf_constant_control");
  if (forests.treatment.is_constant()) result.flags.push_back("cf_rf_constant_treatment");
  return result;
}

CausalForestModel fit_problem_causal_forest(const EstimationProblem& problem, const ForestConfig& config, int jobs) {
  std::vector<int> t;
  std::vector<double> y;
  t.reserve(problem.rows.size());
  y.reserve(problem.rows.size());
  for (const auto& r : problem.rows) {
    t.push_back(r.treated);
    y.push_back(static_cast<double>(r.outcome));
  }
  return fit_causal_forest(problem.union_matrix(), t, y, config, jobs);
}

EstimateResult lse_csf(const EstimationProblem& problem, const CausalForestModel& forest, std::size_t query_row) {
  const auto& query = control_query(problem, query_row);
  if (forest.training_size != problem.rows.size()) {
    throw Error(ErrorKind::kInvalidArgument, "causal forest was not fitted on this problem");
  }
  return {forest.estimate(query.features, query_row), {}};
}

void EstimatorConfig::validate() const {
  if (estimators.empty()) throw Error(ErrorKind::kInvalidArgument, "no estimators requested");
  for (const auto& name : estimators) {
    if (!is_estimator_name(name)) throw Error(ErrorKind::kInvalidArgument, "unknown estimator '" + name + "'");
    if (name == "perception_clf" && (perception == nullptr || sentence_classifier == nullptr)) {
      throw Error(ErrorKind::kInvalidArgument, "perception_clf needs a perception model and a sentence classifier");
    }
  }
  if (knn_k < 1) throw Error(ErrorKind::kInvalidArgument, "K must be >= 1");
  forest.validate();
  causal_forest.validate();
}

std::uint64_t pair_seed(std::uint64_t seed, const SubstitutionPair& pair, std::string_view estimator) {
  std::string key(estimator);
  key += '\t';
  key += pair.control_word;
  key += '\t';
  key += pair.treatment_word;
  return derive_seed(seed, stable_hash(key));
}

namespace {

struct PairOutcome {
  std::vector<LseTuple> tuples;
  std::vector<std::string> messages;
  bool skipped = false;
};

PairOutcome estimate_pair(std::vector<LseTuple> tuples, const CorpusFeatures& features,
                          const EstimatorConfig& config, int forest_jobs) {
  PairOutcome out;
  const auto& pair = tuples.front().pair;
  const EstimationProblem problem = build_problem(features, pair);
  std::vector<std::size_t> query_rows;
  for (auto& t : tuples) {
    query_rows.push_back(problem.query_row(t.sentence_id));
    if (problem.rows[query_rows.back()].has_both_words) add_flag(t.flags, "sentence_has_both_words");
  }
  bool any = false;
  for (const auto& name : config.estimators) {
    try {
      std::function<EstimateResult(std::size_t)> run;
      ForestModel vt;
      CounterfactualForests cf;
      CausalForestModel csf;
      if (name == "knn") {
        if (problem.treatment_rows.empty() || problem.control_rows.empty()) {
          throw Error(ErrorKind::kDegenerate, "KNN needs nonempty treatment and control groups");
        }
        run = [&](std::size_t row) { return lse_knn(problem, row, config.knn_k); };
      } else if (name == "vt_rf") {
        ForestConfig c = config.forest;
        c.seed = pair_seed(config.seed, pair, name);
        vt = fit_virtual_twin_forest(problem, c, forest_jobs);
        run = [&](std::size_t row) { return lse_vt_rf(problem, vt, row); };
      } else if (name == "cf_rf") {
        ForestConfig c = config.forest;
        c.seed = pair_seed(config.seed, pair, name);
        cf = fit_counterfactual_forests(problem, c, forest_jobs);
        run = [&](std::size_t row) { return lse_cf_rf(problem, cf, row); };
      } else if (name == "csf") {
        ForestConfig c = config.causal_forest;
        c.seed = pair_seed(config.seed, pair, name);
        csf = fit_problem_causal_forest(problem, c, forest_jobs);
        run = [&](std::size_t row) { return lse_csf(problem, csf, row); };
      } else {
        run = [&](std::size_t row) {
          const auto& sentence = (*features.corpus)[problem.rows[row].corpus_index];
          const auto f = perception_features(pair, sentence, *config.sentence_classifier);
          return EstimateResult{config.perception->estimate(f), {}};
        };
      }
      for (std::size_t i = 0; i < tuples.size(); ++i) {
        try {
          auto r = run(query_rows[i]);
          tuples[i].estimates[name] = r.value;
          for (const auto& f : r.flags) add_flag(tuples[i].flags, f);
          any = true;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kDegenerate) throw;
          add_flag(tuples[i].flags, name + "_failed");
          out.messages.push_back(pair.label() + " / " + tuples[i].sentence_id + ": " + name + ": " + e.what());
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerate) throw;
      out.messages.push_back(pair.label() + ": skipped " + name + ": " + e.what());
      for (auto& t : tuples) add_flag(t.flags, name + "_skipped");
    }
  }
  out.skipped = !any;
  out.tuples = std::move(tuples);
  return out;
}

}  // namespace

std::vector<LseTuple> estimate_all(const std::vector<LseTuple>& tuples, const CorpusFeatures& features,
                                   const EstimatorConfig& config, EstimationLog* log) {
  config.validate();
  std::vector<LseTuple> sorted = tuples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<LseTuple>> groups;
  for (auto& t : sorted) {
    if (groups.empty() || groups.back().front().pair.key() != t.pair.key()) groups.emplace_back();
    groups.back().push_back(std::move(t));
  }
  // Parallelism goes to pairs, or to trees when there is a single pair.
  const int pair_jobs = groups.size() > 1 ? config.jobs : 1;
  const int forest_jobs = groups.size() > 1 ? 1 : config.jobs;
  std::vector<PairOutcome> outcomes(groups.size());
  parallel_for(groups.size(), pair_jobs, [&](std::size_t g) {
    outcomes[g] = estimate_pair(std::move(groups[g]), features, config, forest_jobs);
  });

  std::vector<LseTuple> table;
  table.reserve(tuples.size());
  EstimationLog local;
  local.pairs = outcomes.size();
  for (auto& o : outcomes) {
    local.skipped += o.skipped;
    for (auto& m : o.messages) local.messages.push_back(std::move(m));
    for (auto& t : o.tuples) table.push_back(std::move(t));
  }
  if (log != nullptr) *log = std::move(local);
  return table;
}

std::vector<LseTuple> rank_estimates(const std::vector<LseTuple>& table, const std::string& estimator,
                                     bool descending) {
  if (!is_estimator_name(estimator)) throw Error(ErrorKind::kInvalidArgument, "unknown estimator '" + estimator + "'");
  std::vector<LseTuple> ranked;
  for (const auto& t : table) {
    if (t.estimates.count(estimator) != 0) ranked.push_back(t);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](const LseTuple& a, const LseTuple& b) {
    const double x = a.estimates.at(estimator);
    const double y = b.estimates.at(estimator);
    if (x != y) return descending ? x > y : x < y;
    return a < b;
  });
  return ranked;
}

}  // namespace lexsub
