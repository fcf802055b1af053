#include "lexsub/perception.hpp"

#include <algorithm>
#include <cmath>

#include "lexsub/error.hpp"

namespace lexsub {

PerceptionFeatures perception_features(const SubstitutionPair& pair, const Sentence& sentence,
                                       const SentenceClassifier& classifier) {
  const auto& vocab = classifier.tfidf.vocabulary();
  SparseVector x = classifier.tfidf.transform(sentence);
  if (auto col = vocab.index_of(pair.control_word)) x.erase(*col);
  PerceptionFeatures f;
  f.context_probability = predict_positive_probability(classifier.model, x);
  f.control_word_coefficient = classifier.coefficient(pair.control_word);
  f.treatment_word_coefficient = classifier.coefficient(pair.treatment_word);
  return f;
}

int binarize_rct_effect(double tau) { return tau > 0.5 ? 1 : 0; }

std::array<double, 3> PerceptionModel::standardize(const PerceptionFeatures& f) const {
  const auto raw = f.as_array();
  std::array<double, 3> z{};
  for (std::size_t k = 0; k < 3; ++k) z[k] = (raw[k] - mean[k]) / scale[k];
  return z;
}

double PerceptionModel::estimate(const PerceptionFeatures& f) const {
  const auto z = standardize(f);
  return predict_positive_probability(model, std::span<const double>(z));
}

io::Json PerceptionModel::to_json() const {
  return {{"format", "lexsub.perception_model"},
          {"version", 1},
          {"features", kPerceptionFeatureNames},
          {"mean", mean},
          {"scale", scale},
          {"model", model.to_json()}};
}

PerceptionModel PerceptionModel::from_json(const io::Json& j) {
  if (!j.is_object() || j.value("format", "") != "lexsub.perception_model" || j.value("version", 0) != 1) {
    throw Error(ErrorKind::kSchema, "expected a version 1 perception model");
  }
  PerceptionModel m;
  m.mean = j.at("mean").get<std::array<double, 3>>();
  m.scale = j.at("scale").get<std::array<double, 3>>();
  m.model = LinearModel::from_json(j.at("model"));
  if (m.model.weights.size() != 3) throw Error(ErrorKind::kSchema, "perception model must have 3 weights");
  return m;
}

PerceptionModel fit_perception_classifier(std::span<const PerceptionFeatures> features, std::span<const int> labels,
                                          const LogisticOptions& options) {
  if (features.size() != labels.size()) throw Error(ErrorKind::kInvalidArgument, "feature/label count mismatch");
  if (features.empty()) throw Error(ErrorKind::kDegenerate, "degenerate labels: no training tuples");
  PerceptionModel m;
  const double n = static_cast<double>(features.size());
  for (const auto& f : features) {
    const auto a = f.as_array();
    for (std::size_t k = 0; k < 3; ++k) {
      if (!std::isfinite(a[k])) throw Error(ErrorKind::kNumerical, "non-finite perception feature");
      m.mean[k] += a[k] / n;
    }
  }
  std::array<double, 3> var{};
  for (const auto& f : features) {
    const auto a = f.as_array();
    for (std::size_t k = 0; k < 3; ++k) var[k] += (a[k] - m.mean[k]) * (a[k] - m.mean[k]) / n;
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double first = features.front().as_array()[k];
    const bool constant =
        std::all_of(features.begin(), features.end(), [&](const auto& f) { return f.as_array()[k] == first; });
    // exact centring so a constant column standardizes to zero
    if (constant) m.mean[k] = first;
    m.scale[k] = !constant && var[k] > 0.0 ? std::sqrt(var[k]) : 1.0;
  }

  std::vector<std::vector<double>> dense;
  dense.reserve(features.size());
  for (const auto& f : features) {
    const auto z = m.standardize(f);
    dense.emplace_back(z.begin(), z.end());
  }
  m.model = fit_logistic(SparseMatrix::from_dense(dense), labels, options, "perception.standardized");
  return m;
}

PerceptionModel fit_perception_classifier(std::span<const PerceptionSource> sources,
                                          const LogisticOptions& options) {
  std::vector<PerceptionFeatures> features;
  std::vector<int> labels;
  for (const auto& source : sources) {
    if (source.corpus == nullptr || source.classifier == nullptr) {
      throw Error(ErrorKind::kInvalidArgument, "perception source needs a corpus and a sentence classifier");
    }
    for (const auto& t : source.tuples) {
      if (!t.rct_effect) {
        throw Error(ErrorKind::kSchema, "training tuple " + t.pair.label() + "/" + t.sentence_id + " has no rct_effect");
      }
      const auto* s = source.corpus->find(t.sentence_id);
      if (s == nullptr) throw Error(ErrorKind::kSchema, "unknown sentence id '" + t.sentence_id + "'");
      features.push_back(perception_features(t.pair, *s, *source.classifier));
      labels.push_back(binarize_rct_effect(*t.rct_effect));
    }
  }
  return fit_perception_classifier(features, labels, options);
}

}  // namespace lexsub
