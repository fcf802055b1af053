#pragma once

#include <array>
#include <span>
#include <vector>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/io.hpp"
#include "lexsub/linear_model.hpp"

namespace lexsub {

struct PerceptionFeatures {
  double context_probability = 0.5;  // classifier posterior with w1 removed
  double control_word_coefficient = 0.0;
  double treatment_word_coefficient = 0.0;

  std::array<double, 3> as_array() const {
    return {context_probability, control_word_coefficient, treatment_word_coefficient};
  }
};

inline constexpr std::array<const char*, 3> kPerceptionFeatureNames = {"context_pr", "control_word_pr",
                                                                       "treatment_word_pr"};

PerceptionFeatures perception_features(const SubstitutionPair& pair, const Sentence& sentence,
                                       const SentenceClassifier& classifier);

// 1 iff tau > 0.5 on the rating-difference scale.
int binarize_rct_effect(double tau);

struct PerceptionModel {
  std::array<double, 3> mean{};
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  LinearModel model;  // over standardized features

  std::array<double, 3> standardize(const PerceptionFeatures& f) const;
  double estimate(const PerceptionFeatures& f) const;
  // Fitted weight per feature, in kPerceptionFeatureNames order.
  const std::vector<double>& coefficients() const { return model.weights; }

  io::Json to_json() const;
  static PerceptionModel from_json(const io::Json& j);
};

// Features are standardized with the training mean and population standard
// deviation (constant columns keep scale 1); the fit uses linear_model.
PerceptionModel fit_perception_classifier(std::span<const PerceptionFeatures> features, std::span<const int> labels,
                                          const LogisticOptions& options = {});

struct PerceptionSource {
  const Corpus* corpus = nullptr;
  const SentenceClassifier* classifier = nullptr;
  std::vector<LseTuple> tuples;  // rct_effect required
};

PerceptionModel fit_perception_classifier(std::span<const PerceptionSource> sources,
                                          const LogisticOptions& options = {});

inline double perception_estimate(const PerceptionModel& model, const PerceptionFeatures& f) {
  return model.estimate(f);
}

}  // namespace lexsub
