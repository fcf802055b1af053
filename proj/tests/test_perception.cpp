#include <gtest/gtest.h>

#include <cmath>

#include "lexsub/error.hpp"
#include "lexsub/perception.hpp"
#include "lexsub/random.hpp"

using namespace lexsub;

namespace {

Corpus toy_corpus() {
  Corpus c(Domain::kYelp);
  const char* pos[] = {"lovely boutique staff", "lovely little shop", "charming boutique", "great lovely place"};
  const char* neg[] = {"dull shop staff", "awful little shop", "dull place", "awful staff here"};
  int i = 0;
  for (auto* t : pos) c.add(Sentence::make("p" + std::to_string(i++), t, 1, Domain::kYelp));
  for (auto* t : neg) c.add(Sentence::make("n" + std::to_string(i++), t, 0, Domain::kYelp));
  return c;
}

}  // namespace

TEST(Features, ZeroWeightClassifier) {
  const auto c = toy_corpus();
  SentenceClassifier clf;
  clf.tfidf = TfidfModel::fit(c, Vocabulary::build(c, 1));
  clf.model.weights.assign(clf.tfidf.dimension(), 0.0);
  const auto f = perception_features({"shop", "boutique", 0.3, "NN"}, c[1], clf);
  EXPECT_EQ(f.context_probability, 0.5);
  EXPECT_EQ(f.control_word_coefficient, 0.0);
  EXPECT_EQ(f.treatment_word_coefficient, 0.0);
}

TEST(Features, FittedClassifierHandArithmetic) {
  const auto c = toy_corpus();
  const auto clf = SentenceClassifier::fit(c, Vocabulary::build(c, 1), {});
  const auto& vocab = clf.tfidf.vocabulary();
  const auto& s = c[4];  // "dull shop staff"
  const auto f = perception_features({"shop", "zebra", 0.3, "NN"}, s, clf);
  // tf-idf over all three tokens, then drop shop's column without renormalizing
  std::vector<double> vals;
  double norm = 0;
  for (const auto& tok : s.tokens) {
    const double v = clf.tfidf.idf(*vocab.index_of(tok));
    vals.push_back(v);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  double z = clf.model.bias;
  for (std::size_t k = 0; k < s.tokens.size(); ++k) {
    if (s.tokens[k] == "shop") continue;
    z += clf.model.weights[*vocab.index_of(s.tokens[k])] * vals[k] / norm;
  }
  EXPECT_NEAR(f.context_probability, 1.0 / (1.0 + std::exp(-z)), 1e-14);
  EXPECT_EQ(f.control_word_coefficient, clf.model.weights[*vocab.index_of("shop")]);
  EXPECT_EQ(f.treatment_word_coefficient, 0.0);
  EXPECT_GT(f.context_probability, 0.0);
  EXPECT_LT(f.context_probability, 1.0);
}

TEST(Binarize, StrictThreshold) {
  EXPECT_EQ(binarize_rct_effect(0.5), 0);
  EXPECT_EQ(binarize_rct_effect(1.0), 1);
  EXPECT_EQ(binarize_rct_effect(-2.0), 0);
  int previous = 0;
  for (double tau = -4; tau <= 4; tau += 0.25) {
    EXPECT_GE(binarize_rct_effect(tau), previous);
    previous = binarize_rct_effect(tau);
  }
}

TEST(Fit, OnlyTheInformativeFeatureGetsWeight) {
  std::vector<PerceptionFeatures> f;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    const double w2 = (i % 2 ? 1.0 : -1.0) * (0.1 + 0.01 * i);
    f.push_back({0.6, -0.2, w2});
    y.push_back(w2 > 0);
  }
  const auto m = fit_perception_classifier(f, y);
  EXPECT_EQ(m.coefficients()[0], 0.0);
  EXPECT_EQ(m.coefficients()[1], 0.0);
  EXPECT_GT(m.coefficients()[2], 0.0);
}

TEST(Fit, StandardizationRoundTrip) {
  Rng rng(3);
  std::vector<PerceptionFeatures> f;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    f.push_back({0.2 + 0.6 * rng.uniform(), rng.normal() * 2.0 + 1.0, rng.normal() * 0.3});
    y.push_back(rng.bernoulli(0.5));
  }
  const auto m = fit_perception_classifier(f, y);
  std::array<double, 3> mean{}, var{};
  for (const auto& x : f) {
    const auto z = m.standardize(x);
    for (int k = 0; k < 3; ++k) mean[k] += z[k] / 200.0;
  }
  for (const auto& x : f) {
    const auto z = m.standardize(x);
    for (int k = 0; k < 3; ++k) var[k] += (z[k] - mean[k]) * (z[k] - mean[k]) / 200.0;
  }
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT(std::abs(mean[k]), 1e-9);
    EXPECT_NEAR(var[k], 1.0, 1e-9);
  }
}

TEST(Fit, DuplicatedRowsGiveSameModel) {
  Rng rng(4);
  std::vector<PerceptionFeatures> f;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    f.push_back({rng.uniform(), rng.normal(), rng.normal()});
    y.push_back(rng.bernoulli(0.4));
  }
  auto f2 = f;
  auto y2 = y;
  f2.insert(f2.end(), f.begin(), f.end());
  y2.insert(y2.end(), y.begin(), y.end());
  // mean loss is duplication invariant when the penalty is held fixed
  LogisticOptions o;
  o.l2_strength = 0.02;
  const auto a = fit_perception_classifier(f, y, o);
  const auto b = fit_perception_classifier(f2, y2, o);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.coefficients()[k], b.coefficients()[k], 1e-7);
  EXPECT_NEAR(a.model.bias, b.model.bias, 1e-7);
}

TEST(Estimate, HandSigmoidAndMonotone) {
  PerceptionModel m;
  m.model.weights = {0.0, 0.0, 0.0};
  EXPECT_EQ(m.estimate({0.3, 1.0, -1.0}), 0.5);
  m.mean = {0.5, 0.0, 0.0};
  m.scale = {0.1, 2.0, 1.0};
  m.model.weights = {-0.4, -0.3, 0.9};
  m.model.bias = 0.1;
  const PerceptionFeatures x{0.7, 1.0, 0.5};
  const double z = 0.1 - 0.4 * (0.7 - 0.5) / 0.1 - 0.3 * 1.0 / 2.0 + 0.9 * 0.5;
  EXPECT_NEAR(m.estimate(x), 1.0 / (1.0 + std::exp(-z)), 1e-15);
  double previous = 0;
  for (double w2 = -2; w2 <= 2; w2 += 0.5) {
    const double p = m.estimate({0.7, 1.0, w2});
    EXPECT_GT(p, previous);
    previous = p;
  }
  const auto back = PerceptionModel::from_json(m.to_json());
  EXPECT_EQ(back.estimate(x), m.estimate(x));
}

TEST(Fit, Errors) {
  std::vector<PerceptionFeatures> f(4, PerceptionFeatures{0.5, 0.1, 0.2});
  EXPECT_THROW(fit_perception_classifier(f, std::vector<int>{1, 1, 1, 1}), Error);
  EXPECT_THROW(fit_perception_classifier(f, std::vector<int>{1, 0}), Error);
  f[0].treatment_word_coefficient = NAN;
  EXPECT_THROW(fit_perception_classifier(f, std::vector<int>{1, 0, 1, 0}), Error);
}
