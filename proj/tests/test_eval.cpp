#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lexsub/error.hpp"
#include "lexsub/eval.hpp"
#include "lexsub/random.hpp"
#include "lexsub/synthetic.hpp"
#include "oracles.hpp"

using namespace lexsub;

TEST(Pearson, AffineAndOracle) {
  const std::vector<double> x{1, 2, 3, 4, 7};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(2 * v + 3);
    z.push_back(-v);
  }
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-15);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(50), b(50);
    for (int i = 0; i < 50; ++i) {
      a[i] = rng.normal();
      b[i] = 0.5 * a[i] + rng.normal();
    }
    EXPECT_NEAR(pearson(a, b), oracle::pearson(a, b), 1e-12);
  }
  EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Spearman, RanksAndTies) {
  EXPECT_EQ(fractional_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{1, 8, 27, 64, 125};
  EXPECT_NEAR(spearman_rank(x, y), 1.0, 1e-15);
  const std::vector<double> r{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman_rank(x, r), -1.0, 1e-15);
  // ranks of {1,2,2,3} are {1,2.5,2.5,4}; of {1,3,2,2} are {1,4,2.5,2.5}
  // centred: {-1.5,0,0,1.5} and {-1.5,1.5,0,0}; cov 2.25, var 4.5 each -> 0.5
  EXPECT_NEAR(spearman_rank(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 3, 2, 2}), 0.5, 1e-15);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(50), b(50);
    for (int i = 0; i < 50; ++i) {
      a[i] = std::floor(rng.uniform() * 10);
      b[i] = std::floor(rng.uniform() * 10) + a[i];
    }
    EXPECT_NEAR(spearman_rank(a, b), oracle::spearman(a, b), 1e-12);
  }
}

TEST(Roc, ExtremesAndOracle) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}).auc, 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{0, 1, 1}).auc, 0.5);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(30);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) {
      y[i] = rng.bernoulli(0.4);
      s[i] = std::round((rng.uniform() + 0.3 * y[i]) * 8) / 8;  // coarse, so ties occur
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_EQ(roc_auc(s, y).auc, oracle::auc(s, y));
  }
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), Error);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 2}), Error);
}

TEST(Roc, CurveShapeAndCsv) {
  const auto r = roc_auc(std::vector<double>{0.9, 0.4, 0.4, 0.1}, std::vector<int>{1, 0, 1, 0});
  ASSERT_EQ(r.curve.size(), 4u);
  EXPECT_TRUE(std::isinf(r.curve[0].threshold));
  EXPECT_EQ(r.curve[0].fpr, 0.0);
  EXPECT_EQ(r.curve[0].tpr, 0.0);
  EXPECT_EQ(r.curve[1].tpr, 0.5);
  EXPECT_EQ(r.curve[2].fpr, 0.5);
  EXPECT_EQ(r.curve[2].tpr, 1.0);
  EXPECT_EQ(r.curve.back().fpr, 1.0);
  for (std::size_t i = 1; i < r.curve.size(); ++i) {
    EXPECT_GE(r.curve[i].fpr, r.curve[i - 1].fpr);
    EXPECT_GE(r.curve[i].tpr, r.curve[i - 1].tpr);
  }
  // trapezoids under the curve give the same area
  double area = 0;
  for (std::size_t i = 1; i < r.curve.size(); ++i) {
    area += (r.curve[i].fpr - r.curve[i - 1].fpr) * (r.curve[i].tpr + r.curve[i - 1].tpr) / 2;
  }
  EXPECT_DOUBLE_EQ(area, r.auc);
  const auto csv = roc_curve_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold,fpr,tpr");
  EXPECT_NE(csv.find("\ninf,0.0,0.0\n"), std::string::npos);
  EXPECT_EQ(rct_sign_label(0.0), 0);
  EXPECT_EQ(rct_sign_label(0.5), 1);
}

TEST(NegativeFraction, TopK) {
  Corpus c(Domain::kTwitter);
  c.add(Sentence::make("a", "x", 0, Domain::kTwitter));
  c.add(Sentence::make("b", "y", 1, Domain::kTwitter));
  c.add(Sentence::make("d", "z", 0, Domain::kTwitter));
  std::vector<LseTuple> ranked(3);
  ranked[0].sentence_id = "a";
  ranked[1].sentence_id = "d";
  ranked[2].sentence_id = "b";
  EXPECT_EQ(negative_fraction_top_k(ranked, c, 2), 1.0);
  EXPECT_DOUBLE_EQ(negative_fraction_top_k(ranked, c, 1000), 2.0 / 3.0);
  ranked[0].sentence_id = "nope";
  EXPECT_THROW(negative_fraction_top_k(ranked, c, 2), Error);
}

TEST(Agreement, MatrixAndCoverage) {
  std::vector<LseTuple> table(5);
  for (int i = 0; i < 5; ++i) {
    table[i].pair = {"a", "b", 0.5, "NN"};
    table[i].sentence_id = "s" + std::to_string(i);
    table[i].estimates = {{"knn", i * 1.0}, {"csf", -i * 2.0}, {"vt_rf", i * i * 1.0}};
  }
  const auto m = estimator_agreement_matrix(table, {"knn", "csf", "vt_rf"});
  EXPECT_EQ(m.values[0][0], 1.0);
  EXPECT_NEAR(m.values[0][1], -1.0, 1e-15);
  EXPECT_NEAR(m.values[0][2], 1.0, 1e-15);
  EXPECT_EQ(m.values[1][0], m.values[0][1]);
  table[2].estimates.erase("csf");
  try {
    estimator_agreement_matrix(table, {"knn", "csf"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("s2"), std::string::npos);
  }
}

TEST(Synthetic, PlantedStructure) {
  SyntheticSpec spec;
  spec.n_sentences = 400;
  spec.seed = 5;
  const auto d = generate_synthetic(spec);
  EXPECT_EQ(d.corpus.size(), 400u);
  std::size_t w1 = 0, w2 = 0;
  for (const auto& s : d.corpus.sentences()) {
    const bool a = s.contains("ctla"), b = s.contains("trta");
    EXPECT_FALSE(a && b);
    w1 += a;
    w2 += b;
    EXPECT_GE(s.tokens.size(), spec.min_length);
  }
  EXPECT_EQ(w1 + w2, 400u);
  EXPECT_EQ(d.truth.size(), w1);
  for (const auto& t : d.truth) EXPECT_EQ(t.effect, 0.3);
  EXPECT_EQ(d.paraphrases.candidates("ctla", 0.15).size(), 1u);
  const auto again = generate_synthetic(spec);
  for (std::size_t i = 0; i < 400; ++i) EXPECT_EQ(again.corpus[i].text, d.corpus[i].text);
  spec.base_rate = 0.9;
  EXPECT_THROW(spec.validate(), Error);
  EXPECT_EQ(SyntheticSpec::from_json(SyntheticSpec{}.to_json()).to_json(), SyntheticSpec{}.to_json());
}

TEST(Synthetic, LabelRatesFollowThePlant) {
  SyntheticSpec spec;
  spec.n_sentences = 20000;
  spec.seed = 6;
  const auto d = generate_synthetic(spec);
  double y1 = 0, n1 = 0, y2 = 0, n2 = 0;
  for (const auto& s : d.corpus.sentences()) {
    if (s.contains("ctla")) {
      y1 += s.label;
      ++n1;
    } else {
      y2 += s.label;
      ++n2;
    }
  }
  // binomial standard errors are about 0.005
  EXPECT_NEAR(y1 / n1, 0.35, 0.025);
  EXPECT_NEAR(y2 / n2, 0.65, 0.025);
}
