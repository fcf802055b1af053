#include <gtest/gtest.h>

#include <cmath>

#include "lexsub/corpus.hpp"
#include "lexsub/error.hpp"
#include "lexsub/linear_model.hpp"
#include "lexsub/random.hpp"
#include "oracles.hpp"

using namespace lexsub;

namespace {

SparseMatrix random_dense(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& v : r) v = rng.normal();
  }
  return SparseMatrix::from_dense(rows);
}

std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = rng.bernoulli(0.5);
  y[0] = 0;
  y[1] = 1;
  return y;
}

// Newton's method on the dense problem with Gaussian elimination; an
// independent minimizer of mean loss + l2/2 |w|^2.
double newton_minimum(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2) {
  const std::size_t n = x.size(), d = x[0].size(), p = d + 1;
  std::vector<double> theta(p, 0.0);
  auto loss = [&](const std::vector<double>& t) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = t[d];
      for (std::size_t j = 0; j < d; ++j) z += t[j] * x[i][j];
      total += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y[i] * z;
    }
    double reg = 0;
    for (std::size_t j = 0; j < d; ++j) reg += t[j] * t[j];
    return total / static_cast<double>(n) + 0.5 * l2 * reg;
  };
  for (int it = 0; it < 100; ++it) {
    std::vector<double> g(p, 0.0);
    std::vector<std::vector<double>> h(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> xi(x[i]);
      xi.push_back(1.0);
      double z = 0;
      for (std::size_t j = 0; j < p; ++j) z += theta[j] * xi[j];
      const double s = 1.0 / (1.0 + std::exp(-z));
      for (std::size_t a = 0; a < p; ++a) {
        g[a] += (s - y[i]) * xi[a] / static_cast<double>(n);
        for (std::size_t b = 0; b < p; ++b) h[a][b] += s * (1 - s) * xi[a] * xi[b] / static_cast<double>(n);
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      g[j] += l2 * theta[j];
      h[j][j] += l2;
    }
    // solve h * step = g
    for (std::size_t c = 0; c < p; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < p; ++r) {
        if (std::abs(h[r][c]) > std::abs(h[piv][c])) piv = r;
      }
      std::swap(h[c], h[piv]);
      std::swap(g[c], g[piv]);
      for (std::size_t r = c + 1; r < p; ++r) {
        const double f = h[r][c] / h[c][c];
        for (std::size_t k = c; k < p; ++k) h[r][k] -= f * h[c][k];
        g[r] -= f * g[c];
      }
    }
    std::vector<double> step(p);
    for (std::size_t c = p; c-- > 0;) {
      double v = g[c];
      for (std::size_t k = c + 1; k < p; ++k) v -= h[c][k] * step[k];
      step[c] = v / h[c][c];
    }
    for (std::size_t j = 0; j < p; ++j) theta[j] -= step[j];
  }
  return loss(theta);
}

}  // namespace

TEST(Logistic, GradientMatchesCentralDifferences) {
  Rng rng(11);
  const auto x = random_dense(30, 6, rng);
  const auto y = random_labels(30, rng);
  const LogisticObjective f(x, y, 0.3, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(7);
    for (auto& v : p) v = 2.0 * rng.normal();
    std::vector<double> g;
    f.value_and_gradient(p, g);
    double diff = 0, scale = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      auto hi = p, lo = p;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      const double numeric = (f.value(hi) - f.value(lo)) / 2e-5;
      diff += (numeric - g[j]) * (numeric - g[j]);
      scale += g[j] * g[j];
    }
    EXPECT_LT(std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12), 1e-5);
  }
}

TEST(Logistic, MatchesNewtonOracleLoss) {
  Rng rng(5);
  std::vector<std::vector<double>> dense(20, std::vector<double>(5));
  for (auto& r : dense) {
    for (auto& v : r) v = rng.normal();
  }
  const auto y = random_labels(20, rng);
  const auto x = SparseMatrix::from_dense(dense);
  LogisticOptions o;
  o.l2_strength = 0.1;
  FitReport report;
  fit_logistic(x, y, o, "t", &report);
  EXPECT_TRUE(report.converged);
  EXPECT_NEAR(report.final_loss, newton_minimum(dense, y, 0.1), 1e-6);
}

TEST(Logistic, LossNeverIncreases) {
  Rng rng(8);
  const auto x = random_dense(50, 4, rng);
  const auto y = random_labels(50, rng);
  FitReport report;
  fit_logistic(x, y, {}, "t", &report);
  for (std::size_t i = 1; i < report.loss_trace.size(); ++i) {
    EXPECT_LE(report.loss_trace[i], report.loss_trace[i - 1]);
  }
}

TEST(Logistic, SeparableOneDimensionShrinksWithPenalty) {
  const auto x = SparseMatrix::from_dense({{-1.0}, {1.0}});
  const std::vector<int> y{0, 1};
  double previous = INFINITY;
  for (double l2 : {0.5, 1.0, 4.0}) {
    LogisticOptions o;
    o.l2_strength = l2;
    const auto m = fit_logistic(x, y, o);
    EXPECT_GT(m.weights[0], 0.0);
    EXPECT_LT(m.weights[0], previous);
    previous = m.weights[0];
  }
}

TEST(Logistic, AllZeroFeaturesGiveLogOdds) {
  const auto x = SparseMatrix::from_dense({{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  const std::vector<int> y{1, 0, 0, 0};
  const auto m = fit_logistic(x, y, {});
  EXPECT_EQ(m.weights, (std::vector<double>{0.0, 0.0}));
  EXPECT_NEAR(m.bias, std::log(0.25 / 0.75), 1e-9);
}

TEST(Logistic, LabelFlipNegatesModel) {
  Rng rng(21);
  const auto x = random_dense(40, 3, rng);
  auto y = random_labels(40, rng);
  const auto a = fit_logistic(x, y, {});
  for (auto& v : y) v = 1 - v;
  const auto b = fit_logistic(x, y, {});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.weights[j], -b.weights[j], 1e-6);
  EXPECT_NEAR(a.bias, -b.bias, 1e-6);
}

TEST(Logistic, Deterministic) {
  Rng rng(2);
  const auto x = random_dense(40, 3, rng);
  const auto y = random_labels(40, rng);
  const auto a = fit_logistic(x, y, {});
  const auto b = fit_logistic(x, y, {});
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(Logistic, Errors) {
  const auto x = SparseMatrix::from_dense({{1.0}, {2.0}});
  EXPECT_THROW(fit_logistic(x, std::vector<int>{1, 1}, {}), Error);
  const auto bad = SparseMatrix::from_dense({{NAN}, {2.0}});
  try {
    fit_logistic(bad, std::vector<int>{0, 1}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
  LogisticOptions o;
  o.l2_strength = -1.0;
  EXPECT_THROW(fit_logistic(x, std::vector<int>{0, 1}, o), Error);
}

TEST(Predict, SigmoidArithmetic) {
  LinearModel m;
  m.weights = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(predict_positive_probability(m, std::vector<double>{3.0, -2.0}), 0.5);
  m.weights = {1.0, 0.5};
  m.bias = std::log(3.0) - 2.0;
  EXPECT_NEAR(predict_positive_probability(m, std::vector<double>{1.0, 2.0}), 0.75, 1e-15);
  EXPECT_THROW(predict_positive_probability(m, std::vector<double>{1.0}), Error);
  m.weights = {1000.0, 0.0};
  const double p = predict_positive_probability(m, std::vector<double>{1.0, 0.0});
  EXPECT_LT(p, 1.0);
  EXPECT_GT(predict_positive_probability(m, std::vector<double>{-1.0, 0.0}), 0.0);
}

TEST(Predict, FittedModelMatchesHandSigmoid) {
  Rng rng(4);
  const auto x = random_dense(30, 2, rng);
  const auto y = random_labels(30, rng);
  const auto m = fit_logistic(x, y, {});
  const std::vector<double> point{0.3, -1.2};
  const double z = m.weights[0] * 0.3 - m.weights[1] * 1.2 + m.bias;
  EXPECT_NEAR(predict_positive_probability(m, point), 1.0 / (1.0 + std::exp(-z)), 1e-15);
}

TEST(Model, JsonRoundTrip) {
  LinearModel m{"space", {0.25, -1.5}, 0.125};
  const auto back = LinearModel::from_json(m.to_json());
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.feature_space_id, "space");
  EXPECT_THROW(LinearModel::from_json(io::Json{{"format", "nope"}}), Error);
}

TEST(WordCoefficient, DiscriminativeAndNeutralWords) {
  Corpus c(Domain::kOther);
  // "boutique" marks every positive; "the" is everywhere; "plain" is balanced.
  for (int i = 0; i < 20; ++i) {
    const bool pos = i % 2 == 0;
    c.add(Sentence::make("s" + std::to_string(i),
                         std::string(pos ? "the boutique " : "the shop ") + (i % 4 < 2 ? "plain" : "other"), pos,
                         Domain::kOther));
  }
  const auto v = Vocabulary::build(c, 1);
  const auto tfidf = TfidfModel::fit(c, v);
  SparseMatrix x;
  x.n_cols = v.size();
  std::vector<int> y;
  for (const auto& s : c.sentences()) {
    x.rows.push_back(tfidf.transform(s));
    y.push_back(s.label);
  }
  const auto m = fit_logistic(x, y, {});
  EXPECT_GT(word_coefficient(m, v, "boutique"), 0.5);
  EXPECT_EQ(word_coefficient(m, v, "zebra"), 0.0);
  LogisticOptions strong;
  strong.l2_strength = 1.0;
  const auto ms = fit_logistic(x, y, strong);
  EXPECT_LT(std::abs(word_coefficient(ms, v, "plain")), 0.05);
}
