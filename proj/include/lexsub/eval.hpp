#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"

namespace lexsub {

// Sample Pearson correlation; throws "undefined correlation" for constant input.
double pearson(std::span<const double> xs, std::span<const double> ys);
// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> fractional_ranks(std::span<const double> values);
double spearman_rank(std::span<const double> xs, std::span<const double> ys);

struct RocPoint {
  double threshold;  // +inf for the origin point
  double fpr;
  double tpr;
};

struct RocResult {
  double auc = 0.5;
  std::vector<RocPoint> curve;
};

// AUC = P(score of a random positive > score of a random negative), ties 1/2.
// The curve has one point per distinct score, from (0,0) to (1,1).
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);
std::string roc_curve_csv(const RocResult& roc);

// RCT outcomes become ROC labels as positive iff tau > 0.
inline int rct_sign_label(double tau) { return tau > 0.0 ? 1 : 0; }

// Fraction of the first min(k, n) tuples whose sentence has label 0.
double negative_fraction_top_k(const std::vector<LseTuple>& ranked, const Corpus& corpus, std::size_t k = 1000);

struct AgreementMatrix {
  std::vector<std::string> estimators;
  std::vector<std::vector<double>> values;
};

// Spearman correlation between every two estimators over the tuples of
// `table`. Every tuple must carry every named estimator.
AgreementMatrix estimator_agreement_matrix(const std::vector<LseTuple>& table,
                                           const std::vector<std::string>& estimators);

}  // namespace lexsub
