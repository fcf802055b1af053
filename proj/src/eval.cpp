#include "lexsub/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lexsub/error.hpp"

namespace lexsub {

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::kInvalidArgument, "correlation inputs differ in length");
  if (xs.size() < 2) throw Error(ErrorKind::kDegenerate, "undefined correlation: fewer than 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::kDegenerate, "undefined correlation: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman_rank(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::kInvalidArgument, "correlation inputs differ in length");
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return pearson(rx, ry);
}

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::kInvalidArgument, "scores and labels differ in length");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw Error(ErrorKind::kNumerical, "non-finite score");
    positives += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorKind::kDegenerate, "ROC needs both label values");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  RocResult result;
  result.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  // Twice the number of correctly ordered (positive, negative) pairs, ties counting once.
  std::uint64_t twice_wins = 0;
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? group_pos : group_neg) += 1;
      ++j;
    }
    twice_wins += 2 * group_pos * (negatives - fp - group_neg) + group_pos * group_neg;
    tp += group_pos;
    fp += group_neg;
    result.curve.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
    i = j;
  }
  result.auc = static_cast<double>(twice_wins) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return result;
}

std::string roc_curve_csv(const RocResult& roc) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : roc.curve) {
    out += std::isinf(p.threshold) ? std::string("inf") : io::Json(p.threshold).dump();
    out += ',' + io::Json(p.fpr).dump() + ',' + io::Json(p.tpr).dump() + '\n';
  }
  return out;
}

double negative_fraction_top_k(const std::vector<LseTuple>& ranked, const Corpus& corpus, std::size_t k) {
  if (ranked.empty()) throw Error(ErrorKind::kDegenerate, "ranked list is empty");
  const std::size_t take = std::min(k, ranked.size());
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < take; ++i) {
    const auto* s = corpus.find(ranked[i].sentence_id);
    if (s == nullptr) throw Error(ErrorKind::kSchema, "unknown sentence id '" + ranked[i].sentence_id + "'");
    negatives += s->label == 0;
  }
  return static_cast<double>(negatives) / static_cast<double>(take);
}

AgreementMatrix estimator_agreement_matrix(const std::vector<LseTuple>& table,
                                           const std::vector<std::string>& estimators) {
  std::vector<std::string> missing;
  for (const auto& t : table) {
    for (const auto& name : estimators) {
      if (t.estimates.count(name) == 0) missing.push_back(t.pair.label() + "/" + t.sentence_id + " lacks " + name);
    }
  }
  if (!missing.empty()) {
    std::string message = "estimator coverage mismatch:";
    for (const auto& m : missing) message += "\n  " + m;
    throw Error(ErrorKind::kDegenerate, message);
  }
  std::vector<std::vector<double>> columns(estimators.size());
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    for (const auto& t : table) columns[e].push_back(t.estimates.at(estimators[e]));
  }
  AgreementMatrix m;
  m.estimators = estimators;
  m.values.assign(estimators.size(), std::vector<double>(estimators.size(), 1.0));
  for (std::size_t a = 0; a < estimators.size(); ++a) {
    for (std::size_t b = a + 1; b < estimators.size(); ++b) {
      const double r = spearman_rank(columns[a], columns[b]);
      m.values[a][b] = r;
      m.values[b][a] = r;
    }
  }
  return m;
}

}  // namespace lexsub
