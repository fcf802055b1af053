#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexsub/io.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/sparse.hpp"

namespace lexsub {

struct LinearModel {
  std::string feature_space_id;
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t dimension() const { return weights.size(); }
  double score(const SparseVector& x) const;

  io::Json to_json() const;
  static LinearModel from_json(const io::Json& j);
};

struct LogisticOptions {
  // Penalty on the mean loss: mean_i loss_i + (l2_strength / 2) * |w|^2.
  // Unset means 1 / n, which reproduces scikit-learn's C = 1 minimizer.
  std::optional<double> l2_strength;
  double gradient_tolerance = 1e-6;
  int max_iterations = 10000;
  double positive_weight = 1.0;
};

struct FitReport {
  int iterations = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;  // infinity norm
  bool converged = false;
  std::vector<double> loss_trace;  // loss after each accepted step, starting at the initial point
};

// Regularized mean logistic loss. The bias is never penalized.
class LogisticObjective {
 public:
  LogisticObjective(const SparseMatrix& x, std::span<const int> y, double l2_strength,
                    double positive_weight = 1.0);
  // Holds a reference to x; a temporary would dangle.
  LogisticObjective(SparseMatrix&& x, std::span<const int> y, double l2_strength, double positive_weight = 1.0) = delete;

  std::size_t dimension() const { return x_.n_cols; }
  // params = [weights..., bias]
  double value(std::span<const double> params) const;
  double value_and_gradient(std::span<const double> params, std::vector<double>& gradient) const;

 private:
  const SparseMatrix& x_;
  std::span<const int> y_;
  double l2_;
  double positive_weight_;
  double total_weight_ = 0.0;
};

// Full-batch gradient descent with Barzilai-Borwein trial steps and Armijo
// backtracking. Deterministic: starts from zero weights and the bias at the
// weighted log-odds of y.
LinearModel fit_logistic(const SparseMatrix& x, std::span<const int> y, const LogisticOptions& options,
                         std::string feature_space_id = {}, FitReport* report = nullptr);

double sigmoid(double z);
double predict_positive_probability(const LinearModel& model, const SparseVector& x);
double predict_positive_probability(const LinearModel& model, std::span<const double> x);

// Weight at the word's vocabulary index, or 0 if the word is not in `vocab`.
double word_coefficient(const LinearModel& model, const Vocabulary& vocab, std::string_view word);

}  // namespace lexsub
