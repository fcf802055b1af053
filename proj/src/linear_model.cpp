#include "lexsub/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lexsub/error.hpp"

namespace lexsub {
namespace {

double log1p_exp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LinearModel::score(const SparseVector& x) const {
  if (!x.indices.empty() && x.indices.back() >= weights.size()) {
    throw Error(ErrorKind::kInvalidArgument, "feature index out of range for model '" + feature_space_id + "'");
  }
  return dot(x, weights) + bias;
}

io::Json LinearModel::to_json() const {
  return {{"format", "lexsub.linear_model"}, {"version", 1}, {"feature_space_id", feature_space_id},
          {"weights", weights}, {"bias", bias}};
}

LinearModel LinearModel::from_json(const io::Json& j) {
  const std::string where = "linear model";
  if (io::require_string(j, "format", where) != "lexsub.linear_model" ||
      io::require_integer(j, "version", where) != 1) {
    throw Error(ErrorKind::kSchema, "unsupported linear model format");
  }
  LinearModel m;
  m.feature_space_id = io::require_string(j, "feature_space_id", where);
  m.weights = io::require(j, "weights", where).get<std::vector<double>>();
  m.bias = io::require_number(j, "bias", where);
  return m;
}

LogisticObjective::LogisticObjective(const SparseMatrix& x, std::span<const int> y, double l2_strength,
                                     double positive_weight)
    : x_(x), y_(y), l2_(l2_strength), positive_weight_(positive_weight) {
  if (x.size() != y.size()) throw Error(ErrorKind::kInvalidArgument, "feature/label count mismatch");
  for (int label : y) total_weight_ += label == 1 ? positive_weight_ : 1.0;
}

double LogisticObjective::value(std::span<const double> params) const {
  const std::size_t d = x_.n_cols;
  const std::span<const double> w = params.first(d);
  const double b = params[d];
  double loss = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double z = dot(x_.rows[i], w) + b;
    const double c = y_[i] == 1 ? positive_weight_ : 1.0;
    loss += c * (log1p_exp(z) - (y_[i] == 1 ? z : 0.0));
  }
  double sq = 0.0;
  for (double v : w) sq += v * v;
  return loss / total_weight_ + 0.5 * l2_ * sq;
}

double LogisticObjective::value_and_gradient(std::span<const double> params,
                                             std::vector<double>& gradient) const {
  const std::size_t d = x_.n_cols;
  const std::span<const double> w = params.first(d);
  const double b = params[d];
  gradient.assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const auto& row = x_.rows[i];
    const double z = dot(row, w) + b;
    const double c = y_[i] == 1 ? positive_weight_ : 1.0;
    loss += c * (log1p_exp(z) - (y_[i] == 1 ? z : 0.0));
    const double r = c * (sigmoid(z) - static_cast<double>(y_[i]));
    for (std::size_t k = 0; k < row.nnz(); ++k) gradient[row.indices[k]] += r * row.values[k];
    gradient[d] += r;
  }
  double sq = 0.0;
  for (std::size_t j = 0; j <= d; ++j) gradient[j] /= total_weight_;
  for (std::size_t j = 0; j < d; ++j) {
    sq += w[j] * w[j];
    gradient[j] += l2_ * w[j];
  }
  return loss / total_weight_ + 0.5 * l2_ * sq;
}

LinearModel fit_logistic(const SparseMatrix& x, std::span<const int> y, const LogisticOptions& options,
                         std::string feature_space_id, FitReport* report) {
  if (x.size() != y.size()) throw Error(ErrorKind::kInvalidArgument, "feature/label count mismatch");
  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    positives += label == 1;
  }
  if (positives == 0 || positives == y.size()) {
    throw Error(ErrorKind::kDegenerate, "degenerate labels: logistic fit needs both classes");
  }
  for (const auto& row : x.rows) {
    if (!row.indices.empty() && row.indices.back() >= x.n_cols) {
      throw Error(ErrorKind::kInvalidArgument, "feature index out of range");
    }
    for (double v : row.values) {
      if (!std::isfinite(v)) throw Error(ErrorKind::kNumerical, "non-finite feature value");
    }
  }
  const double l2 = options.l2_strength.value_or(1.0 / static_cast<double>(x.size()));
  if (!(l2 > 0.0) || !std::isfinite(l2)) throw Error(ErrorKind::kInvalidArgument, "l2_strength must be > 0");

  LogisticObjective objective(x, y, l2, options.positive_weight);
  const std::size_t d = x.n_cols;
  std::vector<double> params(d + 1, 0.0);
  const double pos_w = options.positive_weight * static_cast<double>(positives);
  const double neg_w = static_cast<double>(y.size() - positives);
  params[d] = std::log(pos_w / neg_w);

  std::vector<double> grad, trial(d + 1), trial_grad, prev_params, prev_grad;
  double loss = objective.value_and_gradient(params, grad);
  FitReport local;
  local.loss_trace.push_back(loss);
  double step = 1.0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double gnorm = inf_norm(grad);
    if (gnorm < options.gradient_tolerance) {
      local.converged = true;
      break;
    }
    if (!prev_params.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t j = 0; j <= d; ++j) {
        const double s = params[j] - prev_params[j];
        const double g = grad[j] - prev_grad[j];
        ss += s * s;
        sy += s * g;
      }
      step = sy > 0.0 ? ss / sy : 1.0;
    }
    double gg = 0.0;
    for (double g : grad) gg += g * g;
    double trial_loss = 0.0;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      for (std::size_t j = 0; j <= d; ++j) trial[j] = params[j] - step * grad[j];
      trial_loss = objective.value_and_gradient(trial, trial_grad);
      if (std::isfinite(trial_loss) && trial_loss <= loss - 1e-4 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable decrease along the gradient: at the optimum to machine precision.
      local.converged = true;
      break;
    }
    prev_params = params;
    prev_grad = grad;
    params = trial;
    grad = trial_grad;
    loss = trial_loss;
    local.loss_trace.push_back(loss);
  }
  local.iterations = it;
  local.final_loss = loss;
  local.gradient_norm = inf_norm(grad);
  if (report != nullptr) *report = std::move(local);

  LinearModel model;
  model.feature_space_id = std::move(feature_space_id);
  model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = params[d];
  return model;
}

namespace {

// Keeps probabilities strictly inside (0, 1) where the sigmoid saturates.
double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0 - 0x1p-53);
}

}  // namespace

double predict_positive_probability(const LinearModel& model, const SparseVector& x) {
  return open_unit(sigmoid(model.score(x)));
}

double predict_positive_probability(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw Error(ErrorKind::kInvalidArgument, "dimension mismatch: model has " +
                                                 std::to_string(model.weights.size()) + " weights, input has " +
                                                 std::to_string(x.size()));
  }
  double z = model.bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[j] * x[j];
  return open_unit(sigmoid(z));
}

double word_coefficient(const LinearModel& model, const Vocabulary& vocab, std::string_view word) {
  auto idx = vocab.index_of(word);
  if (!idx || *idx >= model.weights.size()) return 0.0;
  return model.weights[*idx];
}

}  // namespace lexsub
