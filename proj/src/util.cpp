#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "lexsub/error.hpp"
#include "lexsub/parallel.hpp"
#include "lexsub/random.hpp"
#include "lexsub/sparse.hpp"

namespace lexsub {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kMissingInput: return "missing_input";
    case ErrorKind::kSchema: return "schema_violation";
    case ErrorKind::kDegenerate: return "degenerate_data";
    case ErrorKind::kNumerical: return "numerical";
  }
  return "unknown";
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

bool contains_feature(const BinaryRow& row, std::uint32_t feature) {
  return std::binary_search(row.begin(), row.end(), feature);
}

double SparseVector::get(std::uint32_t index) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

void SparseVector::erase(std::uint32_t index) {
  auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return;
  const auto pos = it - indices.begin();
  indices.erase(it);
  values.erase(values.begin() + pos);
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  SparseMatrix m;
  m.n_cols = dense.empty() ? 0 : dense.front().size();
  m.rows.reserve(dense.size());
  for (const auto& row : dense) {
    if (row.size() != m.n_cols) {
      throw Error(ErrorKind::kInvalidArgument, "ragged dense matrix");
    }
    SparseVector v;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) {
        v.indices.push_back(static_cast<std::uint32_t>(j));
        v.values.push_back(row[j]);
      }
    }
    m.rows.push_back(std::move(v));
  }
  return m;
}

SparseMatrix SparseMatrix::from_binary(const BinaryMatrix& binary) {
  SparseMatrix m;
  m.n_cols = binary.n_features;
  m.rows.reserve(binary.size());
  for (const auto& row : binary.rows) {
    SparseVector v;
    v.indices = row;
    v.values.assign(row.size(), 1.0);
    m.rows.push_back(std::move(v));
  }
  return m;
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.nnz() && j < b.nnz()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      sum += a.values[i] * b.values[j];
      ++i;
      ++j;
    }
  }
  return sum;
}

double dot(const SparseVector& a, std::span<const double> dense) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.nnz(); ++k) sum += a.values[k] * dense[a.indices[k]];
  return sum;
}

double l2_norm(const SparseVector& v) {
  double sum = 0.0;
  for (double x : v.values) sum += x * x;
  return std::sqrt(sum);
}

std::vector<double> to_dense(const SparseVector& v, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < v.nnz(); ++k) out[v.indices[k]] = v.values[k];
  return out;
}

std::vector<double> to_dense(const BinaryRow& row, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (auto j : row) out[j] = 1.0;
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lexsub
