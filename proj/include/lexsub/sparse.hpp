#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lexsub {

// Sorted, duplicate-free feature indices of a binary bag-of-words row.
using BinaryRow = std::vector<std::uint32_t>;

struct BinaryMatrix {
  std::vector<BinaryRow> rows;
  std::size_t n_features = 0;

  std::size_t size() const { return rows.size(); }
};

bool contains_feature(const BinaryRow& row, std::uint32_t feature);

// Real-valued sparse vector; indices strictly increasing.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  double get(std::uint32_t index) const;
  // Drops the entry at `index` if present.
  void erase(std::uint32_t index);
};

struct SparseMatrix {
  std::vector<SparseVector> rows;
  std::size_t n_cols = 0;

  std::size_t size() const { return rows.size(); }
  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);
  static SparseMatrix from_binary(const BinaryMatrix& binary);
};

double dot(const SparseVector& a, const SparseVector& b);
double dot(const SparseVector& a, std::span<const double> dense);
double l2_norm(const SparseVector& v);
std::vector<double> to_dense(const SparseVector& v, std::size_t dim);
std::vector<double> to_dense(const BinaryRow& row, std::size_t dim);

}  // namespace lexsub
