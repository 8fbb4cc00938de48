#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace maxwave {

/// One additive contribution to a sparse matrix entry.
struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed sparse row matrix assembled from summed triplets.
///
/// Duplicate (row, col) contributions are accumulated in their original
/// insertion order, so assembling the same element sequence twice produces
/// bitwise-identical matrices.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("CsrMatrix: negative dimension");
    for (const Triplet& t : entries) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
        throw std::invalid_argument("CsrMatrix: triplet outside matrix bounds");
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    CsrMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
    std::size_t i = 0;
    while (i < entries.size()) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < entries.size() && entries[j].row == entries[i].row &&
             entries[j].col == entries[i].col) {
        sum += entries[j].value;
        ++j;
      }
      m.cols_idx_.push_back(entries[i].col);
      m.values_.push_back(sum);
      ++m.offsets_[static_cast<std::size_t>(entries[i].row) + 1];
      i = j;
    }
    for (int r = 0; r < rows; ++r) m.offsets_[r + 1] += m.offsets_[r];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }

  /// Entry at (r, c); zero when the position is not stored.
  double coeff(int r, int c) const {
    auto first = cols_idx_.begin() + offsets_[r];
    auto last = cols_idx_.begin() + offsets_[r + 1];
    auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_idx_.begin())];
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    check_spans(x, y);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) acc += values_[k] * x[cols_idx_[k]];
      y[r] = acc;
    }
  }

  /// y += alpha * A x
  void multiply_add(double alpha, std::span<const double> x, std::span<double> y) const {
    check_spans(x, y);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) acc += values_[k] * x[cols_idx_[k]];
      y[r] += alpha * acc;
    }
  }

  std::vector<double> row_sums() const {
    std::vector<double> s(static_cast<std::size_t>(rows_), 0.0);
    for (int r = 0; r < rows_; ++r) {
      for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) s[r] += values_[k];
    }
    return s;
  }

  const std::vector<int>& offsets() const { return offsets_; }
  const std::vector<int>& col_indices() const { return cols_idx_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const CsrMatrix& other) const = default;

 private:
  void check_spans(std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_) {
      throw std::invalid_argument("CsrMatrix: operand size mismatch");
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> cols_idx_;
  std::vector<double> values_;
};

}  // namespace maxwave
