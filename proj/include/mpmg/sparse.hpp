#pragma once

#include <memory>
#include <span>
#include <vector>

#include "mpmg/types.hpp"

namespace mpmg {

// Row-compressed sparse matrix in carrier precision. Within a row, entries are
// stored in increasing column order; the rounded kernels accumulate in exactly
// this order.
//
// Instances are immutable after construction. Spectral quantities are computed
// on first request and shared between copies.
class SparseMatrix {
 public:
  struct Entry {
    int row;
    int col;
    real value;
  };

  SparseMatrix();
  // Duplicate (row, col) pairs are summed; explicit zeros are dropped.
  SparseMatrix(int rows, int cols, std::vector<Entry> entries);

  static SparseMatrix identity(int n);
  static SparseMatrix diagonal(const Vector& d);
  static SparseMatrix from_dense(const Matrix& dense);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nonzeros() const { return static_cast<int>(values_.size()); }

  std::span<const int> row_columns(int i) const;
  std::span<const real> row_values(int i) const;
  real coeff(int i, int j) const;

  // m_K of the rounding models: most stored entries in any row.
  int max_row_nonzeros() const;
  int max_col_nonzeros() const;

  Vector multiply(const Vector& x) const;
  SparseMatrix transpose() const;
  SparseMatrix abs() const;
  SparseMatrix scaled(real factor) const;
  Matrix to_dense() const;

  bool is_symmetric() const;

  // eta_K = || |K| ||, the spectral norm of the entrywise absolute value.
  real abs_norm() const;

  std::span<const real> values() const { return values_; }
  std::span<const int> row_offsets() const { return row_ptr_; }
  std::span<const int> column_indices() const { return col_idx_; }

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

 private:
  struct Cache;

  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<real> values_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace mpmg
