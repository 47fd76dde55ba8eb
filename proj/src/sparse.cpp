#include "mpmg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "mpmg/linops.hpp"

namespace mpmg {

struct SparseMatrix::Cache {
  std::once_flag abs_norm_once;
  real abs_norm = 0;
};

SparseMatrix::SparseMatrix() : row_ptr_(1, 0), cache_(std::make_shared<Cache>()) {}

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<Entry> entries)
    : rows_(rows), cols_(cols), cache_(std::make_shared<Cache>()) {
  if (rows < 0 || cols < 0) throw contract_violation("SparseMatrix: negative dimension");
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw contract_violation("SparseMatrix: entry index out of range");
    if (!std::isfinite(e.value)) throw contract_violation("SparseMatrix: non-finite entry");
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const int r = entries[k].row;
    const int c = entries[k].col;
    real sum = 0;
    for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k)
      sum += entries[k].value;
    if (sum == 0) continue;
    col_idx_.push_back(c);
    values_.push_back(sum);
    ++row_ptr_[static_cast<std::size_t>(r) + 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Entry> e;
  e.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) e.push_back({i, i, 1});
  return SparseMatrix(n, n, std::move(e));
}

SparseMatrix SparseMatrix::diagonal(const Vector& d) {
  const int n = static_cast<int>(d.size());
  std::vector<Entry> e;
  for (int i = 0; i < n; ++i) e.push_back({i, i, d(i)});
  return SparseMatrix(n, n, std::move(e));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<Entry> e;
  for (int i = 0; i < dense.rows(); ++i)
    for (int j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0) e.push_back({i, j, dense(i, j)});
  return SparseMatrix(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()),
                      std::move(e));
}

std::span<const int> SparseMatrix::row_columns(int i) const {
  const auto b = static_cast<std::size_t>(row_ptr_[i]);
  const auto e = static_cast<std::size_t>(row_ptr_[i + 1]);
  return std::span<const int>(col_idx_).subspan(b, e - b);
}

std::span<const real> SparseMatrix::row_values(int i) const {
  const auto b = static_cast<std::size_t>(row_ptr_[i]);
  const auto e = static_cast<std::size_t>(row_ptr_[i + 1]);
  return std::span<const real>(values_).subspan(b, e - b);
}

real SparseMatrix::coeff(int i, int j) const {
  const auto cols = row_columns(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0;
  return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
}

int SparseMatrix::max_row_nonzeros() const {
  int m = 0;
  for (int i = 0; i < rows_; ++i) m = std::max(m, row_ptr_[i + 1] - row_ptr_[i]);
  return m;
}

int SparseMatrix::max_col_nonzeros() const {
  std::vector<int> count(static_cast<std::size_t>(cols_), 0);
  for (int c : col_idx_) ++count[static_cast<std::size_t>(c)];
  return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

Vector SparseMatrix::multiply(const Vector& x) const {
  if (x.size() != cols_) throw contract_violation("SparseMatrix::multiply: dimension mismatch");
  Vector y(rows_);
  for (int i = 0; i < rows_; ++i) {
    real s = 0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x(col_idx_[k]);
    y(i) = s;
  }
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Entry> e;
  e.reserve(values_.size());
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) e.push_back({col_idx_[k], i, values_[k]});
  return SparseMatrix(cols_, rows_, std::move(e));
}

SparseMatrix SparseMatrix::abs() const {
  SparseMatrix out = *this;
  out.cache_ = std::make_shared<Cache>();
  for (auto& v : out.values_) v = std::fabs(v);
  return out;
}

SparseMatrix SparseMatrix::scaled(real factor) const {
  if (factor == 0) return SparseMatrix(rows_, cols_, {});
  SparseMatrix out = *this;
  out.cache_ = std::make_shared<Cache>();
  for (auto& v : out.values_) v *= factor;
  return out;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d = Matrix::Zero(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
  return d;
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (coeff(col_idx_[k], i) != values_[k]) return false;
  return true;
}

real SparseMatrix::abs_norm() const {
  std::call_once(cache_->abs_norm_once,
                 [this] { cache_->abs_norm = operator_norm(abs().to_dense()); });
  return cache_->abs_norm;
}

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.row_ptr_ == b.row_ptr_ &&
         a.col_idx_ == b.col_idx_ && a.values_ == b.values_;
}

}  // namespace mpmg
