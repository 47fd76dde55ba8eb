#pragma once

#include <filesystem>
#include <memory>

#include "mpmg/precision.hpp"
#include "mpmg/sparse.hpp"
#include "mpmg/types.hpp"

namespace mpmg {

// Eigen-decomposition of an SPD matrix, A = V diag(lambda) V^t, with the
// square-root operators needed for energy-norm conversions.
struct Spectrum {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors;
  Matrix sqrt;         // A^{1/2}
  Matrix inv_sqrt;     // A^{-1/2}
};

// Symmetric positive definite sparse matrix. Symmetry and definiteness are
// verified on construction (exact symmetry of stored entries, then a dense
// Cholesky factorization). The factorization and the spectrum are cached.
class SparseSpd {
 public:
  explicit SparseSpd(SparseMatrix K);

  const SparseMatrix& matrix() const { return matrix_; }
  int dimension() const { return matrix_.rows(); }

  const Spectrum& spectrum() const;
  real lambda_min() const { return spectrum().eigenvalues(0); }
  real lambda_max() const { return spectrum().eigenvalues(dimension() - 1); }

  Vector solve(const Vector& b) const;
  Matrix inverse() const;

 private:
  struct Cache;

  SparseMatrix matrix_;
  std::shared_ptr<Cache> cache_;
};

// Euclidean operator norm (largest singular value) of a general matrix.
real operator_norm(const Matrix& K);

// Largest eigenvalue magnitude of a symmetric matrix.
real spectral_norm(const Matrix& K);
real spectral_norm(const SparseMatrix& K);

real abs_matrix_norm(const Matrix& K);
real abs_matrix_norm(const SparseMatrix& K);

// ||w||_A = sqrt(w^t A w).
real energy_norm(const Vector& w, const SparseSpd& A);

// ||E||_A = ||A^{1/2} E A^{-1/2}|| for a dense operator E on A's space.
real energy_operator_norm(const Matrix& E, const SparseSpd& A);

real condition_number(const SparseSpd& A);

// (m + 1) / (1 - (m + 1) eps); throws precision_too_low unless (m + 1) eps < 1.
real mdot_plus(int m, real eps);
real mdot_plus(int m, const PrecisionFormat& fmt);

// Direct factorization-based solve in carrier precision.
Vector solve_spd(const SparseSpd& A, const Vector& b);

// Matrix Market coordinate files. Symmetric files store the lower triangle.
SparseMatrix read_matrix_market(const std::filesystem::path& path);
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& K);

}  // namespace mpmg
