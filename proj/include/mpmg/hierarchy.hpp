#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mpmg/linops.hpp"

namespace mpmg {

enum class ProblemKind { poisson1d, poisson2d };

// Dirichlet model problems, unscaled.
SparseSpd poisson_1d(int n);  // tridiag(-1, 2, -1), n >= 3
SparseSpd poisson_2d(int k);  // 5-point Laplacian on a k x k interior grid, k >= 3

// Prolongation from (n_fine - 1) / 2 coarse points, stencil (1/2, 1, 1/2)^t.
SparseMatrix linear_interpolation(int n_fine);
// Tensor product of linear_interpolation on a k x k grid (row-major numbering).
SparseMatrix bilinear_interpolation(int k_fine);

// P^t A P in carrier precision, symmetrized entrywise.
SparseSpd galerkin_coarse(const SparseSpd& A, const SparseMatrix& P);

// One level of a hierarchy: A with ||A|| = 1 and, unless this is the coarsest
// level, the prolongation P and A_c = P^t A P with ||A_c|| = 1. The structural
// constants of the rounding analysis are computed on construction.
class GridLevel {
 public:
  GridLevel(SparseSpd A, std::optional<SparseMatrix> P, std::optional<SparseSpd> A_c,
            real scale_A = 1, real scale_P = 1);

  const SparseSpd& A() const { return A_; }
  const SparseMatrix& P() const;
  const SparseMatrix& Pt() const;  // P^t, the restriction
  const SparseSpd& A_c() const;
  bool has_coarse() const { return P_.has_value(); }

  int n() const { return A_.dimension(); }
  int n_c() const { return has_coarse() ? A_c_->dimension() : 0; }

  int m_A() const { return m_A_; }
  // Most nonzeros in any row or column of P.
  int m_P() const { return m_P_; }
  real eta_A() const { return eta_A_; }
  real eta_P() const { return eta_P_; }
  real kappa() const { return kappa_; }
  real kappa_c() const { return kappa_c_; }
  real xi() const;

  // Factors applied to the inputs of normalize_hierarchy.
  real scale_A() const { return scale_A_; }
  real scale_P() const { return scale_P_; }

 private:
  SparseSpd A_;
  std::optional<SparseMatrix> P_;
  std::optional<SparseMatrix> Pt_;
  std::optional<SparseSpd> A_c_;
  real scale_A_;
  real scale_P_;
  int m_A_ = 0;
  int m_P_ = 0;
  real eta_A_ = 0;
  real eta_P_ = 0;
  real kappa_ = 0;
  real kappa_c_ = 0;
};

// Scales A so ||A|| = 1, then P by a scalar so that ||P^t A P|| = 1. Inputs
// that already satisfy the normalization to 10 carrier ulps are left as is.
GridLevel normalize_hierarchy(const SparseSpd& A, const SparseMatrix& P);
// Coarsest level: only A is normalized.
GridLevel normalize_coarsest(const SparseSpd& A);

// Finest level first; level l + 1 has A equal to level l's A_c.
std::vector<GridLevel> build_multilevel(int n_finest, int levels);
std::vector<GridLevel> build_multilevel(ProblemKind kind, int size, int levels);

// Directory of Matrix Market files plus manifest.json.
void write_hierarchy(const std::filesystem::path& dir, const std::vector<GridLevel>& levels);
std::vector<GridLevel> read_hierarchy(const std::filesystem::path& dir);

}  // namespace mpmg
