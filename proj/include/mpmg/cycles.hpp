#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpmg/bounds.hpp"
#include "mpmg/hierarchy.hpp"
#include "mpmg/precision.hpp"

namespace mpmg {

enum class RelaxationKind { jacobi, richardson };

// Diagonal relaxation operator M = diag(m): damped Jacobi (m = omega / a_ii)
// or Richardson (m = omega). Used as M for pre- and as N for post-relaxation.
class RelaxationOp {
 public:
  RelaxationOp(RelaxationKind kind, real omega, Vector diagonal, const SparseSpd& A,
               const PrecisionFormat& fmt);

  RelaxationKind kind() const { return kind_; }
  real omega() const { return omega_; }
  const Vector& diagonal() const { return diagonal_; }
  const PrecisionFormat& format() const { return fmt_; }

  real eta_M() const { return eta_M_; }  // ||M||
  real eta_N() const { return eta_N_; }  // ||M||_A
  // Certified: ||fl(Mz) - Mz|| <= alpha * eps * ||z|| in format().
  real alpha() const { return alpha_; }
  real contraction() const { return contraction_; }  // ||I - MA||_A

  Vector apply(const Vector& z) const;
  RoundedResult apply(const Vector& z, const PrecisionFormat& fmt) const;
  Matrix dense() const;

 private:
  RelaxationKind kind_;
  real omega_;
  Vector diagonal_;
  PrecisionFormat fmt_;
  real eta_M_ = 0;
  real eta_N_ = 0;
  real alpha_ = 0;
  real contraction_ = 0;
};

// Throws contract_violation if omega <= 0 or the contraction is not below 1.
RelaxationOp make_jacobi(const SparseSpd& A, real omega, const PrecisionFormat& fmt);
RelaxationOp make_richardson(const SparseSpd& A, real omega, const PrecisionFormat& fmt);
RelaxationOp make_relaxation(RelaxationKind kind, const SparseSpd& A, real omega,
                             const PrecisionFormat& fmt);

enum class CoarseKind { exact, perturbed, recursive };

// The coarse solve d_c = B_c A_c^{-1} r_c. B_c is held densely except for the
// exact variant, where it is the identity and never applied.
class CoarseSolver {
 public:
  CoarseSolver() = default;  // exact
  static CoarseSolver exact();
  CoarseSolver(CoarseKind kind, Matrix bc, real bc_deviation, real sigma = 0, int mu = 0,
               int nu = 0, int depth = 0);

  CoarseKind kind() const { return kind_; }
  real sigma() const { return sigma_; }
  int mu() const { return mu_; }
  int nu() const { return nu_; }
  int depth() const { return depth_; }
  real bc_deviation() const { return bc_deviation_; }  // ||B_c - I_c||_{A_c}

  // B_c as a dense n_c x n_c matrix.
  Matrix bc(int n_c) const;
  // Carrier-precision B_c A_c^{-1} r_c.
  Vector solve(const SparseSpd& A_c, const Vector& r_c) const;

 private:
  CoarseKind kind_ = CoarseKind::exact;
  std::optional<Matrix> bc_;
  real bc_deviation_ = 0;
  real sigma_ = 0;
  int mu_ = 0;
  int nu_ = 0;
  int depth_ = 0;
};

inline constexpr std::uint64_t default_perturbation_seed = 0x5eed0001;

// B_c = I_c + sigma G with ||G||_{A_c} = 1 and G self-adjoint in the A_c inner
// product, so that ||B_c - I_c||_{A_c} = sigma. sigma = 0 gives exact().
CoarseSolver make_perturbed_coarse(const GridLevel& level, real sigma,
                                   std::uint64_t seed = default_perturbation_seed);

// A hierarchy together with the relaxation operator of every non-coarsest level.
struct CycleHierarchy {
  std::vector<GridLevel> levels;
  std::vector<RelaxationOp> smoothers;  // one per level with a coarse grid
};

CycleHierarchy make_cycle_hierarchy(std::vector<GridLevel> levels, RelaxationKind kind,
                                    real omega);

// V(mu, nu)-cycle from level `first` down; the coarsest level is solved
// directly in carrier precision. Pre-relaxation starts from a zero guess as
// y = Mr, so mu = nu = 1 on two levels is the two-grid cycle.
Vector v_cycle(const CycleHierarchy& h, int mu, int nu, const Vector& r,
               const PrecisionFormat& fmt, std::size_t first = 0);

// B_c = V A_c assembled column by column from carrier-precision cycles on
// levels first, first + 1, ...; returns ||B_c - I||_{A_c} for A_c the
// operator of level `first`. Zero when that level is the coarsest.
Matrix recursive_bc(const CycleHierarchy& h, int mu, int nu, std::size_t first);
real measure_bc_deviation(const CycleHierarchy& h, int mu, int nu, std::size_t first = 0);

// The coarse solve of level `level` replaced by one V(mu, nu)-cycle on the
// levels below it.
CoarseSolver make_recursive_coarse(const CycleHierarchy& h, std::size_t level, int mu, int nu);

// Intermediate vectors of one two-grid cycle, named after the algorithm lines.
struct CycleVectors {
  Vector r;    // quantized right-hand side
  Vector y_mu;
  Vector r_mu;
  Vector r_c;
  Vector d_c;
  Vector d;
  Vector y_nu;
  Vector r_nu;
  Vector r_N;
  Vector y;
};

// One two-grid cycle with every kernel rounded to fmt (carrier fmt: exact
// reference). The coarse solve is always carrier precision.
CycleVectors tg_steps(const GridLevel& level, const Vector& r, const RelaxationOp& M,
                      const RelaxationOp& N, const CoarseSolver& coarse,
                      const PrecisionFormat& fmt);

struct CycleTrace {
  PerStep<real> deviation{};  // measured in proof_step_norm(step)
  real delta_y = 0;           // ||delta_y||_A
  real reference_energy = 0;  // ||A^{-1} r||_A
  real reference_error = 0;   // ||y - A^{-1} r||_A, exact reference
  real final_error = 0;       // ||y + delta_y - A^{-1} r||_A
};

struct TgResult {
  Vector y;
  CycleTrace trace;
};

TgResult tg_cycle(const GridLevel& level, const Vector& r, const RelaxationOp& M,
                  const RelaxationOp& N, const CoarseSolver& coarse, const PrecisionFormat& fmt);

Vector exact_tg_reference(const GridLevel& level, const Vector& r, const RelaxationOp& M,
                          const RelaxationOp& N, const CoarseSolver& coarse);

// Dense error propagator (I - NA)(I - P B_c A_c^{-1} P^t A)(I - MA).
Matrix tg_error_propagator(const GridLevel& level, const RelaxationOp& M, const RelaxationOp& N,
                           const CoarseSolver& coarse);
// ||E||_A. Values >= 1 are returned as is.
real rho_star(const GridLevel& level, const RelaxationOp& M, const RelaxationOp& N,
              const CoarseSolver& coarse);

// T = I - P A_c^{-1} P^t A.
Matrix coarse_projection(const GridLevel& level);
// ||T||_A, evaluated as ||I - V V^t|| for V = A^{1/2} P A_c^{-1/2}: its
// eigenvalues are 1 off range(V) and 1 - s_i^2 for the singular values s_i.
real projection_energy_norm(const GridLevel& level);

// Structural constants of a level at a given format.
BoundInputs bound_inputs(const GridLevel& level, const RelaxationOp& M, const RelaxationOp& N,
                         const PrecisionFormat& fmt);

}  // namespace mpmg
