#pragma once

#include <array>
#include <string>
#include <string_view>

#include "mpmg/precision.hpp"
#include "mpmg/types.hpp"

namespace mpmg {

// The sixteen rounding-error quantities of the finite-precision two-grid
// analysis, in the order they arise along the cycle. `_local` entries are the
// error committed by one rounded kernel given its (already perturbed) inputs;
// the others are accumulated deviations from the exact-arithmetic cycle.
enum class ProofStep : int {
  round_rhs,            // delta_r          ||.||
  pre_relax_local,      // delta_mu         ||.||
  pre_relax,            // delta_y_mu       ||.||
  pre_residual_local,   // delta_a_mu       ||.||
  pre_residual,         // delta_r_mu       ||.||
  restrict_local,       // delta_p_mu       ||.||
  coarse_solve,         // delta_d_c        ||.||_{A_c}
  prolong_local,        // delta_p_nu       ||.||_A
  prolong,              // delta_d          ||.||_A
  correct_local,        // delta_y_minus    ||.||
  correct,              // delta_y_nu       ||.||_A
  post_residual_local,  // delta_a_nu       ||.||_A
  post_residual,        // delta_r_nu       ||.||_A
  post_relax_local,     // delta_nu         ||.||
  precondition,         // delta_r_N        ||.||_A
  post_correct_local,   // delta_nu (last)  ||.||_A
};

inline constexpr int proof_step_count = 16;

// Short label of the inequality that bounds each step: dr, dm, ..., C5.
std::string_view proof_step_label(ProofStep step);

enum class StepNorm { euclidean, energy, coarse_energy };
StepNorm proof_step_norm(ProofStep step);

template <class T>
using PerStep = std::array<T, proof_step_count>;

// Every symbol entering C0..C5 and gamma1..gamma5.
struct BoundInputs {
  real eps = 0;
  real kappa = 1;
  real kappa_c = 1;
  real eta_A = 1;
  real eta_P = 1;
  real eta_M = 1;
  real eta_N = 1;
  int m_A = 1;
  int m_P = 1;
  real mdot_A = 2;  // mdot_plus(m_A, eps)
  real mdot_P = 2;  // mdot_plus(m_P, eps)
  real alpha_M = 1;
  real alpha_N = 1;

  // Fills mdot_A and mdot_P from m_A, m_P and eps.
  static BoundInputs with_mdot(BoundInputs in);
  // Throws contract_violation unless every field is in its valid domain.
  void validate() const;
};

struct Constants {
  real c0 = 0, c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
};

struct Gammas {
  real g1 = 0, g2 = 0, g3 = 0, g4 = 0, g5 = 0;
};

struct BoundReport {
  Constants c;
  real delta_rho = 0;
  real rho_star = 0;
  real rho_tg = 0;
  real pi_dot = 0;
  real xi = 0;
  Gammas gamma;
};

Constants compute_constants(const BoundInputs& in);
real delta_rho_tg(const Constants& c);
real delta_rho_tg(const BoundReport& report);

// Linearized constants. The ṁ⁺ factors are taken at their eps -> 0 limit
// m + 1 regardless of in.eps.
Gammas gamma_constants(const BoundInputs& in);

// Exact first-order coefficients of C1..C5 in pi_dot at the same limit:
// C_k = g_k pi_dot + O(pi_dot^2). They coincide with gamma_constants for
// k = 1, 5 and differ for k = 2, 3, 4.
Gammas first_order_constants(const BoundInputs& in);

// Full report; rho_star comes from the exact-arithmetic cycle.
BoundReport make_report(const BoundInputs& in, real rho_star);

// Coefficient multiplying ||A^{-1} r||_A on the right-hand side of each step's
// inequality. The coarse-solve step carries 2 C1.
PerStep<real> per_line_bounds(const BoundInputs& in);

// Coarsest format whose unit roundoff satisfies kappa^{1/2} eps <= pi_target.
PrecisionFormat progressive_epsilon(real kappa, real pi_target);

}  // namespace mpmg
