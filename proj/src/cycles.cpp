#include "mpmg/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "mpmg/linops.hpp"
#include "mpmg/text.hpp"

namespace mpmg {

RelaxationOp::RelaxationOp(RelaxationKind kind, real omega, Vector diagonal, const SparseSpd& A,
                           const PrecisionFormat& fmt)
    : kind_(kind), omega_(omega), diagonal_(std::move(diagonal)), fmt_(fmt) {
  if (!(omega > 0) || !std::isfinite(omega))
    throw contract_violation("relaxation: omega must be positive, got " + format_real(omega));
  if (diagonal_.size() != A.dimension())
    throw contract_violation("relaxation: diagonal does not match A");
  const Spectrum& s = A.spectrum();
  const Matrix D = diagonal_.asDiagonal();
  eta_M_ = diagonal_.cwiseAbs().maxCoeff();
  eta_N_ = operator_norm(s.sqrt * D * s.inv_sqrt);
  alpha_ = eta_M_ * (1 + fmt_.unit_roundoff());
  const Matrix I = Matrix::Identity(A.dimension(), A.dimension());
  const Matrix sym = I - s.sqrt * D * s.sqrt;
  contraction_ = spectral_norm(Matrix((sym + sym.transpose()) / 2));
  if (!(contraction_ < 1))
    throw contract_violation("relaxation: ||I - MA||_A = " + format_real(contraction_) +
                             " >= 1 for omega = " + format_real(omega));
}

Vector RelaxationOp::apply(const Vector& z) const { return diagonal_.cwiseProduct(z); }

RoundedResult RelaxationOp::apply(const Vector& z, const PrecisionFormat& fmt) const {
  return rounded_diagonal_scale(diagonal_, z, fmt);
}

Matrix RelaxationOp::dense() const { return diagonal_.asDiagonal(); }

RelaxationOp make_jacobi(const SparseSpd& A, real omega, const PrecisionFormat& fmt) {
  Vector d(A.dimension());
  for (int i = 0; i < A.dimension(); ++i) {
    const real aii = A.matrix().coeff(i, i);
    if (!(aii > 0)) throw spd_violation("make_jacobi: nonpositive diagonal entry");
    d(i) = omega / aii;
  }
  return RelaxationOp(RelaxationKind::jacobi, omega, std::move(d), A, fmt);
}

RelaxationOp make_richardson(const SparseSpd& A, real omega, const PrecisionFormat& fmt) {
  return RelaxationOp(RelaxationKind::richardson, omega, Vector::Constant(A.dimension(), omega),
                      A, fmt);
}

RelaxationOp make_relaxation(RelaxationKind kind, const SparseSpd& A, real omega,
                             const PrecisionFormat& fmt) {
  return kind == RelaxationKind::jacobi ? make_jacobi(A, omega, fmt)
                                        : make_richardson(A, omega, fmt);
}

CoarseSolver CoarseSolver::exact() { return CoarseSolver(); }

CoarseSolver::CoarseSolver(CoarseKind kind, Matrix bc, real bc_deviation, real sigma, int mu,
                           int nu, int depth)
    : kind_(kind), bc_(std::move(bc)), bc_deviation_(bc_deviation), sigma_(sigma), mu_(mu),
      nu_(nu), depth_(depth) {
  if (bc_->rows() != bc_->cols()) throw contract_violation("CoarseSolver: B_c must be square");
  if (!(bc_deviation_ < 1))
    throw contract_violation("CoarseSolver: ||B_c - I_c||_{A_c} = " + format_real(bc_deviation_) +
                             " is not below 1");
}

Matrix CoarseSolver::bc(int n_c) const {
  if (!bc_) return Matrix::Identity(n_c, n_c);
  if (bc_->rows() != n_c) throw contract_violation("CoarseSolver: B_c size mismatch");
  return *bc_;
}

Vector CoarseSolver::solve(const SparseSpd& A_c, const Vector& r_c) const {
  const Vector x = solve_spd(A_c, r_c);
  if (!bc_) return x;
  if (bc_->rows() != A_c.dimension()) throw contract_violation("CoarseSolver: B_c size mismatch");
  return *bc_ * x;
}

CoarseSolver make_perturbed_coarse(const GridLevel& level, real sigma, std::uint64_t seed) {
  if (!(sigma >= 0 && sigma < 1))
    throw contract_violation("make_perturbed_coarse: sigma must lie in [0, 1)");
  if (sigma == 0) return CoarseSolver::exact();
  const int n_c = level.n_c();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const Matrix X = Matrix::NullaryExpr(n_c, n_c, [&] { return static_cast<real>(gauss(rng)); });
  Matrix W = X * X.transpose();
  W = (W + W.transpose()) / 2;
  W /= spectral_norm(W);
  const Spectrum& s = level.A_c().spectrum();
  const Matrix G = -(s.inv_sqrt * W * s.sqrt);
  return CoarseSolver(CoarseKind::perturbed, Matrix::Identity(n_c, n_c) + sigma * G, sigma, sigma);
}

CycleHierarchy make_cycle_hierarchy(std::vector<GridLevel> levels, RelaxationKind kind,
                                    real omega) {
  CycleHierarchy h{std::move(levels), {}};
  for (const GridLevel& g : h.levels)
    if (g.has_coarse())
      h.smoothers.push_back(make_relaxation(kind, g.A(), omega, PrecisionFormat::carrier()));
  return h;
}

namespace {

Vector v_cycle_from(const CycleHierarchy& h, int mu, int nu, const Vector& r,
                    const PrecisionFormat& fmt, std::size_t l) {
  const GridLevel& g = h.levels[l];
  if (!g.has_coarse()) return solve_spd(g.A(), r);
  const RelaxationOp& S = h.smoothers[l];
  const SparseMatrix& A = g.A().matrix();

  const Vector rh = quantize_vector(r, fmt).value;
  Vector y = Vector::Zero(g.n());
  if (mu > 0) {
    y = S.apply(rh, fmt).value;
    for (int sweep = 1; sweep < mu; ++sweep) {
      const Vector res = rounded_residual(A, y, rh, fmt).value;
      y = rounded_add_sub(y, S.apply(res, fmt).value, Sign::minus, fmt).value;
    }
  }
  const Vector r_mu = rounded_residual(A, y, rh, fmt).value;
  const Vector r_c = rounded_matvec(g.Pt(), r_mu, fmt).value;
  const Vector d_c = v_cycle_from(h, mu, nu, r_c, fmt, l + 1);
  const Vector d = rounded_matvec(g.P(), d_c, fmt).value;
  y = rounded_add_sub(y, d, Sign::minus, fmt).value;
  for (int sweep = 0; sweep < nu; ++sweep) {
    const Vector r_nu = rounded_residual(A, y, rh, fmt).value;
    y = rounded_add_sub(y, S.apply(r_nu, fmt).value, Sign::minus, fmt).value;
  }
  return y;
}

void check_cycle_args(const CycleHierarchy& h, int mu, int nu, std::size_t first) {
  if (mu < 0 || nu < 0 || mu + nu < 1)
    throw contract_violation("v_cycle: need mu, nu >= 0 and mu + nu >= 1");
  if (first >= h.levels.size()) throw contract_violation("v_cycle: level index out of range");
  std::size_t with_coarse = 0;
  for (const GridLevel& g : h.levels) with_coarse += g.has_coarse() ? 1 : 0;
  if (h.smoothers.size() != with_coarse)
    throw contract_violation("v_cycle: one smoother per non-coarsest level required");
}

}  // namespace

Vector v_cycle(const CycleHierarchy& h, int mu, int nu, const Vector& r,
               const PrecisionFormat& fmt, std::size_t first) {
  check_cycle_args(h, mu, nu, first);
  if (h.levels.size() - first < 2) throw contract_violation("v_cycle: need at least two levels");
  if (r.size() != h.levels[first].n()) throw contract_violation("v_cycle: rhs size mismatch");
  return v_cycle_from(h, mu, nu, r, fmt, first);
}

Matrix recursive_bc(const CycleHierarchy& h, int mu, int nu, std::size_t first) {
  check_cycle_args(h, mu, nu, first);
  const GridLevel& g = h.levels[first];
  const int n = g.n();
  if (!g.has_coarse()) return Matrix::Identity(n, n);
  Matrix V(n, n);
  for (int j = 0; j < n; ++j)
    V.col(j) = v_cycle_from(h, mu, nu, Vector::Unit(n, j), PrecisionFormat::carrier(), first);
  return V * g.A().matrix().to_dense();
}

real measure_bc_deviation(const CycleHierarchy& h, int mu, int nu, std::size_t first) {
  check_cycle_args(h, mu, nu, first);
  const GridLevel& g = h.levels[first];
  if (!g.has_coarse()) return 0;
  const Matrix B = recursive_bc(h, mu, nu, first);
  return energy_operator_norm(B - Matrix::Identity(g.n(), g.n()), g.A());
}

CoarseSolver make_recursive_coarse(const CycleHierarchy& h, std::size_t level, int mu, int nu) {
  if (level + 1 >= h.levels.size() || !h.levels[level].has_coarse())
    throw contract_violation("make_recursive_coarse: level has no coarse grid");
  const std::size_t below = level + 1;
  const int depth = static_cast<int>(h.levels.size() - below) - 1;
  if (depth == 0) return CoarseSolver::exact();
  const Matrix B = recursive_bc(h, mu, nu, below);
  const real dev = measure_bc_deviation(h, mu, nu, below);
  return CoarseSolver(CoarseKind::recursive, B, dev, 0, mu, nu, depth);
}

CycleVectors tg_steps(const GridLevel& level, const Vector& r, const RelaxationOp& M,
                      const RelaxationOp& N, const CoarseSolver& coarse,
                      const PrecisionFormat& fmt) {
  if (!level.has_coarse()) throw contract_violation("tg_cycle: level has no coarse grid");
  if (r.size() != level.n()) throw contract_violation("tg_cycle: rhs size mismatch");
  if (M.diagonal().size() != level.n() || N.diagonal().size() != level.n())
    throw contract_violation("tg_cycle: relaxation size mismatch");
  const SparseMatrix& A = level.A().matrix();
  CycleVectors v;
  v.r = quantize_vector(r, fmt).value;
  v.y_mu = M.apply(v.r, fmt).value;
  v.r_mu = rounded_residual(A, v.y_mu, v.r, fmt).value;
  v.r_c = rounded_matvec(level.Pt(), v.r_mu, fmt).value;
  v.d_c = coarse.solve(level.A_c(), v.r_c);
  v.d = rounded_matvec(level.P(), v.d_c, fmt).value;
  v.y_nu = rounded_add_sub(v.y_mu, v.d, Sign::minus, fmt).value;
  v.r_nu = rounded_residual(A, v.y_nu, v.r, fmt).value;
  v.r_N = N.apply(v.r_nu, fmt).value;
  v.y = rounded_add_sub(v.y_nu, v.r_N, Sign::minus, fmt).value;
  return v;
}

TgResult tg_cycle(const GridLevel& level, const Vector& r, const RelaxationOp& M,
                  const RelaxationOp& N, const CoarseSolver& coarse, const PrecisionFormat& fmt) {
  const CycleVectors fl = tg_steps(level, r, M, N, coarse, fmt);
  const CycleVectors ex = tg_steps(level, r, M, N, coarse, PrecisionFormat::carrier());
  const SparseSpd& A = level.A();
  const SparseMatrix& K = A.matrix();
  const Vector x = solve_spd(A, r);

  CycleTrace t;
  auto set = [&](ProofStep s, const Vector& w) {
    real value = 0;
    switch (proof_step_norm(s)) {
      case StepNorm::euclidean: value = w.norm(); break;
      case StepNorm::energy: value = energy_norm(w, A); break;
      case StepNorm::coarse_energy: value = energy_norm(w, level.A_c()); break;
    }
    t.deviation[static_cast<int>(s)] = value;
  };
  set(ProofStep::round_rhs, fl.r - r);
  set(ProofStep::pre_relax_local, fl.y_mu - M.apply(fl.r));
  set(ProofStep::pre_relax, fl.y_mu - ex.y_mu);
  set(ProofStep::pre_residual_local, fl.r_mu - (K.multiply(fl.y_mu) - fl.r));
  set(ProofStep::pre_residual, fl.r_mu - ex.r_mu);
  set(ProofStep::restrict_local, fl.r_c - level.Pt().multiply(fl.r_mu));
  set(ProofStep::coarse_solve, fl.d_c - ex.d_c);
  set(ProofStep::prolong_local, fl.d - level.P().multiply(fl.d_c));
  set(ProofStep::prolong, fl.d - ex.d);
  set(ProofStep::correct_local, fl.y_nu - (fl.y_mu - fl.d));
  set(ProofStep::correct, fl.y_nu - ex.y_nu);
  set(ProofStep::post_residual_local, fl.r_nu - (K.multiply(fl.y_nu) - fl.r));
  set(ProofStep::post_residual, fl.r_nu - ex.r_nu);
  set(ProofStep::post_relax_local, fl.r_N - N.apply(fl.r_nu));
  set(ProofStep::precondition, fl.r_N - ex.r_N);
  set(ProofStep::post_correct_local, fl.y - (fl.y_nu - fl.r_N));

  t.delta_y = energy_norm(fl.y - ex.y, A);
  t.reference_energy = energy_norm(x, A);
  t.reference_error = energy_norm(ex.y - x, A);
  t.final_error = energy_norm(fl.y - x, A);
  return {fl.y, t};
}

Vector exact_tg_reference(const GridLevel& level, const Vector& r, const RelaxationOp& M,
                          const RelaxationOp& N, const CoarseSolver& coarse) {
  return tg_steps(level, r, M, N, coarse, PrecisionFormat::carrier()).y;
}

Matrix coarse_projection(const GridLevel& level) {
  const Matrix P = level.P().to_dense();
  const Matrix A = level.A().matrix().to_dense();
  return Matrix::Identity(level.n(), level.n()) - P * level.A_c().inverse() * P.transpose() * A;
}

real projection_energy_norm(const GridLevel& level) {
  const Matrix V =
      level.A().spectrum().sqrt * level.P().to_dense() * level.A_c().spectrum().inv_sqrt;
  Eigen::JacobiSVD<Matrix> svd(V);
  real norm = level.n_c() < level.n() ? 1 : 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const real s = svd.singularValues()(i);
    norm = std::max(norm, std::fabs(1 - s * s));
  }
  return norm;
}

Matrix tg_error_propagator(const GridLevel& level, const RelaxationOp& M, const RelaxationOp& N,
                           const CoarseSolver& coarse) {
  const int n = level.n();
  const Matrix A = level.A().matrix().to_dense();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix pre = I - M.dense() * A;
  const Matrix post = I - N.dense() * A;
  if (!level.has_coarse()) return post * pre;
  const Matrix P = level.P().to_dense();
  const Matrix correction =
      I - P * coarse.bc(level.n_c()) * level.A_c().inverse() * P.transpose() * A;
  return post * correction * pre;
}

real rho_star(const GridLevel& level, const RelaxationOp& M, const RelaxationOp& N,
              const CoarseSolver& coarse) {
  return energy_operator_norm(tg_error_propagator(level, M, N, coarse), level.A());
}

BoundInputs bound_inputs(const GridLevel& level, const RelaxationOp& M, const RelaxationOp& N,
                         const PrecisionFormat& fmt) {
  BoundInputs in;
  in.eps = fmt.unit_roundoff();
  in.kappa = level.kappa();
  in.kappa_c = level.kappa_c();
  in.eta_A = level.eta_A();
  in.eta_P = level.eta_P();
  in.eta_M = M.eta_M();
  in.eta_N = N.eta_N();
  in.m_A = level.m_A();
  in.m_P = level.m_P();
  in.alpha_M = M.eta_M() * (1 + in.eps);
  in.alpha_N = N.eta_M() * (1 + in.eps);
  return BoundInputs::with_mdot(in);
}

}  // namespace mpmg
