#include "mpmg/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mpmg/linops.hpp"

namespace mpmg {

namespace {

constexpr std::string_view labels[proof_step_count] = {
    "dr", "dm", "dym", "dam", "drm", "dpm", "C1", "dpn",
    "C2", "dyminus", "C3", "dan", "C4", "N", "rN", "C5"};

void require(bool ok, const std::string& what) {
  if (!ok) throw contract_violation("BoundInputs: " + what);
}

bool nonneg(real x) { return std::isfinite(x) && x >= 0; }

}  // namespace

std::string_view proof_step_label(ProofStep step) { return labels[static_cast<int>(step)]; }

StepNorm proof_step_norm(ProofStep step) {
  switch (step) {
    case ProofStep::round_rhs:
    case ProofStep::pre_relax_local:
    case ProofStep::pre_relax:
    case ProofStep::pre_residual_local:
    case ProofStep::pre_residual:
    case ProofStep::restrict_local:
    case ProofStep::correct_local:
    case ProofStep::post_relax_local:
      return StepNorm::euclidean;
    case ProofStep::coarse_solve:
      return StepNorm::coarse_energy;
    default:
      return StepNorm::energy;
  }
}

BoundInputs BoundInputs::with_mdot(BoundInputs in) {
  in.mdot_A = mdot_plus(in.m_A, in.eps);
  in.mdot_P = mdot_plus(in.m_P, in.eps);
  return in;
}

void BoundInputs::validate() const {
  require(nonneg(eps) && eps < 1, "eps must lie in [0, 1)");
  require(std::isfinite(kappa) && kappa >= 1 - 1e-12L, "kappa must be >= 1");
  require(std::isfinite(kappa_c) && kappa_c >= 1 - 1e-12L, "kappa_c must be >= 1");
  require(nonneg(eta_A) && nonneg(eta_P) && nonneg(eta_M) && nonneg(eta_N),
          "eta values must be finite and >= 0");
  require(nonneg(alpha_M) && nonneg(alpha_N), "alpha values must be finite and >= 0");
  require(m_A >= 1 && m_P >= 1, "m_A and m_P must be >= 1");
  require(std::isfinite(mdot_A) && mdot_A >= 1 && std::isfinite(mdot_P) && mdot_P >= 1,
          "mdot values must be finite and >= 1");
}

Constants compute_constants(const BoundInputs& in) {
  in.validate();
  const real e = in.eps;
  const real sk = std::sqrt(in.kappa);
  const real skc = std::sqrt(in.kappa_c);
  const real mA = in.mdot_A;
  const real mP = in.mdot_P;
  const real aM = in.alpha_M * (1 + e);

  Constants c;
  c.c0 = (1 + mA * (1 + in.eta_A * in.eta_M) + mA * e +
          (1 + mA * e) * in.eta_A * (in.eta_M + aM)) * e;
  c.c1 = skc * (in.eta_P * c.c0 + e * mP * in.eta_P * (1 + in.eta_A * in.eta_M + c.c0));
  c.c2 = 2 * skc * e * mP * in.eta_P * (1 + c.c1) + 2 * c.c1;
  c.c3 = c.c2 + ((2 + c.c2) * sk + (in.eta_M + aM) * (1 + e)) * e;
  c.c4 = in.eta_A * c.c3 + mA * ((in.eta_A * (2 + c.c3) + 1) * sk + e) * e;
  c.c5 = (2 + c.c3 + in.eta_N * c.c4 + e * (1 + sk * c.c4)) * sk * e;
  return c;
}

real delta_rho_tg(const Constants& c) { return c.c3 + c.c4 + c.c5; }

real delta_rho_tg(const BoundReport& report) { return delta_rho_tg(report.c); }

Gammas gamma_constants(const BoundInputs& in) {
  in.validate();
  const real xi = std::sqrt(in.kappa_c / in.kappa);
  const real mA = in.m_A + 1;
  const real mP = in.m_P + 1;
  const real aa = 1 + in.eta_A * in.eta_M;
  Gammas g;
  g.g1 = xi * (in.eta_P * (1 + mA * aa + in.eta_A * (in.eta_M + in.alpha_M)) + mP * in.eta_P * aa);
  g.g2 = 2 * mP * in.eta_P + 2 * g.g1;
  g.g3 = xi * g.g2 + 2 + in.eta_M;
  g.g4 = in.eta_A * g.g3 + mA * (2 * in.eta_A + 1);
  g.g5 = 2;
  return g;
}

Gammas first_order_constants(const BoundInputs& in) {
  const Gammas paper = gamma_constants(in);
  const real xi = std::sqrt(in.kappa_c / in.kappa);
  const real mA = in.m_A + 1;
  const real mP = in.m_P + 1;
  Gammas g;
  g.g1 = paper.g1;
  g.g2 = 2 * xi * mP * in.eta_P + 2 * g.g1;
  g.g3 = g.g2 + 2 + (in.eta_M + in.alpha_M) / std::sqrt(in.kappa);
  g.g4 = in.eta_A * g.g3 + mA * (2 * in.eta_A + 1);
  g.g5 = 2;
  return g;
}

BoundReport make_report(const BoundInputs& in, real rho_star) {
  BoundReport r;
  r.c = compute_constants(in);
  r.delta_rho = delta_rho_tg(r.c);
  r.rho_star = rho_star;
  r.rho_tg = rho_star + r.delta_rho;
  r.pi_dot = std::sqrt(in.kappa) * in.eps;
  r.xi = std::sqrt(in.kappa_c / in.kappa);
  r.gamma = gamma_constants(in);
  return r;
}

PerStep<real> per_line_bounds(const BoundInputs& in) {
  const Constants c = compute_constants(in);
  const real e = in.eps;
  const real sk = std::sqrt(in.kappa);
  const real skc = std::sqrt(in.kappa_c);
  const real mA = in.mdot_A;
  const real mP = in.mdot_P;
  const real aa = 1 + in.eta_A * in.eta_M;
  const real ym = (in.eta_M + in.alpha_M * (1 + e)) * e;

  PerStep<real> b{};
  auto at = [&](ProofStep s) -> real& { return b[static_cast<int>(s)]; };
  at(ProofStep::round_rhs) = e;
  at(ProofStep::pre_relax_local) = in.alpha_M * (1 + e) * e;
  at(ProofStep::pre_relax) = ym;
  at(ProofStep::pre_residual_local) = mA * (aa + e + in.eta_A * ym) * e;
  at(ProofStep::pre_residual) = c.c0;
  at(ProofStep::restrict_local) = e * mP * in.eta_P * (aa + c.c0);
  at(ProofStep::coarse_solve) = 2 * c.c1;
  at(ProofStep::prolong_local) = 2 * skc * e * mP * in.eta_P * (1 + c.c1);
  at(ProofStep::prolong) = c.c2;
  at(ProofStep::correct_local) = ((2 + c.c2) * sk + ym) * e;
  at(ProofStep::correct) = c.c3;
  at(ProofStep::post_residual_local) = mA * ((in.eta_A * (2 + c.c3) + 1) * sk + e) * e;
  at(ProofStep::post_residual) = c.c4;
  at(ProofStep::post_relax_local) = in.alpha_N * e * (1 + sk * c.c4);
  at(ProofStep::precondition) = in.eta_N * c.c4 + e * (1 + sk * c.c4);
  at(ProofStep::post_correct_local) = c.c5;
  return b;
}

PrecisionFormat progressive_epsilon(real kappa, real pi_target) {
  if (!(pi_target > 0 && pi_target < 1))
    throw contract_violation("progressive_epsilon: pi_target must lie in (0, 1)");
  if (!(kappa >= 1 - 1e-12L) || !std::isfinite(kappa))
    throw contract_violation("progressive_epsilon: kappa must be >= 1");
  const real target = pi_target / std::sqrt(std::max<real>(kappa, 1));
  for (int bits = PrecisionFormat::min_bits; bits <= PrecisionFormat::max_emulated_bits; ++bits)
    if (std::ldexp(1.0L, -bits) <= target) return PrecisionFormat(bits);
  throw precision_unachievable("progressive_epsilon: pi_target " + std::to_string(
      static_cast<double>(pi_target)) + " needs more significand bits than the carrier offers");
}

}  // namespace mpmg
