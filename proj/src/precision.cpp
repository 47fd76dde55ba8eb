#include "mpmg/precision.hpp"

#include <cmath>
#include <string>

#include "mpmg/linops.hpp"

namespace mpmg {

namespace {

struct ExactSum {
  real hi;
  real lo;
};

// Knuth's TwoSum: hi + lo == a + b exactly.
ExactSum two_sum(real a, real b) {
  const real s = a + b;
  const real bb = s - a;
  const real err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

ExactSum two_product(real a, real b) {
  const real p = a * b;
  return {p, std::fma(a, b, -p)};
}

void check_finite(real x) {
  if (!std::isfinite(x)) throw range_error("emulated rounding: non-finite value");
}

// Splits |x| = scaled * 2^(e - bits) with scaled in [2^(bits-1), 2^bits).
struct Scaled {
  real scaled;
  int exponent;
};

Scaled scale_to_grid(real x, int bits) {
  int e = 0;
  const real m = std::frexp(x, &e);
  return {std::ldexp(m, bits), e};
}

real round_half_even(real scaled) {
  const real fl = std::floor(scaled);
  const real frac = scaled - fl;
  if (frac < 0.5L) return fl;
  if (frac > 0.5L) return fl + 1;
  return std::fmod(fl, 2.0L) == 0 ? fl : fl + 1;
}

void check_conformal(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size())
    throw contract_violation(std::string(what) + ": length mismatch");
}

}  // namespace

PrecisionFormat::PrecisionFormat(int significand_bits) : bits_(significand_bits) {
  if (significand_bits != carrier_digits &&
      (significand_bits < min_bits || significand_bits > max_emulated_bits))
    throw contract_violation("PrecisionFormat: significand_bits must be in [2, " +
                             std::to_string(max_emulated_bits) + "] or equal the carrier width " +
                             std::to_string(carrier_digits));
  unit_roundoff_ = std::ldexp(real{1}, -significand_bits);
}

real round_scalar(real x, const PrecisionFormat& fmt) {
  check_finite(x);
  if (x == 0 || fmt.is_carrier()) return x;
  const auto [scaled, e] = scale_to_grid(x, fmt.significand_bits());
  return std::ldexp(round_half_even(scaled), e - fmt.significand_bits());
}

real round_exact_sum(real hi, real lo, const PrecisionFormat& fmt) {
  check_finite(hi);
  if (fmt.is_carrier()) return hi;
  if (lo == 0 || hi == 0) return round_scalar(hi == 0 ? lo : hi, fmt);
  const int bits = fmt.significand_bits();
  const auto [scaled, e] = scale_to_grid(hi, bits);
  const real fl = std::floor(scaled);
  const real frac = scaled - fl;
  real r;
  if (frac == 0.5L) {
    // hi sits on a midpoint; the exact value lies strictly to one side.
    r = lo > 0 ? fl + 1 : fl;
  } else {
    // With bits <= carrier_digits - 2, |lo| cannot carry hi across a midpoint.
    r = frac < 0.5L ? fl : fl + 1;
  }
  return std::ldexp(r, e - bits);
}

real rounded_mul(real a, real b, const PrecisionFormat& fmt) {
  const auto [hi, lo] = two_product(a, b);
  return round_exact_sum(hi, lo, fmt);
}

real rounded_add(real a, real b, const PrecisionFormat& fmt) {
  const auto [hi, lo] = two_sum(a, b);
  return round_exact_sum(hi, lo, fmt);
}

RoundedResult quantize_vector(const Vector& w, const PrecisionFormat& fmt) {
  RoundedResult out{Vector(w.size()), fmt.unit_roundoff() * w.norm()};
  for (Eigen::Index i = 0; i < w.size(); ++i) out.value(i) = round_scalar(w(i), fmt);
  return out;
}

RoundedResult rounded_add_sub(const Vector& v, const Vector& w, Sign sign,
                              const PrecisionFormat& fmt) {
  check_conformal(v, w, "rounded_add_sub");
  const real s = sign == Sign::plus ? 1 : -1;
  RoundedResult out{Vector(v.size()), 0};
  for (Eigen::Index i = 0; i < v.size(); ++i) out.value(i) = rounded_add(v(i), s * w(i), fmt);
  const Vector exact = sign == Sign::plus ? Vector(v + w) : Vector(v - w);
  out.a_priori_bound = fmt.unit_roundoff() * exact.norm();
  return out;
}

namespace {

// Shared row loop of the residual and product kernels.
Vector accumulate_rows(const SparseMatrix& K, const Vector& w, const Vector* c,
                       const PrecisionFormat& fmt) {
  Vector out(K.rows());
  for (int i = 0; i < K.rows(); ++i) {
    const auto cols = K.row_columns(i);
    const auto vals = K.row_values(i);
    real acc = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const real p = rounded_mul(vals[k], w(cols[k]), fmt);
      acc = k == 0 ? p : rounded_add(acc, p, fmt);
    }
    if (c != nullptr) acc = rounded_add(acc, -(*c)(i), fmt);
    out(i) = acc;
  }
  return out;
}

}  // namespace

RoundedResult rounded_residual(const SparseMatrix& K, const Vector& w, const Vector& c,
                               const PrecisionFormat& fmt) {
  if (w.size() != K.cols() || c.size() != K.rows())
    throw contract_violation("rounded_residual: dimensions not conformal");
  const real mdot = mdot_plus(K.max_row_nonzeros(), fmt);
  RoundedResult out{accumulate_rows(K, w, &c, fmt), 0};
  out.a_priori_bound = fmt.unit_roundoff() * mdot * (c.norm() + K.abs_norm() * w.norm());
  return out;
}

RoundedResult rounded_matvec(const SparseMatrix& K, const Vector& w,
                             const PrecisionFormat& fmt) {
  if (w.size() != K.cols()) throw contract_violation("rounded_matvec: dimensions not conformal");
  const real mdot = mdot_plus(K.max_row_nonzeros(), fmt);
  RoundedResult out{accumulate_rows(K, w, nullptr, fmt), 0};
  out.a_priori_bound = fmt.unit_roundoff() * mdot * K.abs_norm() * w.norm();
  return out;
}

RoundedResult rounded_diagonal_scale(const Vector& d, const Vector& z,
                                     const PrecisionFormat& fmt) {
  check_conformal(d, z, "rounded_diagonal_scale");
  RoundedResult out{Vector(z.size()), 0};
  for (Eigen::Index i = 0; i < z.size(); ++i) out.value(i) = rounded_mul(d(i), z(i), fmt);
  out.a_priori_bound = fmt.unit_roundoff() * d.cwiseProduct(z).norm();
  return out;
}

}  // namespace mpmg
