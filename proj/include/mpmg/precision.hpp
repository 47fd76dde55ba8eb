#pragma once

#include <compare>

#include "mpmg/sparse.hpp"
#include "mpmg/types.hpp"

namespace mpmg {

// An emulated binary floating-point format with `significand_bits` stored
// significand bits (implicit leading bit included) and unbounded exponent
// range. Unit roundoff is 2^-significand_bits.
//
// Widths up to carrier_digits - 2 are emulated. The carrier width itself is
// accepted and means "no emulation": every kernel then runs in plain carrier
// arithmetic.
class PrecisionFormat {
 public:
  explicit PrecisionFormat(int significand_bits);

  static PrecisionFormat carrier() { return PrecisionFormat(carrier_digits); }

  int significand_bits() const { return bits_; }
  real unit_roundoff() const { return unit_roundoff_; }
  bool is_carrier() const { return bits_ == carrier_digits; }

  static constexpr int min_bits = 2;
  static constexpr int max_emulated_bits = carrier_digits - 2;

  friend bool operator==(const PrecisionFormat&, const PrecisionFormat&) = default;

 private:
  int bits_;
  real unit_roundoff_;
};

// A kernel result together with the a-priori bound on ||computed - exact||
// promised by the corresponding rounding model.
struct RoundedResult {
  Vector value;
  real a_priori_bound = 0;
};

// Round-to-nearest-even onto the format's significand grid.
real round_scalar(real x, const PrecisionFormat& fmt);

// Correctly rounded value of the unevaluated sum hi + lo, where lo is the
// exact error term of a carrier operation (|lo| <= ulp(hi)/2).
real round_exact_sum(real hi, real lo, const PrecisionFormat& fmt);

// fl(a * b) and fl(a + b) with a single rounding of the exact result.
real rounded_mul(real a, real b, const PrecisionFormat& fmt);
real rounded_add(real a, real b, const PrecisionFormat& fmt);

// fl(w) = w + delta, ||delta|| <= eps ||w||.
RoundedResult quantize_vector(const Vector& w, const PrecisionFormat& fmt);

enum class Sign { plus, minus };

// fl(v +- w) = v +- w + delta, ||delta|| <= eps ||v +- w||.
RoundedResult rounded_add_sub(const Vector& v, const Vector& w, Sign sign,
                              const PrecisionFormat& fmt);

// fl(Kw - c) = Kw - c + delta,
// ||delta|| <= eps * mdot_K * (||c|| + || |K| || * ||w||).
// Each row is accumulated left to right over its nonzeros, c subtracted last.
RoundedResult rounded_residual(const SparseMatrix& K, const Vector& w,
                               const Vector& c, const PrecisionFormat& fmt);

// fl(Kw) = Kw + delta, ||delta|| <= eps * mdot_K * || |K| || * ||w||.
RoundedResult rounded_matvec(const SparseMatrix& K, const Vector& w,
                             const PrecisionFormat& fmt);

// Componentwise fl(d_i * z_i): the relaxation kernel for diagonal M.
// ||delta|| <= eps * ||diag(d) z||.
RoundedResult rounded_diagonal_scale(const Vector& d, const Vector& z,
                                     const PrecisionFormat& fmt);

}  // namespace mpmg
