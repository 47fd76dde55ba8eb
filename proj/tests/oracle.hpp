#pragma once

// Test-only reference computations. Nothing here calls into the rounded
// kernels or the bounds formulas it is used to check.

#include <bit>
#include <cstdint>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "mpmg/sparse.hpp"
#include "mpmg/types.hpp"

namespace oracle {

using mpmg::real;
using mpmg::Vector;

// 256 significand bits: products and short sums of carrier values are exact.
using hp = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<256>>;
using HpVector = std::vector<hp>;

inline HpVector to_hp(const Vector& v) {
  HpVector out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = hp(v(i));
  return out;
}

inline hp norm(const HpVector& v) {
  hp s = 0;
  for (const auto& x : v) s += x * x;
  return sqrt(s);
}

inline hp distance(const Vector& computed, const HpVector& exact) {
  hp s = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const hp d = hp(computed(static_cast<Eigen::Index>(i))) - exact[i];
    s += d * d;
  }
  return sqrt(s);
}

inline HpVector residual(const mpmg::SparseMatrix& K, const Vector& w, const Vector* c) {
  HpVector out(static_cast<std::size_t>(K.rows()));
  for (int i = 0; i < K.rows(); ++i) {
    hp s = 0;
    for (int j = 0; j < K.cols(); ++j) {
      const real k = K.coeff(i, j);
      if (k != 0) s += hp(k) * hp(w(j));
    }
    if (c) s -= hp((*c)(i));
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

// Round a binary64 value to `bits` significand bits, round-to-nearest-even,
// by integer manipulation of its encoding. Normal inputs only.
inline double round_bits_rne(double x, int bits) {
  if (x == 0) return x;
  const auto u = std::bit_cast<std::uint64_t>(x);
  const std::uint64_t sign = u & (std::uint64_t{1} << 63);
  const std::uint64_t expo = (u >> 52) & 0x7ff;
  std::uint64_t mant = (u & ((std::uint64_t{1} << 52) - 1)) | (std::uint64_t{1} << 52);
  const int drop = 53 - bits;
  if (drop <= 0) return x;
  const std::uint64_t half = std::uint64_t{1} << (drop - 1);
  const std::uint64_t rem = mant & ((std::uint64_t{1} << drop) - 1);
  mant >>= drop;
  if (rem > half || (rem == half && (mant & 1))) ++mant;
  // mant may have carried to 2^bits; the value arithmetic below absorbs it.
  const double magnitude = std::ldexp(static_cast<double>(mant),
                                      static_cast<int>(expo) - 1023 - 52 + drop);
  return sign ? -magnitude : magnitude;
}

inline Vector random_vector(std::mt19937_64& rng, int n, real scale = 1) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * nd(rng);
  return v;
}

}  // namespace oracle
