#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mpmg/linops.hpp"
#include "mpmg/precision.hpp"
#include "oracle.hpp"

using namespace mpmg;

namespace {

SparseMatrix tridiagonal(int n, real lower, real diag, real upper) {
  std::vector<SparseMatrix::Entry> e;
  for (int i = 0; i < n; ++i) {
    if (i > 0) e.push_back({i, i - 1, lower});
    e.push_back({i, i, diag});
    if (i + 1 < n) e.push_back({i, i + 1, upper});
  }
  return SparseMatrix(n, n, std::move(e));
}

// Hand-built 1D linear interpolation, 7 fine points from 3 coarse points.
SparseMatrix interpolation_7x3() {
  std::vector<SparseMatrix::Entry> e;
  for (int j = 0; j < 3; ++j) {
    e.push_back({2 * j, j, 0.5});
    e.push_back({2 * j + 1, j, 1});
    e.push_back({2 * j + 2, j, 0.5});
  }
  return SparseMatrix(7, 3, std::move(e));
}

Vector representable(std::mt19937_64& rng, int n, const PrecisionFormat& fmt) {
  return quantize_vector(oracle::random_vector(rng, n), fmt).value;
}

}  // namespace

TEST_CASE("precision format validates width") {
  CHECK(PrecisionFormat(8).unit_roundoff() == std::ldexp(1.0L, -8));
  CHECK(PrecisionFormat::carrier().is_carrier());
  CHECK_THROWS_AS(PrecisionFormat(1), contract_violation);
  CHECK_THROWS_AS(PrecisionFormat(carrier_digits - 1), contract_violation);
  CHECK_NOTHROW(PrecisionFormat(PrecisionFormat::max_emulated_bits));
}

TEST_CASE("round_scalar examples") {
  const PrecisionFormat p8(8);
  CHECK(round_scalar(0, p8) == 0);
  CHECK(round_scalar(1 + std::ldexp(1.0L, -9), p8) == 1);
  const real x = 1 + 3 * std::ldexp(1.0L, -9);
  CHECK(round_scalar(x, p8) == 1 + std::ldexp(1.0L, -7));
  CHECK(static_cast<real>(oracle::round_bits_rne(static_cast<double>(x), 8)) ==
        1 + std::ldexp(1.0L, -7));
  // Ties go to the even neighbour.
  CHECK(round_scalar(1 + std::ldexp(1.0L, -8), p8) == 1);
  CHECK(round_scalar(1 + 3 * std::ldexp(1.0L, -8), p8) == 1 + std::ldexp(1.0L, -6));
  CHECK(round_scalar(-(1 + 3 * std::ldexp(1.0L, -8)), p8) == -(1 + std::ldexp(1.0L, -6)));
  CHECK_THROWS_AS(round_scalar(std::numeric_limits<real>::infinity(), p8), mpmg::range_error);
}

TEST_CASE("round_scalar agrees with the bit-level oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mant(-1, 1);
  std::uniform_int_distribution<int> expo(-60, 60);
  for (int bits : {2, 5, 8, 11, 12, 16, 24, 37, 52}) {
    const PrecisionFormat fmt(bits);
    for (int k = 0; k < 2000; ++k) {
      const double x = std::ldexp(mant(rng), expo(rng));
      REQUIRE(round_scalar(x, fmt) == static_cast<real>(oracle::round_bits_rne(x, bits)));
    }
    // Exact ties at this width.
    for (int k = 0; k < 200; ++k) {
      const double grid = std::ldexp(std::floor(std::ldexp(std::fabs(mant(rng)) + 1, bits - 1)),
                                     1 - bits);
      const double tie = grid + std::ldexp(1.0, -bits);
      REQUIRE(round_scalar(tie, fmt) == static_cast<real>(oracle::round_bits_rne(tie, bits)));
    }
  }
}

TEST_CASE("round_scalar is idempotent, monotone and within eps relative error") {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> mag(0, 20);
  for (int bits : {3, 8, 16, 40, 62}) {
    const PrecisionFormat fmt(bits);
    std::vector<real> xs;
    for (int k = 0; k < 500; ++k) {
      const real x = static_cast<real>(mag(rng)) * (k % 2 ? -1 : 1) *
                     (1 + static_cast<real>(k) * 1e-7L);
      xs.push_back(x);
      const real r = round_scalar(x, fmt);
      REQUIRE(round_scalar(r, fmt) == r);
      REQUIRE(std::fabs(r - x) <= fmt.unit_roundoff() * std::fabs(x));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 1; k < xs.size(); ++k)
      REQUIRE(round_scalar(xs[k - 1], fmt) <= round_scalar(xs[k], fmt));
  }
}

TEST_CASE("products and sums are rounded once from the exact result") {
  std::mt19937_64 rng(3);
  // The exact product of two carrier values has at most 128 bits; rounding it
  // directly to the target width through a wide intermediate is the oracle.
  using narrow12 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<
      12, boost::multiprecision::digit_base_2, void, int, -16000, 16000>>;
  const PrecisionFormat fmt(12);
  for (int k = 0; k < 2000; ++k) {
    const real a = oracle::random_vector(rng, 1)(0) * (1 + 1e-9L * k);
    const real b = oracle::random_vector(rng, 1)(0) / 3;
    const oracle::hp prod = oracle::hp(a) * oracle::hp(b);
    const oracle::hp sum = oracle::hp(a) + oracle::hp(b);
    REQUIRE(rounded_mul(a, b, fmt) == static_cast<real>(narrow12(prod)));
    REQUIRE(rounded_add(a, b, fmt) == static_cast<real>(narrow12(sum)));
  }
}

TEST_CASE("quantize_vector") {
  const PrecisionFormat fmt(8);
  const auto zero = quantize_vector(Vector::Zero(5), fmt);
  CHECK(zero.value.isZero(0));
  CHECK(zero.a_priori_bound == 0);

  std::mt19937_64 rng(1);
  const Vector w = representable(rng, 16, fmt);
  const auto fixed = quantize_vector(w, fmt);
  CHECK(fixed.value == w);
  CHECK(fixed.a_priori_bound == doctest::Approx(static_cast<double>(std::ldexp(w.norm(), -8))));

  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = oracle::random_vector(rng, 64);
    const auto q = quantize_vector(x, fmt);
    REQUIRE(oracle::distance(q.value, oracle::to_hp(x)) <= oracle::hp(std::ldexp(1.0L, -8)) *
                                                               oracle::norm(oracle::to_hp(x)));
  }
}

TEST_CASE("rounded_add_sub") {
  const PrecisionFormat fmt(10);
  std::mt19937_64 rng(2);
  const Vector v = representable(rng, 20, fmt);
  const auto plus_zero = rounded_add_sub(v, Vector::Zero(20), Sign::plus, fmt);
  CHECK(plus_zero.value == v);
  const auto self = rounded_add_sub(v, v, Sign::minus, fmt);
  CHECK(self.value.isZero(0));
  CHECK(self.a_priori_bound == 0);
  CHECK_THROWS_AS(rounded_add_sub(v, Vector::Zero(3), Sign::plus, fmt), contract_violation);

  for (int trial = 0; trial < 1000; ++trial) {
    const Vector a = representable(rng, 32, fmt);
    const Vector b = representable(rng, 32, fmt);
    for (Sign s : {Sign::plus, Sign::minus}) {
      const auto out = rounded_add_sub(a, b, s, fmt);
      oracle::HpVector exact(32);
      for (int i = 0; i < 32; ++i)
        exact[i] = oracle::hp(a(i)) + (s == Sign::plus ? 1 : -1) * oracle::hp(b(i));
      REQUIRE(oracle::distance(out.value, exact) <= oracle::hp(out.a_priori_bound));
    }
  }
}

TEST_CASE("rounded_residual") {
  const PrecisionFormat fmt(8);
  std::mt19937_64 rng(4);
  const Vector w = representable(rng, 9, fmt);
  const auto id = rounded_residual(SparseMatrix::identity(9), w, w, fmt);
  CHECK(id.value.isZero(0));
  CHECK(id.a_priori_bound <= fmt.unit_roundoff() * mdot_plus(1, fmt) * 2 * w.norm() * (1 + 1e-15L));

  const SparseMatrix K = tridiagonal(9, -1, 2, -1);
  const auto zero = rounded_residual(K, Vector::Zero(9), Vector::Zero(9), fmt);
  CHECK(zero.value.isZero(0));
  CHECK(zero.a_priori_bound == 0);

  CHECK_THROWS_AS(rounded_residual(K, Vector::Zero(4), Vector::Zero(9), fmt), contract_violation);
  CHECK_THROWS_AS(rounded_residual(K, w, w, PrecisionFormat(2)), precision_too_low);

  // Entries of K need not be representable: K is carrier-exact by assumption.
  const SparseMatrix Ks = K.scaled(1 / 3.7L);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = representable(rng, 9, fmt);
    const Vector c = representable(rng, 9, fmt);
    const auto out = rounded_residual(Ks, x, c, fmt);
    REQUIRE(oracle::distance(out.value, oracle::residual(Ks, x, &c)) <=
            oracle::hp(out.a_priori_bound));
  }
}

TEST_CASE("rounded_matvec") {
  const PrecisionFormat fmt(8);
  std::mt19937_64 rng(5);
  const Vector w = representable(rng, 6, fmt);
  const auto id = rounded_matvec(SparseMatrix::identity(6), w, fmt);
  CHECK(id.value == w);
  const SparseMatrix P = interpolation_7x3();
  CHECK(rounded_matvec(P, Vector::Zero(3), fmt).value.isZero(0));
  CHECK(rounded_matvec(P, Vector::Zero(3), fmt).a_priori_bound == 0);

  const SparseMatrix Pt = P.transpose();
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector wc = representable(rng, 3, fmt);
    const auto out = rounded_matvec(P, wc, fmt);
    REQUIRE(out.a_priori_bound ==
            doctest::Approx(static_cast<double>(fmt.unit_roundoff() * mdot_plus(2, fmt) *
                                                P.abs_norm() * wc.norm())));
    REQUIRE(oracle::distance(out.value, oracle::residual(P, wc, nullptr)) <=
            oracle::hp(out.a_priori_bound));
    const Vector wf = representable(rng, 7, fmt);
    const auto restricted = rounded_matvec(Pt, wf, fmt);
    REQUIRE(oracle::distance(restricted.value, oracle::residual(Pt, wf, nullptr)) <=
            oracle::hp(restricted.a_priori_bound));
  }
}

TEST_CASE("carrier width disables emulation") {
  const auto fmt = PrecisionFormat::carrier();
  std::mt19937_64 rng(6);
  const SparseMatrix K = tridiagonal(8, -1, 2.25L, -1).scaled(1 / 3.1L);
  const Vector w = oracle::random_vector(rng, 8) / 7;
  const Vector c = oracle::random_vector(rng, 8) / 3;
  CHECK(quantize_vector(w, fmt).value == w);
  CHECK(rounded_add_sub(w, c, Sign::minus, fmt).value == Vector(w - c));
  CHECK(rounded_matvec(K, w, fmt).value == K.multiply(w));
  CHECK(rounded_residual(K, w, c, fmt).value == Vector(K.multiply(w) - c));
  CHECK(rounded_diagonal_scale(c, w, fmt).value == Vector(c.cwiseProduct(w)));
}

TEST_CASE("rounded_diagonal_scale stays within eps ||Dz||") {
  const PrecisionFormat fmt(5);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector d = oracle::random_vector(rng, 10) / 3;
    const Vector z = representable(rng, 10, fmt);
    const auto out = rounded_diagonal_scale(d, z, fmt);
    oracle::HpVector exact(10);
    for (int i = 0; i < 10; ++i) exact[i] = oracle::hp(d(i)) * oracle::hp(z(i));
    REQUIRE(oracle::distance(out.value, exact) <= oracle::hp(out.a_priori_bound));
  }
}
