#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mpmg {

// High-precision carrier: the widest native binary format. Every "exact"
// quantity in the library (reference cycles, norms, coarse solves) lives here.
using real = long double;

using Vector = Eigen::Matrix<real, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int carrier_digits = std::numeric_limits<real>::digits;
inline constexpr real carrier_epsilon = std::numeric_limits<real>::epsilon();

// Error hierarchy. Contract violations are caller bugs; the others describe
// numerical conditions the caller may want to react to.
struct contract_violation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct precision_too_low : std::domain_error {
  using std::domain_error::domain_error;
};

struct precision_unachievable : std::domain_error {
  using std::domain_error::domain_error;
};

struct spd_violation : std::domain_error {
  using std::domain_error::domain_error;
};

struct degenerate_input : std::domain_error {
  using std::domain_error::domain_error;
};

struct range_error : std::range_error {
  using std::range_error::range_error;
};

struct convergence_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mpmg
