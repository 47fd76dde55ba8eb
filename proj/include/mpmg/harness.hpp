#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmg/bounds.hpp"
#include "mpmg/cycles.hpp"
#include "mpmg/hierarchy.hpp"

namespace mpmg {

// Malformed or inconsistent experiment configuration.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Accepts plain decimals, fractions "a/b" and powers "b^k" (e.g. 2^-8).
real parse_real_expression(std::string_view text);

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::poisson1d;
  int size = 31;  // n for 1D, grid side k for 2D
  int levels = 2;
  RelaxationKind smoother = RelaxationKind::jacobi;
  real omega = 2.0L / 3;
  CoarseKind coarse = CoarseKind::exact;
  real sigma = 0;
  int mu = 1;  // recursive coarse solve only
  int nu = 1;
  std::vector<int> bits = {8, 12, 16, 23};
  std::optional<real> pi_target;  // when set, replaces bits
  int trials = 100;
  std::uint64_t seed = 1;
  std::string output;

  // Throws config_error.
  void validate() const;
};

// INI text with sections [problem], [smoother], [coarse], [precision], [run].
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

// One line naming every configuration field, for error messages.
std::string describe(const ExperimentConfig& config);

// Structural constants and bound report of one (level, format) pair.
struct BoundSummary {
  int n = 0;
  int n_c = 0;
  int significand_bits = 0;
  BoundInputs inputs;
  BoundReport report;
};

std::vector<std::string> bound_columns();
std::vector<std::string> bound_values(const BoundSummary& s);
std::string bound_json(const BoundSummary& s);
// Constants only, from raw inputs (no hierarchy).
std::string constants_json(const BoundInputs& in);

struct TrialRecord {
  BoundSummary bounds;
  int size = 0;  // problem size as configured
  int trial = 0;
  real reference_error = 0;  // ||y - A^{-1} r||_A
  real fp_error = 0;         // ||y + delta_y - A^{-1} r||_A
  real delta_y = 0;          // ||delta_y||_A
  real reference_energy = 0;
  real ratio = 0;            // fp_error / reference_energy
  PerStep<real> line_ratio{};
  bool pass = false;
};

// The pass rule: ratio <= rho_tg and every per-line ratio <= 1.
bool trial_passes(real ratio, real rho_tg, const PerStep<real>& line_ratio);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialRecord> records;  // precision-major, then trial index
  bool all_pass() const;
};

// Formats actually used: config.bits, or the progressive choice for the
// finest level when pi_target is set.
std::vector<PrecisionFormat> experiment_formats(const ExperimentConfig& config, real kappa);

ExperimentResult run_experiment(const ExperimentConfig& config);

// Bound summaries of the configured problem for each format, without trials.
std::vector<BoundSummary> bound_summaries(const ExperimentConfig& config);

// Same configuration over several problem sizes; records concatenated.
ExperimentResult sweep(const ExperimentConfig& config, const std::vector<int>& sizes);

inline constexpr std::string_view csv_version_line = "# mpmg trials csv v1";

std::vector<std::string> csv_columns();
void write_csv(std::ostream& out, const ExperimentResult& result);
std::string to_csv(const ExperimentResult& result);

struct ValidationReport {
  int rows = 0;
  int failing = 0;       // rows whose pass flag is false
  int inconsistent = 0;  // rows whose pass flag disagrees with the stored values
  std::vector<std::string> messages;
  bool ok() const { return rows > 0 && failing == 0 && inconsistent == 0; }
};

ValidationReport validate_csv(std::istream& in);

struct ProgressiveRow {
  int n = 0;
  int significand_bits = 0;
  real eps = 0;
  real kappa = 0;
  real pi_dot = 0;
  real rho_star = 0;
  real delta_rho = 0;
  real max_observed = 0;          // max over trials of ratio - rho_star
  real max_delta_y = 0;           // max over trials of ||delta_y||_A / ||A^{-1} r||_A
  bool within_bound = false;      // both maxima <= delta_rho
};

struct ProgressiveSummary {
  real pi_target = 0;
  std::vector<ProgressiveRow> rows;
  real drift = 0;  // max delta_rho / min delta_rho across sizes
  bool ok() const;
};

inline constexpr real progressive_drift_limit = 4;

// For each size: format from progressive_epsilon, then run_experiment with
// the remaining settings of `base`.
ProgressiveSummary progressive_study(const ExperimentConfig& base, const std::vector<int>& sizes,
                                     real pi_target);
void write_progressive_csv(std::ostream& out, const ProgressiveSummary& s);

// FNV-1a over every stored operator entry of the hierarchy and smoothers.
std::uint64_t fingerprint(const CycleHierarchy& h);

}  // namespace mpmg
