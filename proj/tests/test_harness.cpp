#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mpmg/harness.hpp"
#include "mpmg/text.hpp"

using namespace mpmg;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.size = 15;
  c.bits = {8, 16};
  c.trials = 4;
  c.seed = 11;
  return c;
}

std::string flip_first_pass_flag(std::string csv) {
  const auto pos = csv.find(",true\n");
  REQUIRE(pos != std::string::npos);
  csv.replace(pos, 6, ",false\n");
  return csv;
}

}  // namespace

TEST_CASE("parse_real_expression") {
  CHECK(parse_real_expression("0.5") == 0.5L);
  CHECK(parse_real_expression(" 2/3 ") == 2.0L / 3);
  CHECK(parse_real_expression("2^-8") == std::ldexp(1.0L, -8));
  CHECK(parse_real_expression("10^2") == 100);
  CHECK_THROWS_AS(parse_real_expression("1/0"), config_error);
  CHECK_THROWS_AS(parse_real_expression("abc"), config_error);
  CHECK_THROWS_AS(parse_real_expression("2^x"), config_error);
}

TEST_CASE("config parsing") {
  const ExperimentConfig d = parse("");
  CHECK(d.size == 31);
  CHECK(d.levels == 2);
  CHECK(d.bits == std::vector<int>{8, 12, 16, 23});
  CHECK(d.trials == 100);
  CHECK(d.omega == 2.0L / 3);
  CHECK_FALSE(d.pi_target.has_value());

  const ExperimentConfig c = parse(
      "[problem]\nkind = poisson2d\nsize = 7\nlevels = 2\n"
      "[smoother]\nkind = richardson\nomega = 1/2\n"
      "[coarse]\nkind = perturbed\nsigma = 0.3\n"
      "[precision]\npi_target = 2^-8\n"
      "[run]\ntrials = 5\nseed = 99\noutput = out.csv\n");
  CHECK(c.problem == ProblemKind::poisson2d);
  CHECK(c.size == 7);
  CHECK(c.smoother == RelaxationKind::richardson);
  CHECK(c.omega == 0.5L);
  CHECK(c.coarse == CoarseKind::perturbed);
  CHECK(c.sigma == doctest::Approx(0.3));
  REQUIRE(c.pi_target.has_value());
  CHECK(*c.pi_target == std::ldexp(1.0L, -8));
  CHECK(c.trials == 5);
  CHECK(c.seed == 99);
  CHECK(c.output == "out.csv");

  const ExperimentConfig r = parse("[coarse]\nkind = recursive\nmu = 2\nnu = 0\n[problem]\nlevels = 3\n");
  CHECK(r.coarse == CoarseKind::recursive);
  CHECK(r.mu == 2);
  CHECK(r.nu == 0);
  CHECK(describe(r).find("mu=2") != std::string::npos);
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(parse("[bogus]\nx = 1\n"), config_error);
  CHECK_THROWS_AS(parse("[problem]\nsiz = 31\n"), config_error);
  CHECK_THROWS_AS(parse("[problem]\nkind = heat\n"), config_error);
  CHECK_THROWS_AS(parse("[problem]\nsize = 32\n"), config_error);
  CHECK_THROWS_AS(parse("[problem]\nsize = 15\nlevels = 5\n"), config_error);
  CHECK_THROWS_AS(parse("[problem]\nsize = thirty\n"), config_error);
  CHECK_THROWS_AS(parse("[run]\ntrials = 0\n"), config_error);
  CHECK_THROWS_AS(parse("[precision]\nbits = 8,63\n"), config_error);
  CHECK_THROWS_AS(parse("[precision]\nbits = 1\n"), config_error);
  CHECK_THROWS_AS(parse("[precision]\nbits = 8\npi_target = 2^-8\n"), config_error);
  CHECK_THROWS_AS(parse("[precision]\npi_target = 1.5\n"), config_error);
  CHECK_THROWS_AS(parse("[coarse]\nkind = perturbed\nsigma = 1\n"), config_error);
  CHECK_THROWS_AS(parse("[coarse]\nkind = recursive\nmu = 0\nnu = 0\n"), config_error);
  CHECK_THROWS_AS(parse("[smoother]\nomega = -1\n"), config_error);
  CHECK_THROWS_AS(parse("not ini at all ["), config_error);
  CHECK_THROWS_AS(load_config("/nonexistent/mpmg.ini"), config_error);
  CHECK(parse("[precision]\nbits = 64\n").bits == std::vector<int>{64});
}

TEST_CASE("identical seed gives identical CSV bytes") {
  ExperimentConfig c = small_config();
  c.trials = 1;
  const std::string a = to_csv(run_experiment(c));
  const std::string b = to_csv(run_experiment(c));
  CHECK(a == b);
  c.seed = 12;
  CHECK(to_csv(run_experiment(c)) != a);
}

TEST_CASE("CSV layout") {
  const ExperimentResult res = run_experiment(small_config());
  CHECK(res.records.size() == 8);
  const std::string csv = to_csv(res);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == csv_version_line);
  std::getline(in, line);
  const auto header = split(line, ',');
  CHECK(header == csv_columns());
  CHECK(header.front() == "n");
  CHECK(header.back() == "pass");
  CHECK(header.size() == bound_columns().size() + 16 + 16 + 1);
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(split(line, ',').size() == header.size());
    ++rows;
  }
  CHECK(rows == 8);
  // Precision-major ordering.
  CHECK(res.records[0].bounds.significand_bits == 8);
  CHECK(res.records[4].bounds.significand_bits == 16);
  CHECK(res.records[3].trial == 3);
}

TEST_CASE("carrier precision reproduces the reference") {
  ExperimentConfig c = small_config();
  c.bits = {carrier_digits};
  c.trials = 10;
  const ExperimentResult res = run_experiment(c);
  for (const TrialRecord& r : res.records) {
    CHECK(std::fabs(r.fp_error - r.reference_error) <= 1e3L * carrier_epsilon * r.reference_energy);
    CHECK(r.pass);
  }
}

TEST_CASE("default pipeline passes and validates") {
  ExperimentConfig c;
  c.trials = 20;
  const ExperimentResult res = run_experiment(c);
  CHECK(res.records.size() == 80);
  CHECK(res.all_pass());
  for (const TrialRecord& r : res.records) {
    CHECK(r.ratio <= r.bounds.report.rho_tg);
    CHECK(r.ratio == r.fp_error / r.reference_energy);
  }
  const std::string csv = to_csv(res);
  std::istringstream good(csv);
  const ValidationReport ok = validate_csv(good);
  CHECK(ok.ok());
  CHECK(ok.rows == 80);

  std::istringstream bad(flip_first_pass_flag(csv));
  const ValidationReport flipped = validate_csv(bad);
  CHECK_FALSE(flipped.ok());
  CHECK(flipped.inconsistent == 1);
  CHECK(flipped.failing == 1);
}

TEST_CASE("validate_csv rejects malformed input") {
  std::istringstream empty("");
  CHECK_FALSE(validate_csv(empty).ok());
  std::istringstream no_version("n,pass\n1,true\n");
  CHECK_FALSE(validate_csv(no_version).ok());
  std::istringstream no_rows(std::string(csv_version_line) + "\n" + "n,pass\n");
  CHECK_FALSE(validate_csv(no_rows).ok());

  const std::string csv = to_csv(run_experiment(small_config()));
  // Tamper with a stored ratio while keeping the flag.
  std::string tampered = csv;
  const auto line2 = tampered.find('\n', tampered.find('\n') + 1) + 1;
  const auto end = tampered.find('\n', line2);
  auto fields = split(tampered.substr(line2, end - line2), ',');
  const auto cols = csv_columns();
  const auto ratio_col = static_cast<std::size_t>(
      std::find(cols.begin(), cols.end(), "ratio") - cols.begin());
  fields[ratio_col] = "0.123";
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) row += (i ? "," : "") + fields[i];
  tampered.replace(line2, end - line2, row);
  std::istringstream t(tampered);
  const ValidationReport rep = validate_csv(t);
  CHECK(rep.inconsistent == 1);
  CHECK_FALSE(rep.ok());
}

TEST_CASE("perturbed and recursive coarse solvers run") {
  ExperimentConfig c = small_config();
  c.coarse = CoarseKind::perturbed;
  c.sigma = 0.3L;
  const ExperimentResult p = run_experiment(c);
  CHECK(p.all_pass());
  CHECK(p.records.front().bounds.report.rho_star > 0.1111L);

  c.coarse = CoarseKind::recursive;
  c.levels = 3;
  const ExperimentResult r = run_experiment(c);
  CHECK(r.all_pass());
}

TEST_CASE("operator fingerprint") {
  const auto build = [] {
    return make_cycle_hierarchy(build_multilevel(ProblemKind::poisson1d, 31, 3),
                                RelaxationKind::jacobi, 2.0L / 3);
  };
  const CycleHierarchy h = build();
  CHECK(fingerprint(h) == fingerprint(build()));
  const CycleHierarchy other = make_cycle_hierarchy(
      build_multilevel(ProblemKind::poisson1d, 31, 3), RelaxationKind::jacobi, 0.5L);
  CHECK(fingerprint(h) != fingerprint(other));
  const std::uint64_t before = fingerprint(h);
  Vector r = Vector::Ones(31);
  (void)v_cycle(h, 1, 1, r, PrecisionFormat(8));
  CHECK(fingerprint(h) == before);
}

TEST_CASE("bound summaries") {
  ExperimentConfig c = small_config();
  const auto s = bound_summaries(c);
  REQUIRE(s.size() == 2);
  CHECK(s[0].n == 15);
  CHECK(s[0].n_c == 7);
  CHECK(s[0].inputs.eps == std::ldexp(1.0L, -8));
  CHECK(s[1].report.delta_rho < s[0].report.delta_rho);
  CHECK(bound_values(s[0]).size() == bound_columns().size());
  CHECK(bound_json(s[0]).find("\"rho_tg\"") != std::string::npos);
  BoundInputs zero;
  zero.m_A = zero.m_P = 1;
  zero = BoundInputs::with_mdot(zero);
  CHECK(constants_json(zero).find("\"c3\": 0.0") != std::string::npos);
}

TEST_CASE("progressive study") {
  ExperimentConfig base;
  base.trials = 5;
  const real target = std::ldexp(1.0L, -8);
  const ProgressiveSummary s = progressive_study(base, {15, 31}, target);
  REQUIRE(s.rows.size() == 2);
  for (const auto& row : s.rows) {
    CHECK(row.pi_dot <= target);
    CHECK(row.pi_dot > target / 2);
    CHECK(row.within_bound);
  }
  CHECK(s.rows[1].significand_bits >= s.rows[0].significand_bits);
  CHECK(s.drift >= 1);
  CHECK(s.ok());

  // A single size reduces to run_experiment.
  ExperimentConfig one = base;
  one.size = 15;
  one.pi_target = target;
  const ExperimentResult direct = run_experiment(one);
  const ProgressiveSummary single = progressive_study(base, {15}, target);
  CHECK(single.rows[0].significand_bits == direct.records[0].bounds.significand_bits);
  CHECK(single.drift == 1);

  CHECK_THROWS_AS(progressive_study(base, {}, target), config_error);
  CHECK_THROWS_AS(progressive_study(base, {15}, std::ldexp(1.0L, -70)), precision_unachievable);
  std::ostringstream out;
  write_progressive_csv(out, s);
  CHECK(out.str().rfind("# mpmg progressive csv v1", 0) == 0);
}
