// mpmg: mixed-precision two-grid experiments.
//
//   mpmg run --config exp.ini --out trials.csv
//   mpmg bounds --eps 2^-12 --kappa 414 ...
//   mpmg sweep --sizes 15,31,63 --bits 8,12
//   mpmg progressive --sizes 15,31,63 --pi-target 2^-8
//   mpmg validate trials.csv
//
// Exit status: 0 all assertions hold, 1 an assertion or module failed,
// 2 bad configuration or command line.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpmg/harness.hpp"

namespace {

using namespace mpmg;

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::vector<int> bits;
  std::string pi_target;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "INI experiment description")->check(CLI::ExistingFile);
    cmd.add_option("--out", out, "output file (default: config output, else stdout)");
    cmd.add_option("--seed", seed, "random seed");
    cmd.add_option("--trials", trials, "trials per precision");
    cmd.add_option("--bits", bits, "significand bits, comma separated")->delimiter(',');
    cmd.add_option("--pi-target", pi_target, "progressive target for kappa^(1/2) eps, e.g. 2^-8");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    if (seed) c.seed = *seed;
    if (trials) c.trials = *trials;
    if (!bits.empty()) {
      c.bits = bits;
      c.pi_target.reset();
    }
    if (!pi_target.empty()) c.pi_target = parse_real_expression(pi_target);
    if (!out.empty()) c.output = out;
    c.validate();
    return c;
  }
};

template <class Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  write(file);
  if (!file) throw std::runtime_error("write failed: " + path);
}

int report(const ExperimentResult& res) {
  int failing = 0;
  for (const TrialRecord& r : res.records) failing += r.pass ? 0 : 1;
  std::cerr << res.records.size() << " trials, " << failing << " failing\n";
  return failing == 0 ? exit_ok : exit_failed;
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    if (!item.empty()) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) throw config_error("--sizes: not an integer: '" + item + "'");
      out.push_back(v);
    }
    start = comma + 1;
  }
  return out;
}

struct RawBounds {
  std::string eps;
  real kappa = 1;
  real kappa_c = 1;
  real eta_A = 1;
  real eta_P = 1;
  real eta_M = 1;
  real eta_N = 1;
  std::optional<real> alpha_M;
  std::optional<real> alpha_N;
  int m_A = 1;
  int m_P = 1;

  void attach(CLI::App& cmd) {
    cmd.add_option("--eps", eps, "unit roundoff; switches to raw-input mode");
    cmd.add_option("--kappa", kappa);
    cmd.add_option("--kappa-c", kappa_c);
    cmd.add_option("--eta-a", eta_A);
    cmd.add_option("--eta-p", eta_P);
    cmd.add_option("--eta-m", eta_M);
    cmd.add_option("--eta-n", eta_N);
    cmd.add_option("--alpha-m", alpha_M, "default eta_M (1 + eps)");
    cmd.add_option("--alpha-n", alpha_N, "default eta_N (1 + eps)");
    cmd.add_option("--m-a", m_A);
    cmd.add_option("--m-p", m_P);
  }

  BoundInputs inputs() const {
    BoundInputs in;
    in.eps = parse_real_expression(eps);
    in.kappa = kappa;
    in.kappa_c = kappa_c;
    in.eta_A = eta_A;
    in.eta_P = eta_P;
    in.eta_M = eta_M;
    in.eta_N = eta_N;
    in.alpha_M = alpha_M.value_or(eta_M * (1 + in.eps));
    in.alpha_N = alpha_N.value_or(eta_N * (1 + in.eps));
    in.m_A = m_A;
    in.m_P = m_P;
    try {
      return BoundInputs::with_mdot(in);
    } catch (const contract_violation& e) {
      throw config_error(std::string("bounds: ") + e.what());
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-precision two-grid experiments and error bounds"};
  app.require_subcommand(1);

  CommonOptions run_opts, bounds_opts, sweep_opts, prog_opts;
  RawBounds raw;
  std::string sweep_sizes;
  std::string prog_sizes = "15,31,63";
  std::string csv_path;

  CLI::App* run = app.add_subcommand("run", "run the configured trials and write CSV");
  run_opts.attach(*run);
  CLI::App* bounds = app.add_subcommand("bounds", "print bound reports without solving");
  bounds_opts.attach(*bounds);
  raw.attach(*bounds);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run over several problem sizes");
  sweep_opts.attach(*sweep_cmd);
  sweep_cmd->add_option("--sizes", sweep_sizes, "problem sizes, comma separated");
  CLI::App* progressive = app.add_subcommand("progressive", "progressive-precision study");
  prog_opts.attach(*progressive);
  progressive->add_option("--sizes", prog_sizes, "problem sizes, comma separated");
  CLI::App* validate = app.add_subcommand("validate", "re-check pass flags of a trials CSV");
  validate->add_option("csv", csv_path, "trials CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*run) {
      const ExperimentConfig c = run_opts.resolve();
      const ExperimentResult res = run_experiment(c);
      emit(c.output, [&](std::ostream& o) { write_csv(o, res); });
      return report(res);
    }
    if (*bounds) {
      if (!raw.eps.empty()) {
        const BoundInputs in = raw.inputs();
        emit(bounds_opts.out, [&](std::ostream& o) { o << constants_json(in) << '\n'; });
        return exit_ok;
      }
      const ExperimentConfig c = bounds_opts.resolve();
      const auto summaries = bound_summaries(c);
      emit(bounds_opts.out, [&](std::ostream& o) {
        o << "[\n";
        for (std::size_t i = 0; i < summaries.size(); ++i)
          o << bound_json(summaries[i]) << (i + 1 < summaries.size() ? ",\n" : "\n");
        o << "]\n";
      });
      return exit_ok;
    }
    if (*sweep_cmd) {
      const ExperimentConfig c = sweep_opts.resolve();
      std::vector<int> sizes = parse_sizes(sweep_sizes);
      if (sizes.empty()) sizes = {c.size};
      const ExperimentResult res = sweep(c, sizes);
      emit(c.output, [&](std::ostream& o) { write_csv(o, res); });
      return report(res);
    }
    if (*progressive) {
      ExperimentConfig c = prog_opts.resolve();
      const real target = c.pi_target.value_or(std::ldexp(1.0L, -8));
      c.pi_target.reset();
      const ProgressiveSummary s = progressive_study(c, parse_sizes(prog_sizes), target);
      emit(c.output, [&](std::ostream& o) { write_progressive_csv(o, s); });
      std::cerr << "drift " << static_cast<double>(s.drift) << " (limit "
                << static_cast<double>(progressive_drift_limit) << ")\n";
      return s.ok() ? exit_ok : exit_failed;
    }
    if (*validate) {
      std::ifstream in(csv_path);
      if (!in) throw config_error("cannot open " + csv_path);
      const ValidationReport rep = validate_csv(in);
      for (const std::string& m : rep.messages) std::cerr << m << '\n';
      std::cerr << rep.rows << " rows, " << rep.failing << " failing, " << rep.inconsistent
                << " inconsistent\n";
      return rep.ok() ? exit_ok : exit_failed;
    }
  } catch (const config_error& e) {
    std::cerr << "mpmg: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "mpmg: " << e.what() << '\n';
    return exit_failed;
  }
  return exit_usage;
}
