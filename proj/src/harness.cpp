#include "mpmg/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "mpmg/linops.hpp"
#include "mpmg/text.hpp"

namespace mpmg {

namespace {

template <class Int>
Int parse_integer(std::string_view text, const std::string& what) {
  text = trim(text);
  Int value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw config_error(what + ": not an integer: '" + std::string(text) + "'");
  return value;
}

std::vector<int> parse_int_list(std::string_view text, const std::string& what) {
  std::vector<int> out;
  for (const std::string& item : split(text, ','))
    if (!item.empty()) out.push_back(parse_integer<int>(item, what));
  return out;
}

const char* problem_name(ProblemKind k) {
  return k == ProblemKind::poisson1d ? "poisson1d" : "poisson2d";
}

const char* smoother_name(RelaxationKind k) {
  return k == RelaxationKind::jacobi ? "jacobi" : "richardson";
}

const char* coarse_name(CoarseKind k) {
  switch (k) {
    case CoarseKind::exact: return "exact";
    case CoarseKind::perturbed: return "perturbed";
    default: return "recursive";
  }
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string join_ints(const std::vector<int>& items) {
  std::vector<std::string> s;
  for (int v : items) s.push_back(std::to_string(v));
  return join(s, ',');
}

}  // namespace

real parse_real_expression(std::string_view text) {
  text = trim(text);
  try {
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
      const real num = parse_real_expression(text.substr(0, slash));
      const real den = parse_real_expression(text.substr(slash + 1));
      if (den == 0) throw config_error("division by zero in '" + std::string(text) + "'");
      return num / den;
    }
    if (const auto caret = text.find('^'); caret != std::string_view::npos) {
      const real base = parse_real(text.substr(0, caret));
      const int expo = parse_integer<int>(text.substr(caret + 1), "exponent");
      if (base == 2) return std::ldexp(1.0L, expo);
      return std::pow(base, static_cast<real>(expo));
    }
    return parse_real(text);
  } catch (const contract_violation& e) {
    throw config_error(e.what());
  }
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw config_error("config: " + msg); };
  if (size < 3) fail("problem size must be >= 3");
  if (levels < 2) fail("levels must be >= 2");
  int s = size;
  for (int l = 1; l < levels; ++l) {
    if (s < 3 || s % 2 == 0)
      fail("size " + std::to_string(size) + " cannot be coarsened to " + std::to_string(levels) +
           " levels");
    s = (s - 1) / 2;
  }
  if (!(omega > 0) || !std::isfinite(omega)) fail("omega must be positive");
  if (coarse == CoarseKind::perturbed && !(sigma >= 0 && sigma < 1))
    fail("sigma must lie in [0, 1)");
  if (coarse == CoarseKind::recursive && (mu < 0 || nu < 0 || mu + nu < 1))
    fail("recursive coarse solve needs mu, nu >= 0 and mu + nu >= 1");
  if (pi_target) {
    if (!(*pi_target > 0 && *pi_target < 1)) fail("pi_target must lie in (0, 1)");
  } else {
    if (bits.empty()) fail("no precisions given");
    for (int b : bits)
      if (!(b >= PrecisionFormat::min_bits && b <= PrecisionFormat::max_emulated_bits) &&
          b != carrier_digits)
        fail("significand bits must lie in [2, 62] or equal 64, got " + std::to_string(b));
  }
  if (trials < 1) fail("trials must be >= 1");
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"problem", {"kind", "size", "levels"}},
      {"smoother", {"kind", "omega"}},
      {"coarse", {"kind", "sigma", "mu", "nu"}},
      {"precision", {"bits", "pi_target"}},
      {"run", {"trials", "seed", "output"}}};
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw config_error("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw config_error("config: unknown key '" + key + "' in [" + section + "]");
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) { return tree.get_optional<std::string>(path); };
  if (auto v = get("problem.kind")) {
    if (*v == "poisson1d") c.problem = ProblemKind::poisson1d;
    else if (*v == "poisson2d") c.problem = ProblemKind::poisson2d;
    else throw config_error("config: unknown problem kind '" + *v + "'");
  }
  if (auto v = get("problem.size")) c.size = parse_integer<int>(*v, "problem.size");
  if (auto v = get("problem.levels")) c.levels = parse_integer<int>(*v, "problem.levels");
  if (auto v = get("smoother.kind")) {
    if (*v == "jacobi") c.smoother = RelaxationKind::jacobi;
    else if (*v == "richardson") c.smoother = RelaxationKind::richardson;
    else throw config_error("config: unknown smoother '" + *v + "'");
  }
  if (auto v = get("smoother.omega")) c.omega = parse_real_expression(*v);
  if (auto v = get("coarse.kind")) {
    if (*v == "exact") c.coarse = CoarseKind::exact;
    else if (*v == "perturbed") c.coarse = CoarseKind::perturbed;
    else if (*v == "recursive") c.coarse = CoarseKind::recursive;
    else throw config_error("config: unknown coarse solver '" + *v + "'");
  }
  if (auto v = get("coarse.sigma")) c.sigma = parse_real_expression(*v);
  if (auto v = get("coarse.mu")) c.mu = parse_integer<int>(*v, "coarse.mu");
  if (auto v = get("coarse.nu")) c.nu = parse_integer<int>(*v, "coarse.nu");
  const auto bits = get("precision.bits");
  const auto pi = get("precision.pi_target");
  if (bits && pi) throw config_error("config: give either precision.bits or precision.pi_target");
  if (bits) c.bits = parse_int_list(*bits, "precision.bits");
  if (pi) c.pi_target = parse_real_expression(*pi);
  if (auto v = get("run.trials")) c.trials = parse_integer<int>(*v, "run.trials");
  if (auto v = get("run.seed")) c.seed = parse_integer<std::uint64_t>(*v, "run.seed");
  if (auto v = get("run.output")) c.output = std::string(trim(*v));
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path.string());
  return parse_config(in);
}

std::string describe(const ExperimentConfig& c) {
  std::ostringstream s;
  s << "problem=" << problem_name(c.problem) << " size=" << c.size << " levels=" << c.levels
    << " smoother=" << smoother_name(c.smoother) << " omega=" << format_real(c.omega)
    << " coarse=" << coarse_name(c.coarse);
  if (c.coarse == CoarseKind::perturbed) s << " sigma=" << format_real(c.sigma);
  if (c.coarse == CoarseKind::recursive) s << " mu=" << c.mu << " nu=" << c.nu;
  if (c.pi_target) s << " pi_target=" << format_real(*c.pi_target);
  else s << " bits=" << join_ints(c.bits);
  s << " trials=" << c.trials << " seed=" << c.seed;
  return s.str();
}

std::vector<std::string> bound_columns() {
  return {"n",       "n_c",     "significand_bits", "eps",    "kappa",  "kappa_c", "eta_A",
          "eta_P",   "eta_M",   "eta_N",            "alpha_M", "alpha_N", "c0",     "c1",
          "c2",      "c3",      "c4",               "c5",     "delta_rho", "rho_star", "rho_tg",
          "pi_dot",  "xi",      "gamma1",           "gamma2", "gamma3", "gamma4",  "gamma5"};
}

std::vector<std::string> bound_values(const BoundSummary& s) {
  const BoundInputs& in = s.inputs;
  const BoundReport& r = s.report;
  std::vector<std::string> v = {std::to_string(s.n), std::to_string(s.n_c),
                                std::to_string(s.significand_bits)};
  for (real x : {in.eps, in.kappa, in.kappa_c, in.eta_A, in.eta_P, in.eta_M, in.eta_N, in.alpha_M,
                 in.alpha_N, r.c.c0, r.c.c1, r.c.c2, r.c.c3, r.c.c4, r.c.c5, r.delta_rho,
                 r.rho_star, r.rho_tg, r.pi_dot, r.xi, r.gamma.g1, r.gamma.g2, r.gamma.g3,
                 r.gamma.g4, r.gamma.g5})
    v.push_back(format_real(x));
  return v;
}

std::string bound_json(const BoundSummary& s) {
  const auto names = bound_columns();
  const auto values = bound_values(s);
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i < 3) j[names[i]] = std::stoi(values[i]);
    else j[names[i]] = static_cast<double>(parse_real(values[i]));
  }
  return j.dump(2);
}

std::string constants_json(const BoundInputs& in) {
  const Constants c = compute_constants(in);
  nlohmann::ordered_json j;
  j["eps"] = static_cast<double>(in.eps);
  const real values[] = {c.c0, c.c1, c.c2, c.c3, c.c4, c.c5};
  for (int k = 0; k < 6; ++k) j["c" + std::to_string(k)] = static_cast<double>(values[k]);
  j["delta_rho"] = static_cast<double>(delta_rho_tg(c));
  return j.dump(2);
}

bool trial_passes(real ratio, real rho_tg, const PerStep<real>& line_ratio) {
  if (!(ratio <= rho_tg)) return false;
  return std::all_of(line_ratio.begin(), line_ratio.end(), [](real x) { return x <= 1; });
}

bool ExperimentResult::all_pass() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const TrialRecord& r) { return r.pass; });
}

std::vector<PrecisionFormat> experiment_formats(const ExperimentConfig& config, real kappa) {
  if (config.pi_target) return {progressive_epsilon(kappa, *config.pi_target)};
  std::vector<PrecisionFormat> out;
  for (int b : config.bits) out.emplace_back(b);
  return out;
}

namespace {

CoarseSolver make_coarse(const ExperimentConfig& c, const CycleHierarchy& h) {
  switch (c.coarse) {
    case CoarseKind::exact: return CoarseSolver::exact();
    case CoarseKind::perturbed: return make_perturbed_coarse(h.levels[0], c.sigma);
    default: return make_recursive_coarse(h, 0, c.mu, c.nu);
  }
}

std::vector<Vector> draw_rhs(std::uint64_t seed, int trials, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Vector> out;
  for (int t = 0; t < trials; ++t) {
    Vector r(n);
    for (int i = 0; i < n; ++i) r(i) = gauss(rng);
    out.push_back(r / r.norm());
  }
  return out;
}

template <class F>
void parallel_for(int count, F&& body) {
  const int workers = std::max(1, std::min<int>(count, std::thread::hardware_concurrency()));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

CycleHierarchy configured_hierarchy(const ExperimentConfig& config) {
  return make_cycle_hierarchy(build_multilevel(config.problem, config.size, config.levels),
                              config.smoother, config.omega);
}

BoundSummary summarize(const GridLevel& g, const RelaxationOp& M, const PrecisionFormat& fmt,
                       real rs) {
  BoundSummary bs;
  bs.n = g.n();
  bs.n_c = g.n_c();
  bs.significand_bits = fmt.significand_bits();
  bs.inputs = bound_inputs(g, M, M, fmt);
  bs.report = make_report(bs.inputs, rs);
  return bs;
}

ExperimentResult run_checked(const ExperimentConfig& config) {
  const CycleHierarchy h = configured_hierarchy(config);
  const GridLevel& g = h.levels[0];
  const RelaxationOp& M = h.smoothers[0];
  const CoarseSolver coarse = make_coarse(config, h);
  const std::uint64_t before = fingerprint(h);
  const real rs = rho_star(g, M, M, coarse);
  const std::vector<Vector> rhs = draw_rhs(config.seed, config.trials, g.n());

  ExperimentResult result{config, {}};
  for (const PrecisionFormat& fmt : experiment_formats(config, g.kappa())) {
    const BoundSummary bs = summarize(g, M, fmt, rs);
    const PerStep<real> lines = per_line_bounds(bs.inputs);

    std::vector<TrialRecord> batch(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, [&](int t) {
      const CycleTrace tr = tg_cycle(g, rhs[static_cast<std::size_t>(t)], M, M, coarse, fmt).trace;
      TrialRecord& rec = batch[static_cast<std::size_t>(t)];
      rec.bounds = bs;
      rec.size = config.size;
      rec.trial = t;
      rec.reference_error = tr.reference_error;
      rec.fp_error = tr.final_error;
      rec.delta_y = tr.delta_y;
      rec.reference_energy = tr.reference_energy;
      rec.ratio = tr.final_error / tr.reference_energy;
      for (int k = 0; k < proof_step_count; ++k) {
        const real scale = lines[k] * tr.reference_energy;
        rec.line_ratio[k] = scale > 0 ? tr.deviation[k] / scale
                                      : (tr.deviation[k] == 0 ? 0 : INFINITY);
      }
      rec.pass = trial_passes(rec.ratio, bs.report.rho_tg, rec.line_ratio);
    });
    result.records.insert(result.records.end(), batch.begin(), batch.end());
  }
  if (fingerprint(h) != before)
    throw std::logic_error("run_experiment: operator data changed during the run");
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  try {
    return run_checked(config);
  } catch (const config_error&) {
    throw;
  } catch (const precision_unachievable& e) {
    throw precision_unachievable(std::string(e.what()) + " [" + describe(config) + "]");
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) + " [" + describe(config) + "]");
  }
}

std::vector<BoundSummary> bound_summaries(const ExperimentConfig& config) {
  config.validate();
  const CycleHierarchy h = configured_hierarchy(config);
  const GridLevel& g = h.levels[0];
  const RelaxationOp& M = h.smoothers[0];
  const real rs = rho_star(g, M, M, make_coarse(config, h));
  std::vector<BoundSummary> out;
  for (const PrecisionFormat& fmt : experiment_formats(config, g.kappa()))
    out.push_back(summarize(g, M, fmt, rs));
  return out;
}

ExperimentResult sweep(const ExperimentConfig& config, const std::vector<int>& sizes) {
  if (sizes.empty()) throw config_error("sweep: no sizes given");
  ExperimentResult all{config, {}};
  for (int n : sizes) {
    ExperimentConfig c = config;
    c.size = n;
    ExperimentResult part = run_experiment(c);
    all.records.insert(all.records.end(), part.records.begin(), part.records.end());
  }
  return all;
}

std::vector<std::string> csv_columns() {
  std::vector<std::string> cols = bound_columns();
  for (const char* c : {"problem", "size", "levels", "smoother", "omega", "coarse", "sigma", "mu",
                        "nu", "seed", "trial", "ref_error", "fp_error", "delta_y", "ref_energy",
                        "ratio"})
    cols.emplace_back(c);
  for (int k = 0; k < proof_step_count; ++k)
    cols.push_back("ratio_" + std::string(proof_step_label(static_cast<ProofStep>(k))));
  cols.emplace_back("pass");
  return cols;
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
  const ExperimentConfig& c = result.config;
  out << csv_version_line << '\n' << join(csv_columns(), ',') << '\n';
  for (const TrialRecord& r : result.records) {
    std::vector<std::string> row = bound_values(r.bounds);
    const std::vector<std::string> echo = {
        problem_name(c.problem), std::to_string(r.size),
        std::to_string(c.levels), smoother_name(c.smoother), format_real(c.omega),
        coarse_name(c.coarse), format_real(c.sigma), std::to_string(c.mu), std::to_string(c.nu),
        std::to_string(c.seed), std::to_string(r.trial), format_real(r.reference_error),
        format_real(r.fp_error), format_real(r.delta_y), format_real(r.reference_energy), format_real(r.ratio)};
    row.insert(row.end(), echo.begin(), echo.end());
    for (real x : r.line_ratio) row.push_back(format_real(x));
    row.emplace_back(r.pass ? "true" : "false");
    out << join(row, ',') << '\n';
  }
}

std::string to_csv(const ExperimentResult& result) {
  std::ostringstream s;
  write_csv(s, result);
  return s.str();
}

ValidationReport validate_csv(std::istream& in) {
  ValidationReport rep;
  std::string line;
  if (!std::getline(in, line) || line != csv_version_line) {
    rep.inconsistent = 1;
    rep.messages.push_back("missing or unknown version line");
    return rep;
  }
  if (!std::getline(in, line)) {
    rep.messages.push_back("missing header");
    rep.inconsistent = 1;
    return rep;
  }
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::vector<std::string> needed = {"ratio", "rho_tg", "rho_star", "delta_rho", "fp_error",
                                     "ref_energy", "pass", "trial"};
  for (int k = 0; k < proof_step_count; ++k)
    needed.push_back("ratio_" + std::string(proof_step_label(static_cast<ProofStep>(k))));
  for (const auto& name : needed)
    if (!col.count(name)) {
      rep.inconsistent = 1;
      rep.messages.push_back("missing column " + name);
      return rep;
    }

  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, ',');
    ++rep.rows;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (f.size() != header.size()) {
      ++rep.inconsistent;
      rep.messages.push_back(where + "wrong number of fields");
      continue;
    }
    try {
      auto num = [&](const std::string& name) { return parse_real(f[col[name]]); };
      const real ratio = num("ratio");
      const real rho_tg = num("rho_tg");
      PerStep<real> lines{};
      for (int k = 0; k < proof_step_count; ++k)
        lines[k] = num("ratio_" + std::string(proof_step_label(static_cast<ProofStep>(k))));
      const std::string& flag = f[col["pass"]];
      if (flag != "true" && flag != "false") throw contract_violation("bad pass flag '" + flag + "'");
      const bool stored = flag == "true";
      bool consistent = stored == trial_passes(ratio, rho_tg, lines);
      if (num("fp_error") / num("ref_energy") != ratio) consistent = false;
      if (num("rho_star") + num("delta_rho") != rho_tg) consistent = false;
      if (!consistent) {
        ++rep.inconsistent;
        rep.messages.push_back(where + "pass flag or derived values disagree with stored norms");
      }
      if (!stored) {
        ++rep.failing;
        rep.messages.push_back(where + "trial " + f[col["trial"]] + " failed");
      }
    } catch (const contract_violation& e) {
      ++rep.inconsistent;
      rep.messages.push_back(where + e.what());
    }
  }
  if (rep.rows == 0) rep.messages.push_back("no data rows");
  return rep;
}

bool ProgressiveSummary::ok() const {
  if (rows.empty()) return false;
  for (const auto& r : rows)
    if (!r.within_bound) return false;
  return drift < progressive_drift_limit;
}

ProgressiveSummary progressive_study(const ExperimentConfig& base, const std::vector<int>& sizes,
                                     real pi_target) {
  if (sizes.empty()) throw config_error("progressive: no sizes given");
  ProgressiveSummary s;
  s.pi_target = pi_target;
  for (int n : sizes) {
    ExperimentConfig c = base;
    c.size = n;
    c.pi_target = pi_target;
    const ExperimentResult res = run_experiment(c);
    const BoundSummary& b = res.records.front().bounds;
    ProgressiveRow row;
    row.n = b.n;
    row.significand_bits = b.significand_bits;
    row.eps = b.inputs.eps;
    row.kappa = b.inputs.kappa;
    row.pi_dot = b.report.pi_dot;
    row.rho_star = b.report.rho_star;
    row.delta_rho = b.report.delta_rho;
    row.max_observed = -INFINITY;
    for (const TrialRecord& r : res.records) {
      row.max_observed = std::max(row.max_observed, r.ratio - b.report.rho_star);
      row.max_delta_y = std::max(row.max_delta_y, r.delta_y / r.reference_energy);
    }
    row.within_bound = row.max_observed <= row.delta_rho && row.max_delta_y <= row.delta_rho;
    s.rows.push_back(row);
  }
  real lo = INFINITY;
  real hi = 0;
  for (const auto& r : s.rows) {
    lo = std::min(lo, r.delta_rho);
    hi = std::max(hi, r.delta_rho);
  }
  s.drift = hi / lo;
  return s;
}

void write_progressive_csv(std::ostream& out, const ProgressiveSummary& s) {
  out << "# mpmg progressive csv v1 pi_target=" << format_real(s.pi_target)
      << " drift=" << format_real(s.drift) << '\n';
  out << "n,significand_bits,eps,kappa,pi_dot,rho_star,delta_rho,max_observed,max_delta_y,"
         "within_bound\n";
  for (const auto& r : s.rows)
    out << r.n << ',' << r.significand_bits << ',' << format_real(r.eps) << ','
        << format_real(r.kappa) << ',' << format_real(r.pi_dot) << ',' << format_real(r.rho_star)
        << ',' << format_real(r.delta_rho) << ',' << format_real(r.max_observed) << ','
        << format_real(r.max_delta_y) << ',' << (r.within_bound ? "true" : "false") << '\n';
}

std::uint64_t fingerprint(const CycleHierarchy& h) {
  std::uint64_t hash = 14695981039346656037ull;
  auto mix = [&](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ull;
    }
  };
  auto mix_values = [&](const real* v, std::size_t count) {
    // x87 extended values occupy 10 of their bytes; the rest is padding.
    constexpr std::size_t width = std::numeric_limits<real>::digits == 64 ? 10 : sizeof(real);
    for (std::size_t i = 0; i < count; ++i) mix(v + i, width);
  };
  auto mix_sparse = [&](const SparseMatrix& K) {
    mix_values(K.values().data(), K.values().size());
    mix(K.column_indices().data(), K.column_indices().size() * sizeof(int));
  };
  for (const GridLevel& g : h.levels) {
    mix_sparse(g.A().matrix());
    if (g.has_coarse()) {
      mix_sparse(g.P());
      mix_sparse(g.A_c().matrix());
    }
  }
  for (const RelaxationOp& s : h.smoothers)
    mix_values(s.diagonal().data(), static_cast<std::size_t>(s.diagonal().size()));
  return hash;
}

}  // namespace mpmg
