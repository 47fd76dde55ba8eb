#include "mpmg/hierarchy.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"

#include "mpmg/text.hpp"

namespace mpmg {

namespace {

constexpr real normalization_tolerance = 10 * carrier_epsilon;

bool is_normalized(real norm) { return std::fabs(norm - 1) <= normalization_tolerance; }

// Odd sizes >= 3 coarsen to (n - 1) / 2.
bool coarsenable(int n) { return n >= 3 && n % 2 == 1; }

}  // namespace

SparseSpd poisson_1d(int n) {
  if (n < 3) throw contract_violation("poisson_1d: n must be >= 3");
  std::vector<SparseMatrix::Entry> e;
  for (int i = 0; i < n; ++i) {
    if (i > 0) e.push_back({i, i - 1, -1});
    e.push_back({i, i, 2});
    if (i + 1 < n) e.push_back({i, i + 1, -1});
  }
  return SparseSpd(SparseMatrix(n, n, std::move(e)));
}

SparseSpd poisson_2d(int k) {
  if (k < 3) throw contract_violation("poisson_2d: k must be >= 3");
  const int n = k * k;
  std::vector<SparseMatrix::Entry> e;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const int row = i * k + j;
      e.push_back({row, row, 4});
      if (i > 0) e.push_back({row, row - k, -1});
      if (i + 1 < k) e.push_back({row, row + k, -1});
      if (j > 0) e.push_back({row, row - 1, -1});
      if (j + 1 < k) e.push_back({row, row + 1, -1});
    }
  return SparseSpd(SparseMatrix(n, n, std::move(e)));
}

SparseMatrix linear_interpolation(int n_fine) {
  if (!coarsenable(n_fine))
    throw contract_violation("linear_interpolation: n_fine must be odd and >= 3");
  const int n_c = (n_fine - 1) / 2;
  std::vector<SparseMatrix::Entry> e;
  for (int j = 0; j < n_c; ++j) {
    e.push_back({2 * j, j, 0.5});
    e.push_back({2 * j + 1, j, 1});
    e.push_back({2 * j + 2, j, 0.5});
  }
  return SparseMatrix(n_fine, n_c, std::move(e));
}

SparseMatrix bilinear_interpolation(int k_fine) {
  if (!coarsenable(k_fine))
    throw contract_violation("bilinear_interpolation: k_fine must be odd and >= 3");
  const int k_c = (k_fine - 1) / 2;
  const real weight[3] = {0.5, 1, 0.5};
  std::vector<SparseMatrix::Entry> e;
  for (int I = 0; I < k_c; ++I)
    for (int J = 0; J < k_c; ++J)
      for (int di = 0; di < 3; ++di)
        for (int dj = 0; dj < 3; ++dj) {
          const int fi = 2 * I + di;
          const int fj = 2 * J + dj;
          e.push_back({fi * k_fine + fj, I * k_c + J, weight[di] * weight[dj]});
        }
  return SparseMatrix(k_fine * k_fine, k_c * k_c, std::move(e));
}

SparseSpd galerkin_coarse(const SparseSpd& A, const SparseMatrix& P) {
  if (P.rows() != A.dimension())
    throw contract_violation("galerkin_coarse: P rows must match A");
  const Matrix Pd = P.to_dense();
  const Matrix Ac = Pd.transpose() * (A.matrix().to_dense() * Pd);
  const Matrix sym = (Ac + Ac.transpose()) / 2;
  return SparseSpd(SparseMatrix::from_dense(sym));
}

GridLevel::GridLevel(SparseSpd A, std::optional<SparseMatrix> P, std::optional<SparseSpd> A_c,
                     real scale_A, real scale_P)
    : A_(std::move(A)), P_(std::move(P)), A_c_(std::move(A_c)), scale_A_(scale_A),
      scale_P_(scale_P) {
  if (P_.has_value() != A_c_.has_value())
    throw contract_violation("GridLevel: P and A_c must be given together");
  m_A_ = A_.matrix().max_row_nonzeros();
  eta_A_ = A_.matrix().abs_norm();
  kappa_ = condition_number(A_);
  if (P_) {
    if (P_->rows() != n() || P_->cols() != A_c_->dimension() || P_->cols() > P_->rows())
      throw contract_violation("GridLevel: P must be n x n_c with n_c <= n");
    Pt_ = P_->transpose();
    m_P_ = std::max(P_->max_row_nonzeros(), P_->max_col_nonzeros());
    eta_P_ = P_->abs_norm();
    kappa_c_ = condition_number(*A_c_);
  }
}

const SparseMatrix& GridLevel::P() const {
  if (!P_) throw contract_violation("GridLevel: coarsest level has no prolongation");
  return *P_;
}

const SparseMatrix& GridLevel::Pt() const {
  if (!Pt_) throw contract_violation("GridLevel: coarsest level has no restriction");
  return *Pt_;
}

const SparseSpd& GridLevel::A_c() const {
  if (!A_c_) throw contract_violation("GridLevel: coarsest level has no coarse operator");
  return *A_c_;
}

real GridLevel::xi() const {
  if (!has_coarse()) throw contract_violation("GridLevel: xi undefined on the coarsest level");
  return std::sqrt(kappa_c_ / kappa_);
}

namespace {

struct Scaled {
  SparseSpd A;
  real factor;
};

Scaled normalize_spd(const SparseSpd& A) {
  real norm = A.lambda_max();
  if (norm == 0) throw degenerate_input("normalize_hierarchy: ||A|| = 0");
  SparseSpd current = A;
  real factor = 1;
  // A rescale costs one rounding per entry; a second pass absorbs it.
  for (int pass = 0; pass < 3 && !is_normalized(norm); ++pass) {
    factor /= norm;
    current = SparseSpd(A.matrix().scaled(factor));
    norm = current.lambda_max();
  }
  return {current, factor};
}

}  // namespace

GridLevel normalize_hierarchy(const SparseSpd& A, const SparseMatrix& P) {
  auto [As, scale_A] = normalize_spd(A);
  real scale_P = 1;
  SparseMatrix Ps = P;
  SparseSpd Ac = galerkin_coarse(As, Ps);
  for (int pass = 0; pass < 3 && !is_normalized(Ac.lambda_max()); ++pass) {
    scale_P /= std::sqrt(Ac.lambda_max());
    Ps = P.scaled(scale_P);
    Ac = galerkin_coarse(As, Ps);
  }
  return GridLevel(std::move(As), std::move(Ps), std::move(Ac), scale_A, scale_P);
}

GridLevel normalize_coarsest(const SparseSpd& A) {
  auto [As, scale_A] = normalize_spd(A);
  return GridLevel(std::move(As), std::nullopt, std::nullopt, scale_A, 1);
}

std::vector<GridLevel> build_multilevel(int n_finest, int levels) {
  return build_multilevel(ProblemKind::poisson1d, n_finest, levels);
}

std::vector<GridLevel> build_multilevel(ProblemKind kind, int size, int levels) {
  if (levels < 1) throw contract_violation("build_multilevel: need at least one level");
  int s = size;
  for (int l = 1; l < levels; ++l) {
    if (!coarsenable(s))
      throw contract_violation("build_multilevel: size " + std::to_string(size) +
                               " cannot be coarsened to " + std::to_string(levels) + " levels");
    s = (s - 1) / 2;
  }
  const bool one_d = kind == ProblemKind::poisson1d;
  SparseSpd A = one_d ? poisson_1d(size) : poisson_2d(size);
  std::vector<GridLevel> out;
  s = size;
  for (int l = 0; l + 1 < levels; ++l) {
    const SparseMatrix P = one_d ? linear_interpolation(s) : bilinear_interpolation(s);
    out.push_back(normalize_hierarchy(A, P));
    A = out.back().A_c();
    s = (s - 1) / 2;
  }
  out.push_back(normalize_coarsest(A));
  return out;
}

void write_hierarchy(const std::filesystem::path& dir, const std::vector<GridLevel>& levels) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "mpmg-hierarchy";
  manifest["version"] = 1;
  manifest["levels"] = nlohmann::json::array();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const GridLevel& g = levels[l];
    const std::string stem = "level" + std::to_string(l);
    nlohmann::json entry{{"n", g.n()},
                         {"m_A", g.m_A()},
                         {"eta_A", format_real(g.eta_A())},
                         {"kappa", format_real(g.kappa())},
                         {"scale_A", format_real(g.scale_A())},
                         {"A", stem + "_A.mtx"}};
    write_matrix_market(dir / (stem + "_A.mtx"), g.A().matrix());
    if (g.has_coarse()) {
      entry["n_c"] = g.n_c();
      entry["m_P"] = g.m_P();
      entry["eta_P"] = format_real(g.eta_P());
      entry["kappa_c"] = format_real(g.kappa_c());
      entry["scale_P"] = format_real(g.scale_P());
      entry["P"] = stem + "_P.mtx";
      entry["A_c"] = stem + "_Ac.mtx";
      write_matrix_market(dir / (stem + "_P.mtx"), g.P());
      write_matrix_market(dir / (stem + "_Ac.mtx"), g.A_c().matrix());
    }
    manifest["levels"].push_back(entry);
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<GridLevel> read_hierarchy(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw contract_violation("read_hierarchy: no manifest.json in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  if (manifest.value("format", "") != "mpmg-hierarchy")
    throw contract_violation("read_hierarchy: not an mpmg hierarchy manifest");
  std::vector<GridLevel> out;
  for (const auto& entry : manifest.at("levels")) {
    SparseSpd A(read_matrix_market(dir / entry.at("A").get<std::string>()));
    const real scale_A = parse_real(entry.at("scale_A").get<std::string>());
    if (entry.contains("P")) {
      out.emplace_back(std::move(A), read_matrix_market(dir / entry.at("P").get<std::string>()),
                       SparseSpd(read_matrix_market(dir / entry.at("A_c").get<std::string>())),
                       scale_A, parse_real(entry.at("scale_P").get<std::string>()));
    } else {
      out.emplace_back(std::move(A), std::nullopt, std::nullopt, scale_A, 1);
    }
  }
  return out;
}

}  // namespace mpmg
