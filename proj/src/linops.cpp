#include "mpmg/linops.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mpmg/text.hpp"

namespace mpmg {

struct SparseSpd::Cache {
  Eigen::LLT<Matrix> llt;
  std::once_flag spectrum_once;
  Spectrum spectrum;
};

SparseSpd::SparseSpd(SparseMatrix K) : matrix_(std::move(K)), cache_(std::make_shared<Cache>()) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
    throw contract_violation("SparseSpd: matrix must be square and nonempty");
  if (!matrix_.is_symmetric()) throw spd_violation("SparseSpd: matrix is not symmetric");
  cache_->llt.compute(matrix_.to_dense());
  if (cache_->llt.info() != Eigen::Success)
    throw spd_violation("SparseSpd: Cholesky factorization failed");
}

const Spectrum& SparseSpd::spectrum() const {
  std::call_once(cache_->spectrum_once, [this] {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_.to_dense());
    if (es.info() != Eigen::Success)
      throw convergence_failure("SparseSpd: symmetric eigensolve did not converge");
    if (es.eigenvalues()(0) <= 0)
      throw spd_violation("SparseSpd: nonpositive eigenvalue " + format_real(es.eigenvalues()(0)));
    Spectrum& s = cache_->spectrum;
    s.eigenvalues = es.eigenvalues();
    s.eigenvectors = es.eigenvectors();
    const Matrix& V = s.eigenvectors;
    s.sqrt = V * s.eigenvalues.cwiseSqrt().asDiagonal() * V.transpose();
    s.inv_sqrt = V * s.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  });
  return cache_->spectrum;
}

Vector SparseSpd::solve(const Vector& b) const {
  if (b.size() != dimension()) throw contract_violation("solve_spd: dimension mismatch");
  return cache_->llt.solve(b);
}

Matrix SparseSpd::inverse() const {
  return cache_->llt.solve(Matrix::Identity(dimension(), dimension()));
}

real operator_norm(const Matrix& K) {
  if (K.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(K);
  return svd.singularValues()(0);
}

real spectral_norm(const Matrix& K) {
  if (K.rows() != K.cols()) throw contract_violation("spectral_norm: matrix must be square");
  if (K.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw convergence_failure("spectral_norm: symmetric eigensolve did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

real spectral_norm(const SparseMatrix& K) { return spectral_norm(K.to_dense()); }

real abs_matrix_norm(const Matrix& K) { return operator_norm(K.cwiseAbs()); }

real abs_matrix_norm(const SparseMatrix& K) { return K.abs_norm(); }

real energy_norm(const Vector& w, const SparseSpd& A) {
  if (w.size() != A.dimension()) throw contract_violation("energy_norm: dimension mismatch");
  const real q = w.dot(A.matrix().multiply(w));
  if (q < 0) throw spd_violation("energy_norm: negative quadratic form");
  return std::sqrt(q);
}

real energy_operator_norm(const Matrix& E, const SparseSpd& A) {
  const Spectrum& s = A.spectrum();
  return operator_norm(s.sqrt * E * s.inv_sqrt);
}

real condition_number(const SparseSpd& A) { return A.lambda_max() / A.lambda_min(); }

real mdot_plus(int m, real eps) {
  const real terms = static_cast<real>(m) + 1;
  if (terms * eps >= 1)
    throw precision_too_low("mdot_plus: (m + 1) * eps >= 1 for m = " + std::to_string(m));
  return terms / (1 - terms * eps);
}

real mdot_plus(int m, const PrecisionFormat& fmt) { return mdot_plus(m, fmt.unit_roundoff()); }

Vector solve_spd(const SparseSpd& A, const Vector& b) { return A.solve(b); }

SparseMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw contract_violation("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
      field != "real" || (symmetry != "symmetric" && symmetry != "general"))
    throw contract_violation(path.string() + ": unsupported Matrix Market header '" + line + "'");
  const bool symmetric = symmetry == "symmetric";

  while (std::getline(in, line) && (line.empty() || line[0] == '%')) {}
  std::istringstream size_line(line);
  int rows = 0, cols = 0, nnz = 0;
  if (!(size_line >> rows >> cols >> nnz))
    throw contract_violation(path.string() + ": malformed size line");

  std::vector<SparseMatrix::Entry> entries;
  for (int k = 0; k < nnz; ++k) {
    if (!std::getline(in, line)) throw contract_violation(path.string() + ": truncated");
    std::istringstream es(line);
    int i = 0, j = 0;
    std::string value;
    if (!(es >> i >> j >> value)) throw contract_violation(path.string() + ": malformed entry");
    const real v = parse_real(value);
    entries.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
  }
  return SparseMatrix(rows, cols, std::move(entries));
}

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& K) {
  std::ofstream out(path);
  if (!out) throw contract_violation("cannot write " + path.string());
  const bool symmetric = K.is_symmetric();
  std::vector<std::string> lines;
  for (int i = 0; i < K.rows(); ++i) {
    const auto cols = K.row_columns(i);
    const auto vals = K.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (symmetric && cols[k] > i) continue;
      lines.push_back(std::to_string(i + 1) + ' ' + std::to_string(cols[k] + 1) + ' ' +
                      format_real(vals[k]));
    }
  }
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << '\n';
  out << K.rows() << ' ' << K.cols() << ' ' << lines.size() << '\n';
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace mpmg
