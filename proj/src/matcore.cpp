#include "rmtkl/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <fmt/format.h>

namespace rmtkl {

namespace {

// Cholesky with an explicit pivot floor: Eigen's LLT only reports failure on
// non-positive pivots, but a rank-deficient sample covariance usually
// produces tiny positive pivots from round-off instead.
Eigen::LLT<Matrix> checked_cholesky(const CovarianceMatrix& m) {
  const Index n = m.dim();
  Eigen::LLT<Matrix> llt(m.entries());
  if (llt.info() != Eigen::Success) {
    throw LinalgError(fmt::format("singular or indefinite matrix (n={}): Cholesky factorization failed", n));
  }
  const double scale = m.entries().diagonal().cwiseAbs().maxCoeff();
  const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale;
  const auto pivots = llt.matrixLLT().diagonal();
  for (Index i = 0; i < n; ++i) {
    if (!(pivots(i) * pivots(i) > floor)) {
      throw LinalgError(fmt::format("singular or indefinite matrix (n={}): pivot {} is {:.3e}", n, i,
                                    pivots(i) * pivots(i)));
    }
  }
  return llt;
}

}  // namespace

double definiteness_tolerance(Index n, double max_abs_eigenvalue) noexcept {
  return static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_abs_eigenvalue;
}

CovarianceMatrix::CovarianceMatrix(Matrix entries, Definiteness tag) : tag_(tag) {
  if (entries.rows() < 1 || entries.rows() != entries.cols()) {
    throw LinalgError(fmt::format("covariance matrix must be square with dim >= 1, got {}x{}", entries.rows(),
                                  entries.cols()));
  }
  entries_ = 0.5 * (entries + entries.transpose());
  if (tag == Definiteness::unchecked) {
    return;
  }
  // Pass the already symmetric matrix through the solver to test definiteness.
  const SpectralDecomposition spec = spectral_decompose(CovarianceMatrix(entries_));
  const Index n = dim();
  const double lmax = spec.eigenvalues.cwiseAbs().maxCoeff();
  const double tol = definiteness_tolerance(n, lmax);
  const double lmin = spec.eigenvalues(0);
  if (lmin < -tol) {
    throw LinalgError(fmt::format("matrix (n={}) is not positive semidefinite: smallest eigenvalue {:.6e}", n, lmin));
  }
  if (tag == Definiteness::psd && lmin < 0.0) {
    entries_ = spec.reconstruct(spec.eigenvalues.cwiseMax(0.0));
    entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
  }
}

CovarianceMatrix CovarianceMatrix::identity(Index n) {
  return CovarianceMatrix(Matrix::Identity(n, n));
}

CovarianceMatrix CovarianceMatrix::diagonal(std::span<const double> values) {
  const Index n = static_cast<Index>(values.size());
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    m(i, i) = values[static_cast<std::size_t>(i)];
  }
  return CovarianceMatrix(std::move(m));
}

Matrix SpectralDecomposition::reconstruct(const Vector& values) const {
  if (values.size() != eigenvectors.cols()) {
    throw LinalgError(fmt::format("spectrum of length {} does not match basis of dimension {}", values.size(),
                                  eigenvectors.cols()));
  }
  return eigenvectors * values.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition spectral_decompose(const CovarianceMatrix& m) {
  const Index n = m.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.entries(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw LinalgError(fmt::format("symmetric eigen-solver did not converge for a {}x{} matrix", n, n));
  }
  const Vector& raw_values = solver.eigenvalues();
  const Matrix& raw_vectors = solver.eigenvectors();

  // Stable ascending sort keeps solver column order among ties.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return raw_values(a) < raw_values(b); });

  SpectralDecomposition out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = raw_values(src);
    out.eigenvectors.col(k) = raw_vectors.col(src);
  }
  return out;
}

double normalized_trace(const CovarianceMatrix& m) noexcept {
  return m.entries().trace() / static_cast<double>(m.dim());
}

double log_det(const CovarianceMatrix& m) {
  const auto llt = checked_cholesky(m);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Matrix solve_spd(const CovarianceMatrix& m, const Matrix& rhs) {
  if (rhs.rows() != m.dim()) {
    throw LinalgError(fmt::format("solve_spd: right-hand side has {} rows, matrix has dimension {}", rhs.rows(),
                                  m.dim()));
  }
  return checked_cholesky(m).solve(rhs);
}

}  // namespace rmtkl
