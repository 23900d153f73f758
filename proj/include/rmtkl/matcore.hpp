#pragma once

// Dense symmetric-matrix primitives shared by every other module.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace rmtkl {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for linear-algebra failures: non-PD input to a factorization,
/// eigen-solver non-convergence, dimension mismatches.
class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Definiteness : std::uint8_t {
  unchecked,  // symmetrized only
  psd,        // eigenvalues checked; tiny negatives clamped to 0
  pd,         // eigenvalues checked; never clamped
};

/// Dense symmetric matrix. Construction symmetrizes via (A + A^T) / 2 so the
/// stored entries are exactly symmetric.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Matrix entries, Definiteness tag = Definiteness::unchecked);

  static CovarianceMatrix identity(Index n);
  static CovarianceMatrix diagonal(std::span<const double> values);

  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }
  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] double operator()(Index i, Index j) const { return entries_(i, j); }
  [[nodiscard]] Definiteness tag() const noexcept { return tag_; }

 private:
  Matrix entries_;
  Definiteness tag_;
};

/// Eigenvalues ascending, eigenvectors as orthonormal columns in the same order.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  [[nodiscard]] Index dim() const noexcept { return eigenvalues.size(); }
  /// V diag(values) V^T for an arbitrary spectrum paired with this basis.
  [[nodiscard]] Matrix reconstruct(const Vector& values) const;
  [[nodiscard]] Matrix reconstruct() const { return reconstruct(eigenvalues); }
};

/// Tolerance below which an eigenvalue counts as a round-off negative:
/// n * eps * |lambda_max|.
double definiteness_tolerance(Index n, double max_abs_eigenvalue) noexcept;

SpectralDecomposition spectral_decompose(const CovarianceMatrix& m);

/// (1/n) Tr(M).
double normalized_trace(const CovarianceMatrix& m) noexcept;

/// log det M through a Cholesky factor. Throws LinalgError("singular or
/// indefinite matrix ...") when M is not numerically positive definite.
double log_det(const CovarianceMatrix& m);

/// Solves M X = B with M positive definite, without forming M^{-1}.
Matrix solve_spd(const CovarianceMatrix& m, const Matrix& rhs);

}  // namespace rmtkl
