#pragma once

// Rotationally invariant estimators: the Oracle and optimal linear shrinkage.

#include "rmtkl/matcore.hpp"

#include <cstdint>
#include <string_view>

namespace rmtkl {

/// Oracle estimator Xi = V diag(Lambda_O) V^T. Eigenvalue lists are kept in
/// the ascending order of the sample eigenvalues so that sample_eigenvalues(i)
/// and oracle_eigenvalues(i) refer to the same eigenvector.
struct OracleEstimate {
  Matrix basis;
  Vector sample_eigenvalues;
  Vector oracle_eigenvalues;
  CovarianceMatrix matrix;
};

/// diag(V^T C V) in V's column order. Throws LinalgError on dimension mismatch
/// or on an entry below 1e-12 (impossible for orthonormal V and PD C).
Vector oracle_eigenvalues(const Matrix& basis, const CovarianceMatrix& c);

OracleEstimate oracle_estimator(const CovarianceMatrix& e, const CovarianceMatrix& c);
OracleEstimate oracle_estimator(const SpectralDecomposition& e_spectrum, const CovarianceMatrix& c);

/// Rotationally invariant estimator with basis V and the given eigenvalues.
CovarianceMatrix rie_from_spectrum(const Matrix& basis, const Vector& eigenvalues);

enum class ShrinkageRegime : std::uint8_t { finite_n, asymptotic };

struct ShrinkageCoefficient {
  double r = 1.0;
  ShrinkageRegime regime = ShrinkageRegime::finite_n;
};

std::string_view to_string(ShrinkageRegime regime) noexcept;

/// finite_n: r = np / (n(p+q) - pq); asymptotic: r = p / (p+q).
/// Throws std::domain_error outside n >= 1, p > 0, q > 0 or when r leaves (0, 1].
ShrinkageCoefficient shrinkage_r(Index n, double p, double q, ShrinkageRegime regime = ShrinkageRegime::finite_n);

/// r (E - 1) + 1.
CovarianceMatrix linear_shrinkage(const CovarianceMatrix& e, ShrinkageCoefficient r);

}  // namespace rmtkl
