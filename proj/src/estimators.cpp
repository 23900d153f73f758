#include "rmtkl/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace rmtkl {

namespace {
constexpr double kOracleFloor = 1e-12;
}

Vector oracle_eigenvalues(const Matrix& basis, const CovarianceMatrix& c) {
  if (basis.rows() != c.dim() || basis.cols() != c.dim()) {
    throw LinalgError(fmt::format("oracle eigenvalues: basis is {}x{}, population has dimension {}", basis.rows(),
                                  basis.cols(), c.dim()));
  }
  const Matrix cv = c.entries() * basis;
  Vector values = basis.cwiseProduct(cv).colwise().sum().transpose();
  for (Index i = 0; i < values.size(); ++i) {
    if (!(values(i) >= kOracleFloor)) {
      throw LinalgError(fmt::format("oracle eigenvalue {} = {:.6e} below {:.0e}; the decomposition is broken", i,
                                    values(i), kOracleFloor));
    }
  }
  return values;
}

CovarianceMatrix rie_from_spectrum(const Matrix& basis, const Vector& eigenvalues) {
  return CovarianceMatrix(basis * eigenvalues.asDiagonal() * basis.transpose());
}

OracleEstimate oracle_estimator(const SpectralDecomposition& e_spectrum, const CovarianceMatrix& c) {
  Vector lo = oracle_eigenvalues(e_spectrum.eigenvectors, c);
  CovarianceMatrix xi = rie_from_spectrum(e_spectrum.eigenvectors, lo);
  return OracleEstimate{e_spectrum.eigenvectors, e_spectrum.eigenvalues, std::move(lo), std::move(xi)};
}

OracleEstimate oracle_estimator(const CovarianceMatrix& e, const CovarianceMatrix& c) {
  return oracle_estimator(spectral_decompose(e), c);
}

std::string_view to_string(ShrinkageRegime regime) noexcept {
  return regime == ShrinkageRegime::finite_n ? "finite_n" : "asymptotic";
}

ShrinkageCoefficient shrinkage_r(Index n, double p, double q, ShrinkageRegime regime) {
  if (n < 1 || !(p > 0.0) || !(q > 0.0) || !std::isfinite(p) || !std::isfinite(q)) {
    throw std::domain_error(fmt::format("shrinkage_r: need n >= 1, p > 0, q > 0; got n={}, p={}, q={}", n, p, q));
  }
  double r = 0.0;
  if (regime == ShrinkageRegime::asymptotic) {
    r = p / (p + q);
  } else {
    const double nd = static_cast<double>(n);
    r = nd * p / (nd * (p + q) - p * q);
  }
  if (!(r > 0.0 && r <= 1.0)) {
    throw std::domain_error(fmt::format("shrinkage_r: r = {} outside (0, 1] for n={}, p={}, q={}", r, n, p, q));
  }
  return ShrinkageCoefficient{r, regime};
}

CovarianceMatrix linear_shrinkage(const CovarianceMatrix& e, ShrinkageCoefficient r) {
  if (!(r.r > 0.0 && r.r <= 1.0)) {
    throw std::domain_error(fmt::format("linear_shrinkage: r = {} outside (0, 1]", r.r));
  }
  Matrix out = r.r * e.entries();
  out.diagonal().array() += 1.0 - r.r;
  return CovarianceMatrix(std::move(out));
}

}  // namespace rmtkl
