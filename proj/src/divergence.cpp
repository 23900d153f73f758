#include "rmtkl/divergence.hpp"

#include <fmt/format.h>

namespace rmtkl {

namespace {

void require_same_dim(const CovarianceMatrix& c, const CovarianceMatrix& s, const char* what) {
  if (c.dim() != s.dim()) {
    throw LinalgError(fmt::format("{}: dimension mismatch {} vs {}", what, c.dim(), s.dim()));
  }
}

}  // namespace

double kl_gaussian(const CovarianceMatrix& c, const CovarianceMatrix& s) {
  require_same_dim(c, s, "kl_gaussian");
  const double trace_term = solve_spd(s, c.entries()).trace();
  const double log_ratio = log_det(s) - log_det(c);
  return 0.5 * (trace_term + log_ratio - static_cast<double>(c.dim()));
}

double kl_normalized(const CovarianceMatrix& c, const CovarianceMatrix& s) {
  return kl_gaussian(c, s) / static_cast<double>(c.dim());
}

double frobenius_error(const CovarianceMatrix& c, const CovarianceMatrix& s) {
  require_same_dim(c, s, "frobenius_error");
  return (s.entries() - c.entries()).squaredNorm() / static_cast<double>(c.dim());
}

DivergenceResult divergence(const CovarianceMatrix& c, const CovarianceMatrix& s) {
  const double kl = kl_gaussian(c, s);
  return DivergenceResult{kl, kl / static_cast<double>(c.dim()), frobenius_error(c, s)};
}

}  // namespace rmtkl
