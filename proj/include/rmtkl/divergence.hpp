#pragma once

#include "rmtkl/matcore.hpp"

namespace rmtkl {

struct DivergenceResult {
  double kl = 0.0;             // nats
  double kl_normalized = 0.0;  // kl / n
  double frobenius = 0.0;      // tau((S - C)^2)
};

/// KL(C || S) = 1/2 (Tr(S^{-1} C) + log(det S / det C) - n) between centered
/// Gaussians. Uses solve_spd and log_det, so a singular S or C raises
/// LinalgError. Small negative results from round-off are returned as is.
double kl_gaussian(const CovarianceMatrix& c, const CovarianceMatrix& s);

double kl_normalized(const CovarianceMatrix& c, const CovarianceMatrix& s);

/// (1/n) sum_ij (S_ij - C_ij)^2.
double frobenius_error(const CovarianceMatrix& c, const CovarianceMatrix& s);

DivergenceResult divergence(const CovarianceMatrix& c, const CovarianceMatrix& s);

}  // namespace rmtkl
