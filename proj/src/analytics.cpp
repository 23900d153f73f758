#include "rmtkl/analytics.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace rmtkl::analytics {

namespace {

// Below this aspect ratio the (1/q) log(1/(1-q)) forms switch to their Taylor
// expansions.
constexpr double kSeriesThreshold = 1e-6;

void require_unit_interval(double q, const char* what) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw std::domain_error(fmt::format("{}: aspect ratio must lie in [0, 1), got {}", what, q));
  }
}

void require_nonnegative(double q, const char* what) {
  if (!(q >= 0.0) || !std::isfinite(q)) {
    throw std::domain_error(fmt::format("{}: aspect ratio must be finite and >= 0, got {}", what, q));
  }
}

// ((1 - q)/q) log(1/(1 - q)) -> 1 - q/2 - q^2/6 - q^3/12 near 0.
double log_ratio_term(double q) {
  if (q < kSeriesThreshold) {
    return 1.0 - q / 2.0 - q * q / 6.0 - q * q * q / 12.0;
  }
  return (1.0 - q) / q * -std::log1p(-q);
}

}  // namespace

PopulationParameter PopulationParameter::from_p(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::domain_error(fmt::format("inverse Wishart parameter p must be positive and finite, got {}", p));
  }
  return PopulationParameter(p, p / (1.0 + p));
}

PopulationParameter PopulationParameter::from_qstar(double qstar) {
  if (!(qstar > 0.0 && qstar < 1.0)) {
    throw std::domain_error(fmt::format("q* must lie in (0, 1), got {}", qstar));
  }
  return PopulationParameter(qstar / (1.0 - qstar), qstar);
}

double expected_kl_sample(double q) {
  require_unit_interval(q, "expected_kl_sample");
  if (q < kSeriesThreshold) {
    return q / 4.0 + 5.0 * q * q / 12.0 + 11.0 * q * q * q / 24.0;
  }
  return 0.5 * log_ratio_term(q) + 1.0 / (2.0 * (1.0 - q)) - 1.0;
}

double expected_tau_inv_wishart(double q) {
  require_unit_interval(q, "expected_tau_inv_wishart");
  return 1.0 / (1.0 - q);
}

double expected_log_det_wishart(double q) {
  require_unit_interval(q, "expected_log_det_wishart");
  return log_ratio_term(q) - 1.0;
}

double expected_kl_in_out(double q_in, double q_out) {
  require_unit_interval(q_in, "expected_kl_in_out (q_in)");
  require_unit_interval(q_out, "expected_kl_in_out (q_out)");
  if (q_in == 0.0) {
    throw std::domain_error("expected_kl_in_out: q_in must be positive");
  }
  return 0.5 * log_ratio_term(q_in) - 0.5 * log_ratio_term(q_out) + 1.0 / (2.0 * (1.0 - q_in)) - 0.5;
}

double oracle_rq(PopulationParameter pop, double q) {
  require_nonnegative(q, "oracle_rq");
  const double s = pop.qstar();
  return s * q / (s + q - s * q);
}

double alternating_series(double x, int order) {
  if (order < 1) {
    throw std::domain_error(fmt::format("series order must be >= 1, got {}", order));
  }
  double sum = 0.0;
  double term = x;
  for (int j = 1; j <= order; ++j) {
    sum += (j % 2 == 1) ? term : -term;
    term *= x;
  }
  return sum;
}

double oracle_kl_partial_sum(PopulationParameter pop, double q, int order) {
  return alternating_series(oracle_rq(pop, q) / 4.0, order);
}

OracleKlPrediction oracle_kl_closed(PopulationParameter pop, double q) {
  require_nonnegative(q, "oracle_kl_closed");
  const double p = pop.p();
  const double rq = oracle_rq(pop, q);
  return OracleKlPrediction{p, pop.qstar(), q, rq, p * q / (4.0 * p + 4.0 * q + p * q), rq < 4.0};
}

double expected_frobenius_oracle(double p, double q, double r) {
  return (1.0 - r) * (1.0 - r) * p + q * r * r;
}

double expected_frobenius_oracle_asymptotic(double p, double q) {
  require_nonnegative(q, "expected_frobenius_oracle_asymptotic");
  return p * q / (p + q);
}

KlFrobeniusLink kl_frobenius_link(PopulationParameter pop, double q) {
  return KlFrobeniusLink{oracle_kl_partial_sum(pop, q, 1), expected_frobenius_oracle_asymptotic(pop.p(), q) / 4.0};
}

double region_boundary_qstar(double q) {
  if (!(q > 4.0)) {
    throw std::domain_error(fmt::format("divergence boundary exists only for q > 4, got {}", q));
  }
  return 4.0 * q / (5.0 * q - 4.0);
}

double region_boundary_q(double qstar) {
  if (!(qstar > 0.8 && qstar < 1.0)) {
    throw std::domain_error(fmt::format("divergence boundary exists only for q* in (0.8, 1), got {}", qstar));
  }
  return 4.0 * qstar / (5.0 * qstar - 4.0);
}

}  // namespace rmtkl::analytics
