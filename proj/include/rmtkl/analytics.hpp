#pragma once

// Closed-form large-n predictions for sample covariances and for the Oracle
// of a white inverse Wishart population. All logarithms are natural.

#include <utility>

namespace rmtkl::analytics {

/// Inverse Wishart parameter, accepted as either p or q* = p / (1 + p).
class PopulationParameter {
 public:
  static PopulationParameter from_p(double p);
  static PopulationParameter from_qstar(double qstar);

  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double qstar() const noexcept { return qstar_; }

 private:
  PopulationParameter(double p, double qstar) : p_(p), qstar_(qstar) {}
  double p_;
  double qstar_;
};

/// Asymptotic E[KL(C || E) / n] for a sample covariance with aspect ratio q.
/// Domain 0 < q < 1, std::domain_error otherwise.
double expected_kl_sample(double q);

/// E[tau(W_q^{-1})] = 1 / (1 - q).
double expected_tau_inv_wishart(double q);

/// E[(1/n) log det W_q] = ((1 - q)/q) log(1/(1 - q)) - 1.
double expected_log_det_wishart(double q);

/// E[KL(E_out || E_in) / n] for two independent sample covariances of the
/// same population. 0 < q_in < 1, 0 <= q_out < 1; q_out = 0 reduces to
/// expected_kl_sample(q_in).
double expected_kl_in_out(double q_in, double q_out);

/// Large-n limit of r q: q* q / (q* + q - q* q).
double oracle_rq(PopulationParameter pop, double q);

/// sum_{j=1..k} (-1)^{j-1} x^j; diverges geometrically for |x| >= 1.
double alternating_series(double x, int order);

/// Partial sum of the Oracle KL series in x = oracle_rq / 4, k >= 1.
double oracle_kl_partial_sum(PopulationParameter pop, double q, int order);

struct OracleKlPrediction {
  double p = 0.0;
  double qstar = 0.0;
  double q = 0.0;
  double rq = 0.0;
  double closed_form = 0.0;  // pq / (4p + 4q + pq); returned even when the series diverges
  bool converges = false;    // rq < 4
};

OracleKlPrediction oracle_kl_closed(PopulationParameter pop, double q);

/// (1 - r)^2 p + q r^2.
double expected_frobenius_oracle(double p, double q, double r);
/// pq / (p + q), i.e. the above at r = p / (p + q).
double expected_frobenius_oracle_asymptotic(double p, double q);

struct KlFrobeniusLink {
  double first_order_kl = 0.0;     // order-1 partial sum, rq/4
  double quarter_frobenius = 0.0;  // asymptotic Frobenius error / 4
};

KlFrobeniusLink kl_frobenius_link(PopulationParameter pop, double q);

/// q* on the divergence boundary rq = 4 for a given q > 4: 4q / (5q - 4).
double region_boundary_qstar(double q);
/// q on the divergence boundary for a given q* in (0.8, 1): 4q* / (5q* - 4).
double region_boundary_q(double qstar);

}  // namespace rmtkl::analytics
