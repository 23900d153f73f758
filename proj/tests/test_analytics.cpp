#include "rmtkl/analytics.hpp"
#include "rmtkl/estimators.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace rmtkl;
using namespace rmtkl::analytics;

namespace {

// Direct transcriptions used as oracles.
double kl_sample_direct(double q) {
  return (1.0 - q) / (2.0 * q) * std::log(1.0 / (1.0 - q)) + 1.0 / (2.0 * (1.0 - q)) - 1.0;
}

double log_det_direct(double q) { return (1.0 - q) / q * std::log(1.0 / (1.0 - q)) - 1.0; }

double rq_from_p(double p, double q) { return p * q / (p + q); }

}  // namespace

TEST_CASE("population parameter bijection") {
  const auto a = PopulationParameter::from_p(1.0);
  CHECK(a.qstar() == 0.5);
  const auto b = PopulationParameter::from_qstar(0.75);
  CHECK(b.p() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS(PopulationParameter::from_p(0.0));
  CHECK_THROWS(PopulationParameter::from_qstar(1.0));
}

TEST_CASE("expected KL of the sample covariance") {
  CHECK(expected_kl_sample(0.5) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(expected_kl_sample(0.5) == doctest::Approx(0.346574).epsilon(1e-6));
  CHECK(expected_kl_sample(0.9) == doctest::Approx(4.127921).epsilon(1e-6));
  CHECK(expected_kl_sample(0.25) == doctest::Approx(kl_sample_direct(0.25)).epsilon(1e-14));
  CHECK(expected_kl_sample(0.0) == 0.0);
  CHECK(expected_kl_sample(1e-9) == doctest::Approx(0.25e-9).epsilon(1e-6));
  // the series branch and the closed form meet smoothly around the switch
  CHECK(std::abs(expected_kl_sample(0.999e-6) - expected_kl_sample(1.001e-6)) < 1e-9);
  CHECK_THROWS_AS(expected_kl_sample(1.0), std::domain_error);
  CHECK_THROWS_AS(expected_kl_sample(-0.1), std::domain_error);
}

TEST_CASE("expected KL is strictly increasing on (0, 1)") {
  double prev = expected_kl_sample(0.0005);
  for (int i = 2; i < 1000; ++i) {
    const double cur = expected_kl_sample(static_cast<double>(i) / 1000.0 - 0.0005);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("Wishart moments") {
  CHECK(expected_tau_inv_wishart(0.5) == 2.0);
  CHECK(expected_tau_inv_wishart(0.0) == 1.0);
  CHECK(expected_log_det_wishart(0.5) == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-14));
  CHECK(expected_log_det_wishart(0.5) == doctest::Approx(-0.306853).epsilon(1e-6));
  CHECK(expected_log_det_wishart(0.3) == doctest::Approx(log_det_direct(0.3)).epsilon(1e-14));
  CHECK(expected_log_det_wishart(0.0) == 0.0);
  CHECK(std::abs(expected_log_det_wishart(1e-8)) < 1e-8);
  CHECK_THROWS_AS(expected_tau_inv_wishart(1.0), std::domain_error);
  CHECK_THROWS_AS(expected_log_det_wishart(1.5), std::domain_error);
}

TEST_CASE("expected in/out KL") {
  CHECK(expected_kl_in_out(0.5, 0.0) == doctest::Approx(0.346574).epsilon(1e-6));
  CHECK(expected_kl_in_out(0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(expected_kl_in_out(0.5, 0.9) == doctest::Approx(0.718653).epsilon(1e-6));
  CHECK(std::abs(expected_kl_in_out(0.3, 1e-8) - expected_kl_sample(0.3)) <= 1e-6);
  CHECK(std::abs(expected_kl_in_out(0.7, 1e-8) - expected_kl_sample(0.7)) <= 1e-6);
  CHECK_THROWS_AS(expected_kl_in_out(1.0, 0.2), std::domain_error);
  CHECK_THROWS_AS(expected_kl_in_out(0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(expected_kl_in_out(0.5, -0.1), std::domain_error);
}

TEST_CASE("oracle rq") {
  CHECK(oracle_rq(PopulationParameter::from_qstar(0.5), 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(oracle_rq(PopulationParameter::from_qstar(1.0 - 1e-12), 4.0) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(oracle_rq(PopulationParameter::from_p(2.0), 0.0) == 0.0);
  for (double p : {0.01, 0.3, 1.0, 7.0}) {
    for (double q : {0.1, 1.0, 3.0, 6.5}) {
      const double ref = rq_from_p(p, q);
      CHECK(oracle_rq(PopulationParameter::from_p(p), q) == doctest::Approx(ref).epsilon(1e-13));
      // large-n limit of the finite shrinkage coefficient times q
      CHECK(shrinkage_r(1000000000, p, q, ShrinkageRegime::asymptotic).r * q == doctest::Approx(ref).epsilon(1e-13));
    }
  }
}

TEST_CASE("series partial sums") {
  // p = q = 2 gives rq = 1
  const auto pop = PopulationParameter::from_p(2.0);
  CHECK(oracle_rq(pop, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(oracle_kl_partial_sum(pop, 2.0, 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(oracle_kl_partial_sum(pop, 2.0, 2) == doctest::Approx(0.1875).epsilon(1e-14));
  CHECK(oracle_kl_partial_sum(pop, 2.0, 60) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(alternating_series(0.25, 3) == doctest::Approx(0.25 - 0.0625 + 0.015625).epsilon(1e-15));
  CHECK_THROWS(alternating_series(0.25, 0));

  // order 2 is x - x^2 with x = rq/4
  for (double p : {0.2, 1.0, 5.0}) {
    for (double q : {0.3, 1.0, 4.0}) {
      const auto pp = PopulationParameter::from_p(p);
      const double x = oracle_rq(pp, q) / 4.0;
      CHECK(oracle_kl_partial_sum(pp, q, 2) == doctest::Approx(x - x * x).epsilon(1e-14));
      CHECK(oracle_kl_partial_sum(pp, q, 1) == doctest::Approx(kl_frobenius_link(pp, q).quarter_frobenius).epsilon(1e-14));
    }
  }
}

TEST_CASE("series tail equals the geometric remainder") {
  // |S_k - x/(1+x)| = x^(k+1)/(1+x); at k = 60 that is below 1e-6 only
  // for x up to about 0.806.
  for (int i = 1; i < 400; ++i) {
    const double rq = 3.999 * static_cast<double>(i) / 400.0;
    const double x = rq / 4.0;
    const double closed = x / (1.0 + x);
    const double err = std::abs(alternating_series(x, 60) - closed);
    const double tail = std::pow(x, 61) / (1.0 + x);
    CHECK(std::abs(err - tail) <= 1e-14);
    if (tail <= 1e-6) {
      CHECK(err <= 1e-6);
    }
  }
}

TEST_CASE("closed-form oracle KL") {
  const auto a = oracle_kl_closed(PopulationParameter::from_p(1.0), 1.0);
  CHECK(a.closed_form == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(a.rq == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(a.converges);
  CHECK(a.p == 1.0);
  CHECK(a.qstar == 0.5);
  CHECK(oracle_kl_closed(PopulationParameter::from_p(1.0), 0.0).closed_form == 0.0);
  const auto b = oracle_kl_closed(PopulationParameter::from_qstar(0.95), 6.0);
  CHECK(b.rq == doctest::Approx(4.56).epsilon(1e-12));
  CHECK_FALSE(b.converges);
  CHECK(b.closed_form == doctest::Approx(19.0 * 6.0 / (4.0 * 19.0 + 24.0 + 114.0)).epsilon(1e-12));
  // closed form equals the limit of the series inside the region
  for (double p : {0.1, 1.0, 4.0}) {
    for (double q : {0.2, 1.5, 3.0}) {
      const auto pp = PopulationParameter::from_p(p);
      const auto pred = oracle_kl_closed(pp, q);
      REQUIRE(pred.rq < 3.0);
      CHECK(std::abs(oracle_kl_partial_sum(pp, q, 200) - pred.closed_form) <= 1e-12);
    }
  }
}

TEST_CASE("expected Frobenius error of the oracle") {
  CHECK(expected_frobenius_oracle(1.0, 1.0, 0.5) == 0.5);
  CHECK(expected_frobenius_oracle_asymptotic(1.0, 1.0) == 0.5);
  CHECK(expected_frobenius_oracle(3.0, 0.7, 1.0) == doctest::Approx(0.7).epsilon(1e-15));
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double p = 0.05 + 0.7 * i;
      const double q = 0.05 + 0.7 * j;
      const double r = p / (p + q);
      CHECK(std::abs(expected_frobenius_oracle(p, q, r) - p * q / (p + q)) <= 1e-12);
    }
  }
}

TEST_CASE("first-order KL equals a quarter of the Frobenius error") {
  const auto l = kl_frobenius_link(PopulationParameter::from_p(1.0), 1.0);
  CHECK(l.first_order_kl == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(l.quarter_frobenius == doctest::Approx(0.125).epsilon(1e-14));
  const auto z = kl_frobenius_link(PopulationParameter::from_p(1.0), 0.0);
  CHECK(z.first_order_kl == 0.0);
  CHECK(z.quarter_frobenius == 0.0);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const auto l2 = kl_frobenius_link(PopulationParameter::from_p(0.1 + 0.9 * i), 0.1 + 0.7 * j);
      CHECK(std::abs(l2.first_order_kl - l2.quarter_frobenius) <= 1e-12);
    }
  }
  const auto small = PopulationParameter::from_p(0.01);
  const double kl = oracle_kl_closed(small, 1.0).closed_form;
  CHECK(std::abs(kl - kl_frobenius_link(small, 1.0).quarter_frobenius) / kl < 0.01);
}

TEST_CASE("convergence region boundary") {
  for (double q : {4.01, 4.5, 5.0, 7.0, 100.0, 1e4}) {
    const double qs = region_boundary_qstar(q);
    CHECK(std::abs(5.0 * qs * q - 4.0 * qs - 4.0 * q) <= 1e-10 * std::max(1.0, q));
    CHECK(oracle_rq(PopulationParameter::from_qstar(qs), q) == doctest::Approx(4.0).epsilon(1e-10));
  }
  for (double qs : {0.81, 0.9, 0.99}) {
    const double q = region_boundary_q(qs);
    CHECK(std::abs(5.0 * qs * q - 4.0 * qs - 4.0 * q) <= 1e-10 * std::max(1.0, q));
    CHECK(region_boundary_qstar(q) == doctest::Approx(qs).epsilon(1e-12));
  }
  CHECK(std::abs(region_boundary_qstar(1e7) - 0.8) <= 1e-6);
  CHECK(std::abs(region_boundary_q(1.0 - 1e-7) - 4.0) <= 1e-5);
  CHECK(std::abs(region_boundary_q(1.0 - 2.5e-8) - 4.0) <= 1e-6);
  CHECK_THROWS(region_boundary_qstar(4.0));
  CHECK_THROWS(region_boundary_q(0.8));
}
