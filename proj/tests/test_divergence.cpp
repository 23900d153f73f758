#include "rmtkl/divergence.hpp"
#include "rmtkl/estimators.hpp"
#include "rmtkl/sampling.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>

using namespace rmtkl;

namespace {

CovarianceMatrix random_pd(Index n, RngStream& rng) {
  const Matrix a = rng.standard_normal(n, n + 3);
  return CovarianceMatrix(a * a.transpose() / static_cast<double>(n + 3) + 0.05 * Matrix::Identity(n, n));
}

Matrix random_orthogonal(Index n, RngStream& rng) {
  Eigen::HouseholderQR<Matrix> qr(rng.standard_normal(n, n));
  return qr.householderQ();
}

CovarianceMatrix conj(const Matrix& q, const CovarianceMatrix& m) {
  return CovarianceMatrix(q * m.entries() * q.transpose());
}

CovarianceMatrix block_double(const CovarianceMatrix& m) {
  const Index n = m.dim();
  Matrix b = Matrix::Zero(2 * n, 2 * n);
  b.topLeftCorner(n, n) = m.entries();
  b.bottomRightCorner(n, n) = m.entries();
  return CovarianceMatrix(b);
}

}  // namespace

TEST_CASE("kl_gaussian closed examples") {
  RngStream rng(1, 0);
  const auto c = random_pd(20, rng);
  CHECK(std::abs(kl_gaussian(c, c)) <= 1e-8 * 20);
  const auto i2 = CovarianceMatrix::identity(2);
  const auto s2 = CovarianceMatrix(2.0 * Matrix::Identity(2, 2));
  CHECK(kl_gaussian(i2, s2) == doctest::Approx(0.5 * (std::log(4.0) - 1.0)).epsilon(1e-14));
  CHECK(kl_gaussian(i2, s2) == doctest::Approx(0.193147).epsilon(1e-6));
  CHECK(kl_normalized(i2, s2) == doctest::Approx(0.0965735).epsilon(1e-6));
  CHECK(kl_normalized(c, c) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("frobenius_error closed examples") {
  const auto i2 = CovarianceMatrix::identity(2);
  const auto s2 = CovarianceMatrix(2.0 * Matrix::Identity(2, 2));
  CHECK(frobenius_error(i2, s2) == 1.0);
  CHECK(frobenius_error(s2, s2) == 0.0);
  const auto d = divergence(i2, s2);
  CHECK(d.kl_normalized == d.kl / 2.0);
  CHECK(d.frobenius == 1.0);
}

TEST_CASE("singular arguments are rejected") {
  const auto i3 = CovarianceMatrix::identity(3);
  const auto rank1 = CovarianceMatrix(Matrix::Ones(3, 3));
  CHECK_THROWS_AS(kl_gaussian(i3, rank1), LinalgError);
  CHECK_THROWS_AS(kl_gaussian(rank1, i3), LinalgError);
  CHECK_THROWS_AS(kl_gaussian(i3, CovarianceMatrix::identity(4)), LinalgError);
}

TEST_CASE("normalized KL is unchanged by block duplication") {
  RngStream rng(2, 0);
  const auto c = random_pd(15, rng);
  const auto s = random_pd(15, rng);
  CHECK(std::abs(kl_normalized(block_double(c), block_double(s)) - kl_normalized(c, s)) <= 1e-10);
}

TEST_CASE("KL is nonnegative on random pairs") {
  RngStream rng(3, 0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    worst = std::min(worst, kl_gaussian(random_pd(n, rng), random_pd(n, rng)));
  }
  CHECK(worst >= -1e-8);
}

TEST_CASE("KL asymmetry, orthogonal invariance, Frobenius symmetry") {
  const auto i2 = CovarianceMatrix::identity(2);
  const auto s2 = CovarianceMatrix(2.0 * Matrix::Identity(2, 2));
  CHECK(std::abs(kl_gaussian(i2, s2) - kl_gaussian(s2, i2)) > 0.1);

  RngStream rng(4, 0);
  for (int k = 0; k < 20; ++k) {
    const auto c = random_pd(25, rng);
    const auto s = random_pd(25, rng);
    const Matrix q = random_orthogonal(25, rng);
    CHECK(std::abs(kl_gaussian(conj(q, c), conj(q, s)) - kl_gaussian(c, s)) <= 1e-8);
    CHECK(std::abs(frobenius_error(c, s) - frobenius_error(s, c)) <= 1e-10);
    CHECK(std::abs(frobenius_error(conj(q, c), conj(q, s)) - frobenius_error(c, s)) <= 1e-10);
  }
}

TEST_CASE("mean normalized KL of the sample covariance at n=500, p=1, q=0.5") {
  double sum = 0.0;
  const int reps = 200;
  for (int i = 0; i < reps; ++i) {
    RngStream rng(5, static_cast<std::uint64_t>(i));
    auto pop = draw_inverse_wishart({500, 1.0}, rng);
    const auto e = sample_covariance(sample_gaussian_data(pop.spectrum, 1000, rng));
    sum += kl_normalized(pop.matrix, e);
  }
  const double mean = sum / reps;
  MESSAGE("mean kl/n = " << mean);
  CHECK(std::abs(mean - 0.5 * std::log(2.0)) <= 0.02 * 0.5 * std::log(2.0));
}
