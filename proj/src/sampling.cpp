#include "rmtkl/sampling.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

namespace rmtkl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6U) + (a >> 2U)));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id), engine_(mix_seed(master_seed, stream_id)) {}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(mix_seed(master_seed_, stream_id_), index);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(engine_);
}

Matrix RngStream::standard_normal(Index rows, Index cols) {
  Matrix m(rows, cols);
  double* data = m.data();
  const Index count = rows * cols;
  for (Index k = 0; k < count; ++k) {
    data[k] = normal_(engine_);
  }
  return m;
}

Index observations_for(Index n, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw InvalidSpec(fmt::format("aspect ratio must be positive and finite, got {}", q));
  }
  const double ratio = static_cast<double>(n) / q;
  return static_cast<Index>(std::floor(ratio * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())));
}

PopulationSpec PopulationSpec::from_qstar(Index n, double qstar) {
  if (!(qstar > 0.0 && qstar < 1.0)) {
    throw InvalidSpec(fmt::format("q* must lie in (0, 1), got {}", qstar));
  }
  return PopulationSpec{n, qstar / (1.0 - qstar)};
}

Index PopulationSpec::tstar() const { return observations_for(n, qstar()); }

void PopulationSpec::validate() const {
  if (n < 2) {
    throw InvalidSpec(fmt::format("inverse Wishart needs n >= 2, got n={}", n));
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw InvalidSpec(fmt::format("inverse Wishart parameter p must be positive and finite, got {}", p));
  }
  if (tstar() < n + 1) {
    throw InvalidSpec(fmt::format("t* = floor(n/q*) = {} < n+1 = {} (p={} too large for n={})", tstar(), n + 1, p,
                                  n));
  }
}

Index SampleSpec::t() const { return observations_for(n, q); }

void SampleSpec::validate() const {
  if (n < 1) {
    throw InvalidSpec(fmt::format("dimension must be >= 1, got {}", n));
  }
  if (t() < 2) {
    throw InvalidSpec(fmt::format("t = floor(n/q) = {} < 2 for n={}, q={}", t(), n, q));
  }
}

CovarianceMatrix sample_white_wishart(Index n, double q, RngStream& rng) {
  const SampleSpec spec{n, q};
  spec.validate();
  const Index t = spec.t();
  const Matrix m = rng.standard_normal(n, t);
  Matrix w = Matrix::Zero(n, n);
  w.selfadjointView<Eigen::Lower>().rankUpdate(m, 1.0 / static_cast<double>(t));
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose();
  return CovarianceMatrix(std::move(w));
}

InverseWishartDraw draw_inverse_wishart(const PopulationSpec& spec, RngStream& rng) {
  spec.validate();
  const Index n = spec.n;
  const double qstar = spec.qstar();

  auto attempt = [&](RngStream& stream) -> std::optional<InverseWishartDraw> {
    const CovarianceMatrix w = sample_white_wishart(n, qstar, stream);
    const SpectralDecomposition ws = spectral_decompose(w);
    const double lmax = ws.eigenvalues(n - 1);
    if (!(ws.eigenvalues(0) > definiteness_tolerance(n, lmax))) {
      return std::nullopt;
    }
    // C = (1 - q*) W^{-1}: same basis, reciprocal spectrum, order reversed to
    // stay ascending.
    SpectralDecomposition cs{Vector(n), Matrix(n, n)};
    for (Index k = 0; k < n; ++k) {
      cs.eigenvalues(k) = (1.0 - qstar) / ws.eigenvalues(n - 1 - k);
      cs.eigenvectors.col(k) = ws.eigenvectors.col(n - 1 - k);
    }
    CovarianceMatrix c(cs.reconstruct());
    return InverseWishartDraw{std::move(c), std::move(cs)};
  };

  if (auto draw = attempt(rng)) {
    return std::move(*draw);
  }
  RngStream retry = rng.substream(1);
  if (auto draw = attempt(retry)) {
    return std::move(*draw);
  }
  throw LinalgError(fmt::format("generating Wishart (n={}, q*={}) numerically singular after one resample", n, qstar));
}

CovarianceMatrix sample_inverse_wishart(const PopulationSpec& spec, RngStream& rng) {
  return draw_inverse_wishart(spec, rng).matrix;
}

Matrix sample_gaussian_data(const SpectralDecomposition& c_spectrum, Index t, RngStream& rng) {
  const Index n = c_spectrum.dim();
  if (t < 1) {
    throw InvalidSpec(fmt::format("observation count must be >= 1, got {}", t));
  }
  if (!(c_spectrum.eigenvalues(0) > 0.0)) {
    throw LinalgError(fmt::format("singular or indefinite matrix (n={}): smallest eigenvalue {:.6e}", n,
                                  c_spectrum.eigenvalues(0)));
  }
  const Matrix root = c_spectrum.reconstruct(c_spectrum.eigenvalues.cwiseSqrt());
  const Matrix z = rng.standard_normal(n, t);
  return root * z;
}

Matrix sample_gaussian_data(const CovarianceMatrix& c, Index t, RngStream& rng) {
  return sample_gaussian_data(spectral_decompose(c), t, rng);
}

CovarianceMatrix sample_covariance(const Matrix& x) {
  const Index n = x.rows();
  const Index t = x.cols();
  if (n < 1 || t < 2) {
    throw InvalidSpec(fmt::format("sample covariance needs n >= 1 and t >= 2, got {}x{}", n, t));
  }
  const Matrix centered = x.colwise() - x.rowwise().mean();
  Matrix e = Matrix::Zero(n, n);
  e.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(t));
  e.triangularView<Eigen::StrictlyUpper>() = e.transpose();
  return CovarianceMatrix(std::move(e));
}

}  // namespace rmtkl
