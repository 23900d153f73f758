#pragma once

// Random matrix generators for the white (inverse) Wishart setting.

#include "rmtkl/matcore.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>

namespace rmtkl {

class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 64-bit finalizer used to turn structured keys into well-mixed seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// Reproducible random stream keyed by (master_seed, stream_id).
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent child stream; used for the single resample after a
  /// numerically singular draw.
  [[nodiscard]] RngStream substream(std::uint64_t index) const;

  double normal();
  double uniform(double lo, double hi);
  std::uint64_t below(std::uint64_t bound);  // uniform in [0, bound)
  std::mt19937_64& engine() noexcept { return engine_; }

  /// Fill a matrix with iid N(0, 1) draws in column-major order.
  Matrix standard_normal(Index rows, Index cols);

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Inverse Wishart population W^{-1}_{np} = (1 - q*) W^{-1}.
struct PopulationSpec {
  Index n = 0;
  double p = 0.0;

  static PopulationSpec from_qstar(Index n, double qstar);
  [[nodiscard]] double qstar() const noexcept { return p / (1.0 + p); }
  [[nodiscard]] Index tstar() const;
  void validate() const;
};

struct SampleSpec {
  Index n = 0;
  double q = 0.0;

  [[nodiscard]] Index t() const;
  [[nodiscard]] double effective_q() const { return static_cast<double>(n) / static_cast<double>(t()); }
  void validate() const;
};

/// floor(n / q) computed so that exact ratios (n=300, q=0.75) are not lost
/// to round-off.
Index observations_for(Index n, double q);

/// (1/t) M M^T with M an n x t matrix of iid standard normals, t = floor(n/q).
CovarianceMatrix sample_white_wishart(Index n, double q, RngStream& rng);

/// Inverse Wishart draw together with its spectrum, which comes for free from
/// the eigendecomposition of the generating Wishart.
struct InverseWishartDraw {
  CovarianceMatrix matrix;
  SpectralDecomposition spectrum;
};

InverseWishartDraw draw_inverse_wishart(const PopulationSpec& spec, RngStream& rng);
CovarianceMatrix sample_inverse_wishart(const PopulationSpec& spec, RngStream& rng);

/// n x t data matrix with iid N(0, C) columns, generated as C^{1/2} Z with the
/// symmetric spectral square root.
Matrix sample_gaussian_data(const CovarianceMatrix& c, Index t, RngStream& rng);
Matrix sample_gaussian_data(const SpectralDecomposition& c_spectrum, Index t, RngStream& rng);

/// E = (1/t) X X^T after centering each row (feature) across the t columns.
CovarianceMatrix sample_covariance(const Matrix& x);

}  // namespace rmtkl
