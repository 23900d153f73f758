#include "rmtkl/montecarlo.hpp"

#include "rmtkl/divergence.hpp"
#include "rmtkl/estimators.hpp"
#include "rmtkl/parallel.hpp"
#include "rmtkl/sampling.hpp"

#include <array>
#include <chrono>
#include <algorithm>
#include <cmath>
#include <exception>

#include <fmt/format.h>

namespace rmtkl {

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricNames{
    "kl_sample", "kl_oracle", "frobenius_oracle", "wishart_tau_inverse", "wishart_log_det"};

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::size_t slot(Metric m) noexcept { return static_cast<std::size_t>(m); }

using ReplicateValues = std::array<double, kMetricCount>;

// Population draw for one replicate. The identity population has a trivial
// spectrum, so no decomposition is needed.
struct Population {
  CovarianceMatrix matrix;
  SpectralDecomposition spectrum;
};

Population draw_population(const ExperimentConfig& cfg, RngStream& rng) {
  if (cfg.population == PopulationKind::identity) {
    return Population{CovarianceMatrix::identity(cfg.n),
                      SpectralDecomposition{Vector::Ones(cfg.n), Matrix::Identity(cfg.n, cfg.n)}};
  }
  InverseWishartDraw draw = draw_inverse_wishart(PopulationSpec{cfg.n, cfg.p}, rng);
  return Population{std::move(draw.matrix), std::move(draw.spectrum)};
}

ReplicateValues run_replicate(const ExperimentConfig& cfg, Index replicate) {
  ReplicateValues out{};
  RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(replicate));

  const bool needs_sample =
      cfg.wants(Metric::kl_sample) || cfg.wants(Metric::kl_oracle) || cfg.wants(Metric::frobenius_oracle);
  if (needs_sample) {
    const Population pop = draw_population(cfg, rng);
    const Index t = observations_for(cfg.n, cfg.q);
    const CovarianceMatrix e = sample_covariance(sample_gaussian_data(pop.spectrum, t, rng));
    if (cfg.wants(Metric::kl_sample)) {
      out[slot(Metric::kl_sample)] = kl_normalized(pop.matrix, e);
    }
    if (cfg.wants(Metric::kl_oracle) || cfg.wants(Metric::frobenius_oracle)) {
      const OracleEstimate oracle = oracle_estimator(e, pop.matrix);
      if (cfg.wants(Metric::kl_oracle)) {
        out[slot(Metric::kl_oracle)] = kl_normalized(pop.matrix, oracle.matrix);
      }
      if (cfg.wants(Metric::frobenius_oracle)) {
        out[slot(Metric::frobenius_oracle)] = frobenius_error(pop.matrix, oracle.matrix);
      }
    }
  }
  if (cfg.wants(Metric::wishart_tau_inverse) || cfg.wants(Metric::wishart_log_det)) {
    const CovarianceMatrix w = sample_white_wishart(cfg.n, cfg.q, rng);
    const double n = static_cast<double>(cfg.n);
    if (cfg.wants(Metric::wishart_tau_inverse)) {
      out[slot(Metric::wishart_tau_inverse)] = solve_spd(w, Matrix::Identity(cfg.n, cfg.n)).trace() / n;
    }
    if (cfg.wants(Metric::wishart_log_det)) {
      out[slot(Metric::wishart_log_det)] = log_det(w) / n;
    }
  }
  return out;
}

// Runs `count` replicates of `fn`, aborting with the lowest failing index.
template <class Fn>
std::vector<ReplicateValues> run_replicates(Index count, unsigned workers, Fn&& fn) {
  const auto n = static_cast<std::size_t>(count);
  std::vector<ReplicateValues> values(n);
  std::vector<std::string> errors(n);
  std::vector<char> failed(n, 0);
  std::atomic<bool> stop{false};
  parallel_for(
      n, workers,
      [&](std::size_t i) {
        try {
          values[i] = fn(static_cast<Index>(i));
        } catch (const std::exception& ex) {
          errors[i] = ex.what();
          failed[i] = 1;
          stop.store(true, std::memory_order_relaxed);
        }
      },
      &stop);
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i] != 0) {
      throw CellError(static_cast<Index>(i), errors[i]);
    }
  }
  return values;
}

}  // namespace

std::string_view to_string(Metric metric) noexcept { return kMetricNames[slot(metric)]; }

std::optional<Metric> parse_metric(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (kMetricNames[i] == name) {
      return static_cast<Metric>(i);
    }
  }
  return std::nullopt;
}

double ExperimentConfig::qstar() const noexcept {
  return population == PopulationKind::identity ? 0.0 : p / (1.0 + p);
}

double ExperimentConfig::effective_q() const { return SampleSpec{n, q}.effective_q(); }

bool ExperimentConfig::wants(Metric metric) const noexcept {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

void ExperimentConfig::validate() const {
  if (n < 2) {
    throw InvalidSpec(fmt::format("experiment needs n >= 2, got {}", n));
  }
  if (replicates < 1) {
    throw InvalidSpec(fmt::format("experiment needs replicates >= 1, got {}", replicates));
  }
  if (metrics.empty()) {
    throw InvalidSpec("experiment requests no metrics");
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (metrics[i] == metrics[j]) {
        throw InvalidSpec(fmt::format("metric {} requested twice", to_string(metrics[i])));
      }
    }
  }
  SampleSpec{n, q}.validate();
  const bool needs_invertible_e =
      wants(Metric::kl_sample) || wants(Metric::wishart_tau_inverse) || wants(Metric::wishart_log_det);
  if (needs_invertible_e && !(q < 1.0)) {
    throw InvalidSpec(fmt::format("q = {} >= 1 makes the sample covariance singular; kl_sample and Wishart "
                                  "moments need q < 1",
                                  q));
  }
  if (population == PopulationKind::inverse_wishart) {
    PopulationSpec{n, p}.validate();
  }
}

const MetricSummary* ExperimentRecord::find(Metric metric) const noexcept {
  for (const auto& m : metrics) {
    if (m.metric == metric) {
      return &m;
    }
  }
  return nullptr;
}

CellError::CellError(Index replicate, const std::string& what)
    : std::runtime_error(fmt::format("replicate {} failed: {}", replicate, what)), replicate_(replicate) {}

MetricSummary summarize(Metric metric, std::span<const double> values) {
  MetricSummary out;
  out.metric = metric;
  out.count = static_cast<Index>(values.size());
  if (values.empty()) {
    return out;
  }
  CompensatedSum total;
  for (double v : values) {
    total.add(v);
  }
  const double count = static_cast<double>(values.size());
  out.mean = total.value() / count;
  if (values.size() > 1) {
    CompensatedSum squares;
    for (double v : values) {
      squares.add((v - out.mean) * (v - out.mean));
    }
    const double variance = squares.value() / (count - 1.0);
    out.standard_error = std::sqrt(variance / count);
  }
  return out;
}

ExperimentRecord run_cell(const ExperimentConfig& config, const ExecutionOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto values =
      run_replicates(config.replicates, options.workers, [&](Index i) { return run_replicate(config, i); });

  ExperimentRecord record;
  record.config = config;
  record.effective_q = config.effective_q();
  std::vector<double> column(values.size());
  for (Metric m : config.metrics) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      column[i] = values[i][slot(m)];
    }
    record.metrics.push_back(summarize(m, column));
  }
  if (options.record_walltime) {
    record.walltime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return record;
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index) noexcept {
  return mix_seed(master_seed ^ 0x5ce11ULL, static_cast<std::uint64_t>(cell_index));
}

GridResult run_grid(std::span<const ExperimentConfig> grid, const ExecutionOptions& options) {
  if (grid.empty()) {
    throw InvalidSpec("run_grid: empty grid");
  }
  GridResult result;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ExperimentConfig cfg = grid[i];
    cfg.master_seed = cell_seed(grid[i].master_seed, i);
    try {
      result.records.push_back(run_cell(cfg, options));
    } catch (const std::exception& ex) {
      result.failures.push_back(CellFailure{i, ex.what()});
    }
  }
  return result;
}

MetricSummary run_in_out_cell(const InOutConfig& config, const ExecutionOptions& options) {
  if (!(config.q_in > 0.0 && config.q_in < 1.0) || !(config.q_out > 0.0 && config.q_out < 1.0)) {
    throw InvalidSpec(fmt::format("in/out KL needs q_in, q_out in (0, 1), got {}, {}", config.q_in, config.q_out));
  }
  if (config.replicates < 1) {
    throw InvalidSpec("in/out KL needs replicates >= 1");
  }
  const PopulationSpec pop{config.n, config.p};
  pop.validate();
  const Index t_in = observations_for(config.n, config.q_in);
  const Index t_out = observations_for(config.n, config.q_out);
  const auto values = run_replicates(config.replicates, options.workers, [&](Index i) {
    RngStream rng(config.master_seed, static_cast<std::uint64_t>(i));
    const InverseWishartDraw c = draw_inverse_wishart(pop, rng);
    const CovarianceMatrix e_in = sample_covariance(sample_gaussian_data(c.spectrum, t_in, rng));
    const CovarianceMatrix e_out = sample_covariance(sample_gaussian_data(c.spectrum, t_out, rng));
    ReplicateValues v{};
    v[0] = kl_normalized(e_out, e_in);
    return v;
  });
  std::vector<double> column(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    column[i] = values[i][0];
  }
  // Reported under kl_sample: it is a KL between a covariance and a sample estimate.
  return summarize(Metric::kl_sample, column);
}

DatasetBuild build_regression_dataset(std::span<const ExperimentRecord> records) {
  DatasetBuild out;
  for (const auto& rec : records) {
    const MetricSummary* kl = rec.find(Metric::kl_oracle);
    if (kl == nullptr || rec.config.population != PopulationKind::inverse_wishart) {
      ++out.skipped;
      continue;
    }
    const double q = rec.effective_q;
    const double p = rec.config.p;
    RegressionRow row;
    row.q = q;
    row.qstar = rec.config.qstar();
    row.r_finite = shrinkage_r(rec.config.n, p, q, ShrinkageRegime::finite_n).r;
    row.r_asymptotic = shrinkage_r(rec.config.n, p, q, ShrinkageRegime::asymptotic).r;
    row.target_kl_norm = kl->mean;
    row.stderr_kl_norm = kl->standard_error;
    if (!std::isfinite(row.target_kl_norm) || !std::isfinite(row.stderr_kl_norm)) {
      ++out.skipped;
      continue;
    }
    out.dataset.rows.push_back(row);
  }
  return out;
}

std::vector<ExperimentConfig> random_cells(const CellSampling& sampling, const ExperimentConfig& base) {
  RngStream rng(sampling.seed, 0xce11);
  std::vector<ExperimentConfig> cells;
  cells.reserve(sampling.cells);
  for (std::size_t i = 0; i < sampling.cells; ++i) {
    ExperimentConfig cfg = base;
    cfg.q = rng.uniform(sampling.q_min, sampling.q_max);
    const double qstar = rng.uniform(sampling.qstar_min, sampling.qstar_max);
    cfg.p = qstar / (1.0 - qstar);
    cfg.population = PopulationKind::inverse_wishart;
    cells.push_back(std::move(cfg));
  }
  return cells;
}

RegressionDataset synthetic_dataset(const CellSampling& sampling, Index n,
                                    const std::function<double(double q, double r)>& target) {
  RngStream rng(sampling.seed, 0x5e7);
  RegressionDataset data;
  data.rows.reserve(sampling.cells);
  for (std::size_t i = 0; i < sampling.cells; ++i) {
    const double q = rng.uniform(sampling.q_min, sampling.q_max);
    const double qstar = rng.uniform(sampling.qstar_min, sampling.qstar_max);
    const double p = qstar / (1.0 - qstar);
    RegressionRow row;
    row.q = q;
    row.qstar = qstar;
    row.r_finite = shrinkage_r(n, p, q, ShrinkageRegime::finite_n).r;
    row.r_asymptotic = shrinkage_r(n, p, q, ShrinkageRegime::asymptotic).r;
    row.target_kl_norm = target(q, row.r_finite);
    row.stderr_kl_norm = 0.0;
    data.rows.push_back(row);
  }
  return data;
}

}  // namespace rmtkl
