#pragma once

// Reproducible Monte Carlo harness over (C, E, Xi) replicate pipelines.
//
// Replicate i of a cell draws everything from RngStream(cell_seed, i), and
// per-replicate values are aggregated in replicate order with compensated
// summation, so a record does not depend on the worker count.

#include "rmtkl/matcore.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rmtkl {

enum class Metric : std::uint8_t {
  kl_sample,            // KL(C || E) / n, needs q < 1
  kl_oracle,            // KL(C || Xi) / n
  frobenius_oracle,     // tau((Xi - C)^2)
  wishart_tau_inverse,  // tau(W_q^{-1}) for an independent white Wishart, needs q < 1
  wishart_log_det,      // (1/n) log det W_q, needs q < 1
};

inline constexpr std::size_t kMetricCount = 5;

std::string_view to_string(Metric metric) noexcept;
std::optional<Metric> parse_metric(std::string_view name) noexcept;

enum class PopulationKind : std::uint8_t {
  inverse_wishart,
  identity,  // C = 1, the p -> 0 limit; recorded as p = q* = 0
};

struct ExperimentConfig {
  Index n = 200;
  double q = 0.5;
  double p = 1.0;
  PopulationKind population = PopulationKind::inverse_wishart;
  Index replicates = 100;
  std::uint64_t master_seed = 0;
  std::vector<Metric> metrics{Metric::kl_oracle};

  [[nodiscard]] double qstar() const noexcept;
  [[nodiscard]] double effective_q() const;
  [[nodiscard]] bool wants(Metric metric) const noexcept;
  /// Throws InvalidSpec on any violated precondition.
  void validate() const;
};

struct MetricSummary {
  Metric metric = Metric::kl_oracle;
  double mean = 0.0;
  double standard_error = 0.0;  // sample stddev / sqrt(count); 0 when count == 1
  Index count = 0;
};

struct ExperimentRecord {
  ExperimentConfig config;
  double effective_q = 0.0;
  std::vector<MetricSummary> metrics;  // in config.metrics order
  double walltime_s = 0.0;

  [[nodiscard]] const MetricSummary* find(Metric metric) const noexcept;
};

struct ExecutionOptions {
  unsigned workers = 1;
  /// When false, walltime_s is left at 0 so records are byte-reproducible.
  bool record_walltime = false;
};

/// A replicate failed; the cell is aborted rather than resampled.
class CellError : public std::runtime_error {
 public:
  CellError(Index replicate, const std::string& what);
  [[nodiscard]] Index replicate() const noexcept { return replicate_; }

 private:
  Index replicate_;
};

/// Mean and standard error with Neumaier-compensated sums in index order.
MetricSummary summarize(Metric metric, std::span<const double> values);

/// Runs config.replicates replicates with streams (config.master_seed, i).
ExperimentRecord run_cell(const ExperimentConfig& config, const ExecutionOptions& options = {});

struct CellFailure {
  std::size_t cell_index = 0;
  std::string message;
};

struct GridResult {
  std::vector<ExperimentRecord> records;  // successful cells, in grid order
  std::vector<CellFailure> failures;
};

/// Seed used for cell `cell_index` of a grid.
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index) noexcept;

/// Runs every cell with master_seed replaced by cell_seed(master_seed, index);
/// the derived seed is what each record echoes. Failed cells are collected and
/// the remaining cells still run. Throws InvalidSpec on an empty grid.
GridResult run_grid(std::span<const ExperimentConfig> grid, const ExecutionOptions& options = {});

/// KL(E_out || E_in) / n for two independent sample covariances of one
/// inverse Wishart population.
struct InOutConfig {
  Index n = 200;
  double q_in = 0.5;
  double q_out = 0.25;
  double p = 1.0;
  Index replicates = 100;
  std::uint64_t master_seed = 0;
};

MetricSummary run_in_out_cell(const InOutConfig& config, const ExecutionOptions& options = {});

struct RegressionRow {
  double q = 0.0;
  double qstar = 0.0;
  double r_finite = 0.0;
  double r_asymptotic = 0.0;
  double target_kl_norm = 0.0;
  double stderr_kl_norm = 0.0;
};

struct RegressionDataset {
  std::vector<RegressionRow> rows;

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
  [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
};

struct DatasetBuild {
  RegressionDataset dataset;
  std::size_t skipped = 0;  // records without a kl_oracle summary or without an inverse Wishart population
};

/// One row per record; q is the effective ratio n / floor(n/q) and both r
/// variants come from shrinkage_r at that ratio.
DatasetBuild build_regression_dataset(std::span<const ExperimentRecord> records);

/// (q, q*) cells drawn uniformly from [q_min, q_max] x [qstar_min, qstar_max].
struct CellSampling {
  std::size_t cells = 50;
  double q_min = 0.05;
  double q_max = 1.0;
  double qstar_min = 0.05;
  double qstar_max = 0.95;
  std::uint64_t seed = 0;
};

std::vector<ExperimentConfig> random_cells(const CellSampling& sampling, const ExperimentConfig& base);

/// Dataset without simulation: rows at CellSampling points with
/// target = f(q, r_finite) evaluated exactly. Used for recovery benchmarks.
RegressionDataset synthetic_dataset(const CellSampling& sampling, Index n,
                                    const std::function<double(double q, double r)>& target);

}  // namespace rmtkl
