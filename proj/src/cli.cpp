#include "rmtkl/cli.hpp"

#include "rmtkl/analytics.hpp"
#include "rmtkl/estimators.hpp"
#include "rmtkl/montecarlo.hpp"
#include "rmtkl/parallel.hpp"
#include "rmtkl/persist.hpp"
#include "rmtkl/sampling.hpp"
#include "rmtkl/symreg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace rmtkl::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// A config problem detected after parsing; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
  std::string out = "out";
  bool paper_scale = false;
  bool record_walltime = false;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CommonOptions, seed, workers, out, paper_scale, record_walltime)

// ---------------------------------------------------------------------------
// Option structs. Each one is the fully resolved configuration of a
// subcommand and round-trips through the run manifest.

struct ValidateOptions {
  Index n = 300;
  Index replicates = 100;
  std::vector<std::string> metrics{"kl_sample", "wishart_tau_inverse", "wishart_log_det", "kl_in_out", "kl_oracle",
                                   "frobenius_oracle"};
  std::vector<double> sample_q{0.25, 0.5, 0.75};
  std::vector<double> sample_p{1.0};
  std::vector<double> oracle_q{0.5, 1.0, 2.0, 4.0};
  std::vector<double> oracle_p{0.5, 1.0, 3.0};
  double q_in = 0.5;
  double q_out = 0.25;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ValidateOptions, n, replicates, metrics, sample_q, sample_p, oracle_q, oracle_p,
                                   q_in, q_out)

struct SweepOptions {
  std::vector<int> orders{1, 2, 4, 8, 16};
  std::size_t grid_q = 50;
  std::size_t grid_qstar = 20;
  double q_max = 7.0;
  bool empirical = false;
  Index n = 200;
  Index replicates = 100;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SweepOptions, orders, grid_q, grid_qstar, q_max, empirical, n, replicates)

struct RegionOptions {
  std::size_t grid_q = 140;
  std::size_t grid_qstar = 100;
  double q_max = 7.0;
  double boundary_tol = 0.05;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RegionOptions, grid_q, grid_qstar, q_max, boundary_tol)

struct DatasetOptions {
  std::string mode = "random";  // random | grid
  bool synthetic = false;
  Index n = 200;
  Index replicates = 100;
  std::size_t cells = 50;
  std::size_t grid_q = 5;
  std::size_t grid_qstar = 5;
  double q_min = 0.05;
  double q_max = 1.0;
  double qstar_min = 0.05;
  double qstar_max = 0.95;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DatasetOptions, mode, synthetic, n, replicates, cells, grid_q, grid_qstar, q_min,
                                   q_max, qstar_min, qstar_max)

struct SymregOptions {
  std::string dataset;
  std::string heldout;
  std::size_t population = 5000;
  int generations = 40;
  double parsimony = 1e-4;
  int rounds = 4;
  std::size_t tournament = 20;
  double crossover_prob = 0.9;
  double mutation_prob = 0.05;
  double point_mutation_prob = 0.1;
  int max_depth = 12;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SymregOptions, dataset, heldout, population, generations, parsimony, rounds,
                                   tournament, crossover_prob, mutation_prob, point_mutation_prob, max_depth)

// ---------------------------------------------------------------------------
// Shared helpers

/// Interior points lo + (hi - lo) (i + 1) / (count + 1) of an open interval.
std::vector<double> open_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(count + 1);
  }
  return g;
}

std::vector<double> closed_grid(double lo, double hi, std::size_t count) {
  if (count == 1) {
    return {lo};
  }
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return g;
}

fs::path prepare_out_dir(const CommonOptions& common) {
  const fs::path dir(common.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw PersistError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  }
  return dir;
}

template <class Options>
void write_manifest(const fs::path& dir, std::string_view subcommand, const CommonOptions& common,
                    const Options& options, const std::vector<std::string>& outputs) {
  json common_json = common;
  // Worker count, output location and timing never change any CSV byte, so
  // they are reported but not part of the replayed configuration.
  json manifest{{"subcommand", subcommand},
                {"tool_version", kToolVersion},
                {"seed", common.seed},
                {"common", common_json},
                {"config", options},
                {"outputs", outputs}};
  std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!f) {
    throw PersistError(fmt::format("cannot write manifest in '{}'", dir.string()));
  }
  f << manifest.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw PersistError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  f << text;
  if (!f) {
    throw PersistError(fmt::format("write to '{}' failed", path.string()));
  }
}

ExecutionOptions execution(const CommonOptions& common) {
  return ExecutionOptions{std::max(1U, common.workers), common.record_walltime};
}

// ---------------------------------------------------------------------------
// validate

struct Check {
  std::string metric;
  Index n = 0;
  double q = 0.0;
  double p = 0.0;
  double analytic = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  double allowance = 0.0;
  bool pass = false;
};

/// Large-n predictions carry O(1/n) bias; a check passes when it is within
/// 4 standard errors or within 3% + 2/n of the prediction.
Check make_check(std::string metric, Index n, double q, double p, double analytic, const MetricSummary& s) {
  Check c{std::move(metric), n, q, p, analytic, s.mean, s.standard_error};
  const double diff = s.mean - analytic;
  c.z = s.standard_error > 0.0 ? diff / s.standard_error
                               : (diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff));
  c.allowance = 0.03 * std::abs(analytic) + 2.0 / static_cast<double>(n);
  c.pass = std::abs(c.z) <= 4.0 || std::abs(diff) <= c.allowance;
  return c;
}

bool has(const std::vector<std::string>& list, std::string_view name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

int run_validate(const CommonOptions& common, const ValidateOptions& opt, std::ostream& out) {
  static const std::vector<std::string> kKnown{"kl_sample",  "wishart_tau_inverse", "wishart_log_det",
                                               "kl_in_out",  "kl_oracle",           "frobenius_oracle"};
  for (const auto& m : opt.metrics) {
    if (!has(kKnown, m)) {
      throw UsageError(fmt::format("unknown metric '{}'", m));
    }
  }
  if (opt.metrics.empty()) {
    throw UsageError("no metrics selected");
  }

  std::vector<ExperimentConfig> grid;
  std::vector<Metric> sample_metrics;
  for (const char* name : {"kl_sample", "wishart_tau_inverse", "wishart_log_det"}) {
    if (has(opt.metrics, name)) {
      sample_metrics.push_back(*parse_metric(name));
    }
  }
  std::vector<Metric> oracle_metrics;
  for (const char* name : {"kl_oracle", "frobenius_oracle"}) {
    if (has(opt.metrics, name)) {
      oracle_metrics.push_back(*parse_metric(name));
    }
  }
  auto add_cells = [&](const std::vector<double>& qs, const std::vector<double>& ps, const std::vector<Metric>& ms) {
    if (ms.empty()) {
      return;
    }
    for (double p : ps) {
      for (double q : qs) {
        ExperimentConfig cfg;
        cfg.n = opt.n;
        cfg.q = q;
        cfg.p = p;
        cfg.replicates = opt.replicates;
        cfg.master_seed = common.seed;
        cfg.metrics = ms;
        grid.push_back(cfg);
      }
    }
  };
  add_cells(opt.sample_q, opt.sample_p, sample_metrics);
  add_cells(opt.oracle_q, opt.oracle_p, oracle_metrics);
  const bool in_out = has(opt.metrics, "kl_in_out");
  InOutConfig io{opt.n, opt.q_in, opt.q_out, opt.sample_p.empty() ? 1.0 : opt.sample_p.front(), opt.replicates,
                 mix_seed(common.seed, 0x10)};

  try {
    for (const auto& cfg : grid) {
      cfg.validate();
    }
    if (in_out) {
      if (!(io.q_in > 0.0 && io.q_in < 1.0 && io.q_out > 0.0 && io.q_out < 1.0)) {
        throw InvalidSpec(fmt::format("kl_in_out needs q_in, q_out in (0, 1), got {}, {}", io.q_in, io.q_out));
      }
      PopulationSpec{io.n, io.p}.validate();
    }
  } catch (const InvalidSpec& ex) {
    throw UsageError(ex.what());
  }
  if (grid.empty() && !in_out) {
    throw UsageError("validate: empty grid");
  }

  const fs::path dir = prepare_out_dir(common);
  write_manifest(dir, "validate", common, opt, {"records.csv", "validate.csv"});

  const ExecutionOptions exec = execution(common);
  GridResult result;
  if (!grid.empty()) {
    result = run_grid(grid, exec);
  }
  std::vector<Check> checks;
  for (const auto& rec : result.records) {
    const double q = rec.effective_q;
    const double p = rec.config.p;
    for (const auto& s : rec.metrics) {
      switch (s.metric) {
        case Metric::kl_sample:
          checks.push_back(make_check("kl_sample", rec.config.n, q, p, analytics::expected_kl_sample(q), s));
          break;
        case Metric::wishart_tau_inverse:
          checks.push_back(
              make_check("wishart_tau_inverse", rec.config.n, q, p, analytics::expected_tau_inv_wishart(q), s));
          break;
        case Metric::wishart_log_det:
          checks.push_back(
              make_check("wishart_log_det", rec.config.n, q, p, analytics::expected_log_det_wishart(q), s));
          break;
        case Metric::kl_oracle: {
          const auto pred = analytics::oracle_kl_closed(analytics::PopulationParameter::from_p(p), q);
          if (pred.converges) {
            checks.push_back(make_check("kl_oracle", rec.config.n, q, p, pred.closed_form, s));
          }
          break;
        }
        case Metric::frobenius_oracle:
          checks.push_back(make_check("frobenius_oracle", rec.config.n, q, p,
                                      analytics::expected_frobenius_oracle_asymptotic(p, q), s));
          break;
      }
    }
  }
  if (in_out) {
    const MetricSummary s = run_in_out_cell(io, exec);
    const double qi = SampleSpec{io.n, io.q_in}.effective_q();
    const double qo = SampleSpec{io.n, io.q_out}.effective_q();
    Check c = make_check("kl_in_out", io.n, qi, io.p, analytics::expected_kl_in_out(qi, qo), s);
    checks.push_back(c);
  }

  save_records(dir / "records.csv", result.records);
  std::ostringstream csv;
  csv << "schema,metric,n,q,p,analytic,empirical,stderr,z,allowance,pass\n";
  out << fmt::format("{:<20} {:>5} {:>8} {:>6} {:>12} {:>12} {:>10} {:>8}  {}\n", "metric", "n", "q", "p",
                     "analytic", "empirical", "stderr", "z", "result");
  bool all_pass = result.failures.empty();
  for (const auto& c : checks) {
    csv << fmt::format("validate-1,{},{},{},{},{},{},{},{},{},{}\n", c.metric, c.n, format_real(c.q),
                       format_real(c.p), format_real(c.analytic), format_real(c.empirical),
                       format_real(c.standard_error), format_real(c.z), format_real(c.allowance),
                       c.pass ? "true" : "false");
    out << fmt::format("{:<20} {:>5} {:>8.4f} {:>6.3f} {:>12.6f} {:>12.6f} {:>10.2e} {:>8.2f}  {}\n", c.metric, c.n,
                       c.q, c.p, c.analytic, c.empirical, c.standard_error, c.z, c.pass ? "PASS" : "FAIL");
    all_pass = all_pass && c.pass;
  }
  for (const auto& f : result.failures) {
    out << fmt::format("cell {} failed: {}\n", f.cell_index, f.message);
  }
  write_text(dir / "validate.csv", csv.str());
  return all_pass ? kExitOk : kExitValidationFailed;
}

// ---------------------------------------------------------------------------
// sweep

int run_sweep(const CommonOptions& common, const SweepOptions& opt, std::ostream& out) {
  if (opt.orders.empty()) {
    throw UsageError("sweep: empty order list");
  }
  for (int k : opt.orders) {
    if (k < 1) {
      throw UsageError(fmt::format("sweep: series order must be >= 1, got {}", k));
    }
  }
  if (opt.grid_q == 0 || opt.grid_qstar == 0 || !(opt.q_max > 0.0)) {
    throw UsageError("sweep: grid sizes must be >= 1 and q-max > 0");
  }
  const auto qs = open_grid(0.0, opt.q_max, opt.grid_q);
  const auto qstars = open_grid(0.0, 1.0, opt.grid_qstar);

  std::vector<ExperimentConfig> cells;
  if (opt.empirical) {
    for (double qstar : qstars) {
      for (double q : qs) {
        ExperimentConfig cfg;
        cfg.n = opt.n;
        cfg.q = q;
        cfg.p = qstar / (1.0 - qstar);
        cfg.replicates = opt.replicates;
        cfg.master_seed = common.seed;
        cfg.metrics = {Metric::kl_oracle};
        try {
          cfg.validate();
        } catch (const InvalidSpec& ex) {
          throw UsageError(ex.what());
        }
        cells.push_back(cfg);
      }
    }
  }

  const fs::path dir = prepare_out_dir(common);
  write_manifest(dir, "sweep", common, opt, {"sweep.csv"});

  GridResult mc;
  if (!cells.empty()) {
    mc = run_grid(cells, execution(common));
    if (!mc.failures.empty()) {
      for (const auto& f : mc.failures) {
        out << fmt::format("cell {} failed: {}\n", f.cell_index, f.message);
      }
      return kExitValidationFailed;
    }
  }

  std::ostringstream csv;
  csv << "schema,q,qstar,order,partial_sum,closed_form,empirical_mean,stderr\n";
  std::size_t cell = 0;
  std::size_t rows = 0;
  for (double qstar : qstars) {
    const auto pop = analytics::PopulationParameter::from_qstar(qstar);
    for (double q : qs) {
      const auto pred = analytics::oracle_kl_closed(pop, q);
      std::string emp = ",";
      if (opt.empirical) {
        const MetricSummary* s = mc.records[cell].find(Metric::kl_oracle);
        emp = fmt::format("{},{}", format_real(s->mean), format_real(s->standard_error));
      }
      for (int k : opt.orders) {
        csv << fmt::format("sweep-1,{},{},{},{},{},{}\n", format_real(q), format_real(qstar), k,
                           format_real(analytics::oracle_kl_partial_sum(pop, q, k)), format_real(pred.closed_form),
                           emp);
        ++rows;
      }
      ++cell;
    }
  }
  write_text(dir / "sweep.csv", csv.str());
  out << fmt::format("sweep: {} rows written to {}\n", rows, (dir / "sweep.csv").string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// region

int run_region(const CommonOptions& common, const RegionOptions& opt, std::ostream& out) {
  if (opt.grid_q == 0 || opt.grid_qstar == 0 || !(opt.q_max > 0.0) || !(opt.boundary_tol >= 0.0)) {
    throw UsageError("region: grid sizes must be >= 1, q-max > 0 and boundary-tol >= 0");
  }
  const fs::path dir = prepare_out_dir(common);
  write_manifest(dir, "region", common, opt, {"region.csv", "region_boundary.csv"});

  const auto qs = open_grid(0.0, opt.q_max, opt.grid_q);
  const auto qstars = open_grid(0.0, 1.0, opt.grid_qstar);
  std::ostringstream csv;
  csv << "schema,q,qstar,rq,converges,boundary\n";
  std::size_t divergent = 0;
  for (double qstar : qstars) {
    const auto pop = analytics::PopulationParameter::from_qstar(qstar);
    for (double q : qs) {
      const double rq = analytics::oracle_rq(pop, q);
      const bool converges = rq < 4.0;
      divergent += converges ? 0 : 1;
      csv << fmt::format("region-1,{},{},{},{},{}\n", format_real(q), format_real(qstar), format_real(rq),
                         converges ? "true" : "false", std::abs(rq - 4.0) < opt.boundary_tol ? "true" : "false");
    }
  }
  write_text(dir / "region.csv", csv.str());

  std::ostringstream boundary;
  boundary << "schema,q,qstar_boundary\n";
  for (double q : qs) {
    if (q > 4.0) {
      boundary << fmt::format("region-boundary-1,{},{}\n", format_real(q),
                              format_real(analytics::region_boundary_qstar(q)));
    }
  }
  write_text(dir / "region_boundary.csv", boundary.str());
  out << fmt::format("region: {} cells, {} outside the convergence region\n", qs.size() * qstars.size(), divergent);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dataset

double second_order_target(double q, double r) {
  const double x = 0.25 * q * r;
  return x - x * x;
}

int run_dataset(const CommonOptions& common, const DatasetOptions& opt, std::ostream& out) {
  if (opt.mode != "random" && opt.mode != "grid") {
    throw UsageError(fmt::format("dataset: mode must be 'random' or 'grid', got '{}'", opt.mode));
  }
  if (!(opt.q_min > 0.0 && opt.q_min <= opt.q_max) || !(opt.qstar_min > 0.0 && opt.qstar_min <= opt.qstar_max &&
                                                        opt.qstar_max < 1.0)) {
    throw UsageError("dataset: need 0 < q-min <= q-max and 0 < qstar-min <= qstar-max < 1");
  }
  const CellSampling sampling{opt.mode == "grid" ? opt.grid_q * opt.grid_qstar : opt.cells,
                              opt.q_min,
                              opt.q_max,
                              opt.qstar_min,
                              opt.qstar_max,
                              common.seed};
  if (sampling.cells == 0) {
    throw UsageError("dataset: zero cells requested");
  }
  // Finite-n r = np / (n(p+q) - pq) stays in (0, 1] only while p <= n.
  if (opt.qstar_max / (1.0 - opt.qstar_max) > static_cast<double>(opt.n)) {
    throw UsageError(fmt::format("dataset: qstar_max {} gives p > n = {}; raise --n or lower --qstar-max",
                                 opt.qstar_max, opt.n));
  }

  if (opt.synthetic) {
    if (opt.mode != "random") {
      throw UsageError("dataset: --synthetic supports random mode only");
    }
    const fs::path dir = prepare_out_dir(common);
    write_manifest(dir, "dataset", common, opt, {"dataset.csv"});
    const RegressionDataset data = synthetic_dataset(sampling, opt.n, second_order_target);
    save_dataset(dir / "dataset.csv", data);
    out << fmt::format("dataset: {} synthetic rows written to {}\n", data.size(), (dir / "dataset.csv").string());
    return kExitOk;
  }

  ExperimentConfig base;
  base.n = opt.n;
  base.replicates = opt.replicates;
  base.master_seed = common.seed;
  base.metrics = {Metric::kl_oracle, Metric::frobenius_oracle};
  std::vector<ExperimentConfig> cells;
  if (opt.mode == "random") {
    cells = random_cells(sampling, base);
  } else {
    for (double qstar : closed_grid(opt.qstar_min, opt.qstar_max, opt.grid_qstar)) {
      for (double q : closed_grid(opt.q_min, opt.q_max, opt.grid_q)) {
        ExperimentConfig cfg = base;
        cfg.q = q;
        cfg.p = qstar / (1.0 - qstar);
        cells.push_back(cfg);
      }
    }
  }
  try {
    for (const auto& c : cells) {
      c.validate();
    }
  } catch (const InvalidSpec& ex) {
    throw UsageError(ex.what());
  }

  const fs::path dir = prepare_out_dir(common);
  write_manifest(dir, "dataset", common, opt, {"records.csv", "dataset.csv"});
  const GridResult result = run_grid(cells, execution(common));
  save_records(dir / "records.csv", result.records);
  const DatasetBuild built = build_regression_dataset(result.records);
  save_dataset(dir / "dataset.csv", built.dataset);
  for (const auto& f : result.failures) {
    out << fmt::format("cell {} failed: {}\n", f.cell_index, f.message);
  }
  out << fmt::format("dataset: {} rows ({} records skipped) written to {}\n", built.dataset.size(), built.skipped,
                     (dir / "dataset.csv").string());
  return result.failures.empty() ? kExitOk : kExitValidationFailed;
}

// ---------------------------------------------------------------------------
// symreg

int run_symreg(const CommonOptions& common, const SymregOptions& opt, std::ostream& out) {
  if (opt.dataset.empty()) {
    throw UsageError("symreg: --dataset is required");
  }
  const RegressionDataset data = load_dataset(opt.dataset);
  if (data.empty()) {
    throw UsageError(fmt::format("symreg: dataset '{}' has no rows", opt.dataset));
  }
  std::optional<RegressionDataset> heldout;
  if (!opt.heldout.empty()) {
    heldout = load_dataset(opt.heldout);
    if (heldout->empty()) {
      throw UsageError(fmt::format("symreg: held-out dataset '{}' has no rows", opt.heldout));
    }
  }
  symreg::GpConfig gp;
  gp.population_size = opt.population;
  gp.generations = opt.generations;
  gp.parsimony = opt.parsimony;
  gp.independent_runs = opt.rounds;
  gp.tournament_size = opt.tournament;
  gp.crossover_prob = opt.crossover_prob;
  gp.mutation_prob = opt.mutation_prob;
  gp.point_mutation_prob = opt.point_mutation_prob;
  gp.max_depth = opt.max_depth;
  gp.seed = common.seed;
  gp.workers = std::max(1U, common.workers);
  try {
    gp.validate();
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }

  const fs::path dir = prepare_out_dir(common);
  std::vector<std::string> outputs{"symreg_summary.csv"};
  for (int k = 0; k < opt.rounds; ++k) {
    outputs.push_back(fmt::format("best_round{}.txt", k));
    outputs.push_back(fmt::format("history_round{}.csv", k));
  }
  write_manifest(dir, "symreg", common, opt, outputs);

  const auto rounds = symreg::evolve_rounds(gp, data);
  const symreg::Expression reference = symreg::quarter_rq_second_order();
  const double reference_mse = symreg::fitness(reference, data, 0.0).raw_mse;

  std::ostringstream summary;
  summary << "schema,round,seed,raw_mse,penalized,size,heldout_mse,prefix\n";
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    const auto& res = rounds[k];
    const double held = heldout ? symreg::fitness(res.best, *heldout, 0.0).raw_mse
                                : std::numeric_limits<double>::quiet_NaN();
    const symreg::Expression simple = symreg::simplify(res.best);
    std::ostringstream text;
    text << "prefix: " << res.best.to_prefix() << '\n'
         << "infix: " << res.best.to_infix() << '\n'
         << "simplified: " << simple.to_infix() << '\n'
         << fmt::format("raw_mse: {}\npenalized: {}\nsize: {}\n", format_real(res.best_report.raw_mse),
                        format_real(res.best_report.penalized_fitness), res.best_report.size);
    write_text(dir / fmt::format("best_round{}.txt", k), text.str());
    std::ostringstream hist;
    symreg::write_history(hist, res.history);
    write_text(dir / fmt::format("history_round{}.csv", k), hist.str());
    summary << fmt::format("symreg-1,{},{},{},{},{},{},{}\n", k, res.seed, format_real(res.best_report.raw_mse),
                           format_real(res.best_report.penalized_fitness), res.best_report.size,
                           heldout ? format_real(held) : std::string(), res.best.to_prefix());
    out << fmt::format("round {}: mse={:.3e} size={} {}\n", k, res.best_report.raw_mse, res.best_report.size,
                       simple.to_infix());
  }
  write_text(dir / "symreg_summary.csv", summary.str());
  out << fmt::format("reference x - x^2 (x = qr/4) mse on this dataset: {:.3e}\n", reference_mse);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Dispatch

int dispatch(const std::string& subcommand, const CommonOptions& common, const json& config, std::ostream& out) {
  if (subcommand == "validate") {
    return run_validate(common, config.get<ValidateOptions>(), out);
  }
  if (subcommand == "sweep") {
    return run_sweep(common, config.get<SweepOptions>(), out);
  }
  if (subcommand == "region") {
    return run_region(common, config.get<RegionOptions>(), out);
  }
  if (subcommand == "dataset") {
    return run_dataset(common, config.get<DatasetOptions>(), out);
  }
  if (subcommand == "symreg") {
    return run_symreg(common, config.get<SymregOptions>(), out);
  }
  throw UsageError(fmt::format("unknown subcommand '{}'", subcommand));
}

void add_common(CLI::App& app, CommonOptions& common) {
  app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
  app.add_option("--workers", common.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_flag("--paper-scale", common.paper_scale, "n=1000, 500 replicates, GP population 50,000");
  app.add_flag("--record-walltime", common.record_walltime, "Write measured wall time instead of 0 into records");
}

bool given(const CLI::App* app, const char* name) { return app->count(name) > 0; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random-matrix KL laboratory: Monte Carlo validation, series and region maps, GP regression"};
  app.name("rmtkl");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;
  ValidateOptions validate;
  SweepOptions sweep;
  RegionOptions region;
  DatasetOptions dataset;
  SymregOptions symreg_opt;
  std::string manifest_path;

  std::vector<double> v_q;
  std::vector<double> v_p;
  std::vector<double> v_qstar;
  auto* v = app.add_subcommand("validate", "Compare Monte Carlo means with the closed forms");
  add_common(*v, common);
  v->add_option("--n", validate.n, "Dimension")->capture_default_str();
  v->add_option("--replicates", validate.replicates, "Replicates per cell")->capture_default_str();
  v->add_option("--q", v_q, "Aspect ratios (overrides both built-in grids)")->delimiter(',');
  auto* vp = v->add_option("--p", v_p, "Inverse Wishart parameters")->delimiter(',');
  auto* vqs = v->add_option("--qstar", v_qstar, "Inverse Wishart parameters as q*")->delimiter(',');
  vp->excludes(vqs);
  v->add_option("--metric", validate.metrics, "Metrics to check")->delimiter(',');
  v->add_option("--q-in", validate.q_in)->capture_default_str();
  v->add_option("--q-out", validate.q_out)->capture_default_str();

  auto* s = app.add_subcommand("sweep", "Series partial sums against the closed form over a (q, q*) grid");
  add_common(*s, common);
  s->add_option("--orders", sweep.orders, "Series orders")->delimiter(',');
  s->add_option("--grid-q", sweep.grid_q)->capture_default_str();
  s->add_option("--grid-qstar", sweep.grid_qstar)->capture_default_str();
  s->add_option("--q-max", sweep.q_max)->capture_default_str();
  s->add_flag("--empirical", sweep.empirical, "Also simulate every cell");
  s->add_option("--n", sweep.n)->capture_default_str();
  s->add_option("--replicates", sweep.replicates)->capture_default_str();

  auto* r = app.add_subcommand("region", "Convergence region map rq < 4");
  add_common(*r, common);
  r->add_option("--grid-q", region.grid_q)->capture_default_str();
  r->add_option("--grid-qstar", region.grid_qstar)->capture_default_str();
  r->add_option("--q-max", region.q_max)->capture_default_str();
  r->add_option("--boundary-tol", region.boundary_tol)->capture_default_str();

  auto* d = app.add_subcommand("dataset", "Simulate (q, q*) cells and write a regression dataset");
  add_common(*d, common);
  d->add_option("--mode", dataset.mode)->check(CLI::IsMember({"random", "grid"}))->capture_default_str();
  d->add_flag("--synthetic", dataset.synthetic, "Exact x - x^2 targets (x = qr/4) instead of simulation");
  d->add_option("--n", dataset.n)->capture_default_str();
  d->add_option("--replicates", dataset.replicates)->capture_default_str();
  d->add_option("--cells", dataset.cells)->capture_default_str();
  d->add_option("--grid-q", dataset.grid_q)->capture_default_str();
  d->add_option("--grid-qstar", dataset.grid_qstar)->capture_default_str();
  d->add_option("--q-min", dataset.q_min)->capture_default_str();
  d->add_option("--q-max", dataset.q_max)->capture_default_str();
  d->add_option("--qstar-min", dataset.qstar_min)->capture_default_str();
  d->add_option("--qstar-max", dataset.qstar_max)->capture_default_str();

  auto* g = app.add_subcommand("symreg", "Genetic-programming symbolic regression on a dataset");
  add_common(*g, common);
  g->add_option("--dataset", symreg_opt.dataset, "Regression dataset CSV")->required();
  g->add_option("--heldout", symreg_opt.heldout, "Held-out dataset CSV");
  g->add_option("--population", symreg_opt.population)->capture_default_str();
  g->add_option("--generations", symreg_opt.generations)->capture_default_str();
  g->add_option("--parsimony", symreg_opt.parsimony)->capture_default_str();
  g->add_option("--rounds", symreg_opt.rounds)->capture_default_str();
  g->add_option("--tournament", symreg_opt.tournament)->capture_default_str();
  g->add_option("--crossover-prob", symreg_opt.crossover_prob)->capture_default_str();
  g->add_option("--mutation-prob", symreg_opt.mutation_prob)->capture_default_str();
  g->add_option("--point-mutation-prob", symreg_opt.point_mutation_prob)->capture_default_str();
  g->add_option("--max-depth", symreg_opt.max_depth)->capture_default_str();

  auto* rp = app.add_subcommand("replay", "Re-run a subcommand from its manifest.json");
  rp->add_option("manifest", manifest_path, "Path to manifest.json")->required();
  std::optional<std::string> replay_out;
  std::optional<unsigned> replay_workers;
  rp->add_option("--out", replay_out, "Output directory (defaults to the recorded one)");
  rp->add_option("--workers", replay_workers, "Worker threads");

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (v->parsed()) {
      if (!v_q.empty()) {
        validate.sample_q = v_q;
        validate.oracle_q = v_q;
      }
      std::vector<double> ps = v_p;
      for (double qs : v_qstar) {
        if (!(qs > 0.0 && qs < 1.0)) {
          throw UsageError(fmt::format("--qstar must lie in (0, 1), got {}", qs));
        }
        ps.push_back(qs / (1.0 - qs));
      }
      if (!ps.empty()) {
        validate.sample_p = ps;
        validate.oracle_p = ps;
      }
      if (common.paper_scale) {
        if (!given(v, "--n")) validate.n = 1000;
        if (!given(v, "--replicates")) validate.replicates = 500;
      }
      return run_validate(common, validate, out);
    }
    if (s->parsed()) {
      if (common.paper_scale) {
        if (!given(s, "--n")) sweep.n = 1000;
        if (!given(s, "--replicates")) sweep.replicates = 500;
      }
      return run_sweep(common, sweep, out);
    }
    if (r->parsed()) {
      return run_region(common, region, out);
    }
    if (d->parsed()) {
      if (common.paper_scale) {
        if (!given(d, "--n")) dataset.n = 1000;
        if (!given(d, "--replicates")) dataset.replicates = 500;
        if (!given(d, "--cells")) dataset.cells = 5000;
      }
      return run_dataset(common, dataset, out);
    }
    if (g->parsed()) {
      if (common.paper_scale && !given(g, "--population")) {
        symreg_opt.population = 50000;
      }
      return run_symreg(common, symreg_opt, out);
    }
    if (rp->parsed()) {
      std::ifstream f(manifest_path);
      if (!f) {
        throw UsageError(fmt::format("cannot open manifest '{}'", manifest_path));
      }
      const json manifest = json::parse(f);
      CommonOptions replay_common = manifest.at("common").get<CommonOptions>();
      if (replay_out) replay_common.out = *replay_out;
      if (replay_workers) replay_common.workers = *replay_workers;
      return dispatch(manifest.at("subcommand").get<std::string>(), replay_common, manifest.at("config"), out);
    }
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const PersistError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& ex) {
    err << "error: malformed manifest: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitValidationFailed;
  }
  return kExitUsage;
}

}  // namespace rmtkl::cli
