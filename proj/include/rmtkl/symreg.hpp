#pragma once

// Genetic-programming symbolic regression over {+, -, *, /} with terminals
// {q, r, constant}.
//
// Trees are stored as flat prefix-order node vectors. Depth counts edges, so
// a single leaf has depth 0.

#include "rmtkl/montecarlo.hpp"
#include "rmtkl/sampling.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rmtkl::symreg {

enum class Op : std::uint8_t { add, sub, mul, div, var_q, var_r, constant };

struct Node {
  Op op = Op::constant;
  double value = 0.0;  // constants only

  friend bool operator==(const Node&, const Node&) = default;
};

[[nodiscard]] constexpr bool is_function(Op op) noexcept { return op <= Op::div; }

/// |denominator| below this makes protected division return 1.
inline constexpr double kProtectedDivisionEpsilon = 1e-12;

[[nodiscard]] inline double protected_div(double num, double den) noexcept {
  return (den < kProtectedDivisionEpsilon && den > -kProtectedDivisionEpsilon) ? 1.0 : num / den;
}

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Expression {
 public:
  Expression() : nodes_{Node{Op::constant, 0.0}} {}
  /// Throws std::invalid_argument if `prefix` is not exactly one complete tree.
  explicit Expression(std::vector<Node> prefix);

  static Expression q();
  static Expression r();
  static Expression constant(double value);
  static Expression binary(Op op, const Expression& lhs, const Expression& rhs);

  /// Accepts the prefix format produced by to_prefix(), e.g. "(mul q (add r 0.5))".
  static Expression parse(std::string_view text);

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] int depth() const;
  [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }
  [[nodiscard]] const Node& root() const noexcept { return nodes_.front(); }

  /// One past the last node of the subtree rooted at `index`.
  [[nodiscard]] std::size_t subtree_end(std::size_t index) const;
  /// Depth of every node below the root (root = 0), in prefix order.
  [[nodiscard]] std::vector<int> node_depths() const;
  [[nodiscard]] Expression subtree(std::size_t index) const;
  /// Copy with the subtree at `index` replaced by `replacement`.
  [[nodiscard]] Expression replace_subtree(std::size_t index, const Expression& replacement) const;

  [[nodiscard]] std::string to_prefix() const;
  [[nodiscard]] std::string to_infix() const;

  friend bool operator==(const Expression&, const Expression&) = default;

 private:
  std::vector<Node> nodes_;
};

double evaluate(const Expression& expr, double q, double r);

/// Column-oriented inputs for fitness evaluation.
struct FitData {
  std::vector<double> q;
  std::vector<double> r;
  std::vector<double> target;

  /// Uses each row's (q, r_finite) as inputs and target_kl_norm as target.
  static FitData from_dataset(const RegressionDataset& dataset);
  [[nodiscard]] std::size_t rows() const noexcept { return target.size(); }
};

/// Evaluates expr on every row into `out` (length rows()).
void evaluate_batch(const Expression& expr, const FitData& data, std::span<double> out);

struct FitnessReport {
  double raw_mse = 0.0;
  double penalized_fitness = 0.0;  // raw_mse + parsimony * size
  std::size_t size = 0;
  int generation = 0;
};

/// Non-finite errors are reported as the largest finite double so reports
/// stay comparable.
FitnessReport fitness(const Expression& expr, const FitData& data, double parsimony, int generation = 0);
FitnessReport fitness(const Expression& expr, const RegressionDataset& dataset, double parsimony, int generation = 0);

/// Strict "better than" used by selection and by best tracking: lower
/// penalized fitness, then smaller size. Index order breaks remaining ties.
[[nodiscard]] bool better(const FitnessReport& a, const FitnessReport& b) noexcept;

struct GpConfig {
  std::size_t population_size = 5000;
  int generations = 40;
  double parsimony = 1e-4;
  std::size_t tournament_size = 20;
  double crossover_prob = 0.9;
  double mutation_prob = 0.05;
  int max_depth = 12;
  int init_depth_min = 2;
  int init_depth_max = 6;
  int mutation_depth = 4;  // depth bound of freshly grown mutation subtrees
  double point_mutation_prob = 0.1;
  double point_mutation_scale = 0.05;  // relative sd of the constant jitter
  double constant_min = -1.0;
  double constant_max = 1.0;
  std::uint64_t seed = 0;
  int independent_runs = 4;
  unsigned workers = 1;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

/// Random tree of exactly full depth (`full`) or grown with early terminals.
Expression random_tree(int depth, bool full, const GpConfig& config, RngStream& rng);

/// Ramped half-and-half over depths [init_depth_min, init_depth_max].
std::vector<Expression> initial_population(const GpConfig& config, RngStream& rng);

/// Index of the winner among a uniformly drawn k-subset (without replacement).
std::size_t tournament_select(std::span<const FitnessReport> reports, std::size_t k, RngStream& rng);

/// Swaps uniformly chosen subtrees; an offspring deeper than max_depth is
/// replaced by its own parent.
std::pair<Expression, Expression> crossover(const Expression& a, const Expression& b, int max_depth, RngStream& rng);

/// With probability mutation_prob replaces a uniformly chosen node by a freshly
/// grown subtree that keeps the tree within max_depth.
Expression mutate(const Expression& a, const GpConfig& config, RngStream& rng);

/// With probability point_mutation_prob alters one uniformly chosen node in
/// place: a function becomes another function, q and r swap, and a constant c
/// becomes c (1 + point_mutation_scale N(0, 1)). Size and shape are kept.
Expression point_mutate(const Expression& a, const GpConfig& config, RngStream& rng);

struct EvolutionResult {
  Expression best;
  FitnessReport best_report;
  std::vector<FitnessReport> history;  // best of generation 0..generations
  std::uint64_t seed = 0;
};

EvolutionResult evolve(const GpConfig& config, const RegressionDataset& dataset);

/// config.independent_runs rounds, round k seeded with mix_seed(config.seed, k).
std::vector<EvolutionResult> evolve_rounds(const GpConfig& config, const RegressionDataset& dataset);

/// Constant folding, identity elimination (x+0, x*1, x-0, x/1) and
/// flatten-and-sort of add/mul chains.
Expression simplify(const Expression& expr);

inline constexpr std::string_view kHistoryHeader = "generation,best_raw_mse,best_penalized,best_size";
void write_history(std::ostream& out, std::span<const FitnessReport> history);

/// x = q r / 4; x - x^2: the two-term form of the Oracle KL series.
Expression quarter_rq_second_order();

}  // namespace rmtkl::symreg
