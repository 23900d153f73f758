#include "rmtkl/symreg.hpp"

#include "rmtkl/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace rmtkl::symreg {

namespace {

constexpr std::array<Op, 4> kFunctions{Op::add, Op::sub, Op::mul, Op::div};
constexpr std::size_t kTerminalKinds = 3;  // q, r, constant

int arity(Op op) noexcept { return is_function(op) ? 2 : 0; }

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::add:
      return "add";
    case Op::sub:
      return "sub";
    case Op::mul:
      return "mul";
    case Op::div:
      return "div";
    case Op::var_q:
      return "q";
    case Op::var_r:
      return "r";
    case Op::constant:
      return "const";
  }
  return "?";
}

char infix_symbol(Op op) noexcept {
  switch (op) {
    case Op::add:
      return '+';
    case Op::sub:
      return '-';
    case Op::mul:
      return '*';
    default:
      return '/';
  }
}

double apply(Op op, double a, double b) noexcept {
  switch (op) {
    case Op::add:
      return a + b;
    case Op::sub:
      return a - b;
    case Op::mul:
      return a * b;
    default:
      return protected_div(a, b);
  }
}

std::string format_constant(double v) { return fmt::format("{}", v); }

double evaluate_at(std::span<const Node> nodes, std::size_t& pos, double q, double r) {
  const Node& node = nodes[pos++];
  switch (node.op) {
    case Op::var_q:
      return q;
    case Op::var_r:
      return r;
    case Op::constant:
      return node.value;
    default: {
      const double a = evaluate_at(nodes, pos, q, r);
      const double b = evaluate_at(nodes, pos, q, r);
      return apply(node.op, a, b);
    }
  }
}

void prefix_text(std::span<const Node> nodes, std::size_t& pos, std::string& out) {
  const Node& node = nodes[pos++];
  if (node.op == Op::constant) {
    out += format_constant(node.value);
    return;
  }
  if (!is_function(node.op)) {
    out += op_name(node.op);
    return;
  }
  out += '(';
  out += op_name(node.op);
  out += ' ';
  prefix_text(nodes, pos, out);
  out += ' ';
  prefix_text(nodes, pos, out);
  out += ')';
}

void infix_text(std::span<const Node> nodes, std::size_t& pos, std::string& out) {
  const Node& node = nodes[pos++];
  if (node.op == Op::constant) {
    out += format_constant(node.value);
    return;
  }
  if (!is_function(node.op)) {
    out += op_name(node.op);
    return;
  }
  out += '(';
  infix_text(nodes, pos, out);
  out += ' ';
  out += infix_symbol(node.op);
  out += ' ';
  infix_text(nodes, pos, out);
  out += ')';
}

// Recursive-descent parser for the prefix format.
class PrefixParser {
 public:
  explicit PrefixParser(std::string_view text) : text_(text) {}

  std::vector<Node> parse_all() {
    std::vector<Node> nodes;
    parse_into(nodes);
    skip_space();
    if (pos_ != text_.size()) {
      throw ParseError(fmt::format("trailing input at offset {} in '{}'", pos_, text_));
    }
    return nodes;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) {
      ++pos_;
    }
  }

  std::string_view token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '(' && text_[pos_] != ')' &&
           text_[pos_] != '\t' && text_[pos_] != '\n') {
      ++pos_;
    }
    if (start == pos_) {
      throw ParseError(fmt::format("expected a token at offset {} in '{}'", start, text_));
    }
    return text_.substr(start, pos_ - start);
  }

  void parse_into(std::vector<Node>& nodes) {
    skip_space();
    if (pos_ >= text_.size()) {
      throw ParseError(fmt::format("unexpected end of expression '{}'", text_));
    }
    if (text_[pos_] == '(') {
      ++pos_;
      const std::string_view name = token();
      Op op{};
      if (name == "add") {
        op = Op::add;
      } else if (name == "sub") {
        op = Op::sub;
      } else if (name == "mul") {
        op = Op::mul;
      } else if (name == "div") {
        op = Op::div;
      } else {
        throw ParseError(fmt::format("unknown operator '{}'", name));
      }
      nodes.push_back(Node{op, 0.0});
      parse_into(nodes);
      parse_into(nodes);
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') {
        throw ParseError(fmt::format("expected ')' at offset {} in '{}'", pos_, text_));
      }
      ++pos_;
      return;
    }
    const std::string_view tok = token();
    if (tok == "q") {
      nodes.push_back(Node{Op::var_q, 0.0});
      return;
    }
    if (tok == "r") {
      nodes.push_back(Node{Op::var_r, 0.0});
      return;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw ParseError(fmt::format("cannot parse leaf '{}'", tok));
    }
    nodes.push_back(Node{Op::constant, value});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Node random_terminal(const GpConfig& config, RngStream& rng) {
  switch (rng.below(kTerminalKinds)) {
    case 0:
      return Node{Op::var_q, 0.0};
    case 1:
      return Node{Op::var_r, 0.0};
    default:
      return Node{Op::constant, rng.uniform(config.constant_min, config.constant_max)};
  }
}

void grow_into(std::vector<Node>& out, int depth_left, bool full, const GpConfig& config, RngStream& rng) {
  bool choose_function = depth_left > 0;
  if (choose_function && !full) {
    // Grow: functions and terminal kinds are equally likely at every level.
    choose_function = rng.below(kFunctions.size() + kTerminalKinds) < kFunctions.size();
  }
  if (!choose_function) {
    out.push_back(random_terminal(config, rng));
    return;
  }
  out.push_back(Node{kFunctions[rng.below(kFunctions.size())], 0.0});
  grow_into(out, depth_left - 1, full, config, rng);
  grow_into(out, depth_left - 1, full, config, rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Expression

Expression::Expression(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
  std::size_t need = 1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (need == 0) {
      throw std::invalid_argument("prefix node list holds more than one tree");
    }
    need = need - 1 + static_cast<std::size_t>(arity(nodes_[i].op));
  }
  if (nodes_.empty() || need != 0) {
    throw std::invalid_argument("prefix node list is not a complete tree");
  }
}

Expression Expression::q() { return Expression(std::vector<Node>{Node{Op::var_q, 0.0}}); }
Expression Expression::r() { return Expression(std::vector<Node>{Node{Op::var_r, 0.0}}); }
Expression Expression::constant(double value) { return Expression(std::vector<Node>{Node{Op::constant, value}}); }

Expression Expression::binary(Op op, const Expression& lhs, const Expression& rhs) {
  if (!is_function(op)) {
    throw std::invalid_argument("binary() needs a function node");
  }
  std::vector<Node> nodes;
  nodes.reserve(1 + lhs.size() + rhs.size());
  nodes.push_back(Node{op, 0.0});
  nodes.insert(nodes.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  nodes.insert(nodes.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return Expression(std::move(nodes));
}

Expression Expression::parse(std::string_view text) { return Expression(PrefixParser(text).parse_all()); }

std::vector<int> Expression::node_depths() const {
  std::vector<int> depths(nodes_.size());
  std::vector<int> pending{0};
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int d = pending.back();
    pending.pop_back();
    depths[i] = d;
    if (is_function(nodes_[i].op)) {
      pending.push_back(d + 1);
      pending.push_back(d + 1);
    }
  }
  return depths;
}

int Expression::depth() const {
  const auto d = node_depths();
  return *std::max_element(d.begin(), d.end());
}

std::size_t Expression::subtree_end(std::size_t index) const {
  std::size_t need = 1;
  std::size_t j = index;
  while (need > 0) {
    need = need - 1 + static_cast<std::size_t>(arity(nodes_.at(j).op));
    ++j;
  }
  return j;
}

Expression Expression::subtree(std::size_t index) const {
  const std::size_t end = subtree_end(index);
  return Expression(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(index),
                                      nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

Expression Expression::replace_subtree(std::size_t index, const Expression& replacement) const {
  const std::size_t end = subtree_end(index);
  std::vector<Node> nodes;
  nodes.reserve(nodes_.size() - (end - index) + replacement.size());
  nodes.insert(nodes.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(index));
  nodes.insert(nodes.end(), replacement.nodes_.begin(), replacement.nodes_.end());
  nodes.insert(nodes.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
  return Expression(std::move(nodes));
}

std::string Expression::to_prefix() const {
  std::string out;
  std::size_t pos = 0;
  prefix_text(nodes_, pos, out);
  return out;
}

std::string Expression::to_infix() const {
  std::string out;
  std::size_t pos = 0;
  infix_text(nodes_, pos, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation and fitness

double evaluate(const Expression& expr, double q, double r) {
  std::size_t pos = 0;
  return evaluate_at(expr.nodes(), pos, q, r);
}

FitData FitData::from_dataset(const RegressionDataset& dataset) {
  FitData data;
  data.q.reserve(dataset.size());
  data.r.reserve(dataset.size());
  data.target.reserve(dataset.size());
  for (const auto& row : dataset.rows) {
    data.q.push_back(row.q);
    data.r.push_back(row.r_finite);
    data.target.push_back(row.target_kl_norm);
  }
  return data;
}

void evaluate_batch(const Expression& expr, const FitData& data, std::span<double> out) {
  const std::size_t rows = data.rows();
  const auto nodes = expr.nodes();
  // Reverse-prefix evaluation keeps at most depth + 1 live operands.
  thread_local std::vector<double> scratch;
  const std::size_t slots = static_cast<std::size_t>(expr.depth()) + 2;
  scratch.resize(slots * rows);
  std::size_t top = 0;
  for (std::size_t k = nodes.size(); k-- > 0;) {
    const Node& node = nodes[k];
    if (!is_function(node.op)) {
      double* dst = scratch.data() + top * rows;
      if (node.op == Op::var_q) {
        std::copy(data.q.begin(), data.q.end(), dst);
      } else if (node.op == Op::var_r) {
        std::copy(data.r.begin(), data.r.end(), dst);
      } else {
        std::fill(dst, dst + rows, node.value);
      }
      ++top;
      continue;
    }
    assert(top >= 2);
    const double* lhs = scratch.data() + (top - 1) * rows;
    double* rhs = scratch.data() + (top - 2) * rows;
    switch (node.op) {
      case Op::add:
        for (std::size_t i = 0; i < rows; ++i) rhs[i] = lhs[i] + rhs[i];
        break;
      case Op::sub:
        for (std::size_t i = 0; i < rows; ++i) rhs[i] = lhs[i] - rhs[i];
        break;
      case Op::mul:
        for (std::size_t i = 0; i < rows; ++i) rhs[i] = lhs[i] * rhs[i];
        break;
      default:
        for (std::size_t i = 0; i < rows; ++i) rhs[i] = protected_div(lhs[i], rhs[i]);
        break;
    }
    --top;
  }
  std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(rows), out.begin());
}

FitnessReport fitness(const Expression& expr, const FitData& data, double parsimony, int generation) {
  if (data.rows() == 0) {
    throw std::invalid_argument("fitness: empty dataset");
  }
  thread_local std::vector<double> predictions;
  predictions.resize(data.rows());
  evaluate_batch(expr, data, predictions);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double d = predictions[i] - data.target[i];
    sum += d * d;
  }
  double mse = sum / static_cast<double>(data.rows());
  if (!std::isfinite(mse)) {
    mse = std::numeric_limits<double>::max();
  }
  FitnessReport report;
  report.raw_mse = mse;
  report.size = expr.size();
  report.penalized_fitness = mse + parsimony * static_cast<double>(expr.size());
  if (!std::isfinite(report.penalized_fitness)) {
    report.penalized_fitness = std::numeric_limits<double>::max();
  }
  report.generation = generation;
  return report;
}

FitnessReport fitness(const Expression& expr, const RegressionDataset& dataset, double parsimony, int generation) {
  return fitness(expr, FitData::from_dataset(dataset), parsimony, generation);
}

bool better(const FitnessReport& a, const FitnessReport& b) noexcept {
  if (a.penalized_fitness != b.penalized_fitness) {
    return a.penalized_fitness < b.penalized_fitness;
  }
  return a.size < b.size;
}

// ---------------------------------------------------------------------------
// Variation operators

void GpConfig::validate() const {
  if (tournament_size < 1) {
    throw std::invalid_argument("tournament_size must be >= 1");
  }
  if (population_size < 2 * tournament_size) {
    throw std::invalid_argument(
        fmt::format("population_size {} must be >= 2 * tournament_size {}", population_size, tournament_size));
  }
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0) || !(mutation_prob >= 0.0 && mutation_prob <= 1.0) ||
      !(point_mutation_prob >= 0.0 && point_mutation_prob <= 1.0)) {
    throw std::invalid_argument("crossover_prob, mutation_prob and point_mutation_prob must lie in [0, 1]");
  }
  if (!(point_mutation_scale >= 0.0)) {
    throw std::invalid_argument("point_mutation_scale must be >= 0");
  }
  if (!(parsimony >= 0.0)) {
    throw std::invalid_argument("parsimony must be >= 0");
  }
  if (generations < 0) {
    throw std::invalid_argument("generations must be >= 0");
  }
  if (init_depth_min < 0 || init_depth_max < init_depth_min || max_depth < init_depth_max) {
    throw std::invalid_argument(fmt::format("need 0 <= init_depth_min <= init_depth_max <= max_depth, got {}, {}, {}",
                                            init_depth_min, init_depth_max, max_depth));
  }
  if (mutation_depth < 0) {
    throw std::invalid_argument("mutation_depth must be >= 0");
  }
  if (!(constant_min <= constant_max)) {
    throw std::invalid_argument("constant range is empty");
  }
  if (independent_runs < 1) {
    throw std::invalid_argument("independent_runs must be >= 1");
  }
}

Expression random_tree(int depth, bool full, const GpConfig& config, RngStream& rng) {
  std::vector<Node> nodes;
  grow_into(nodes, depth, full, config, rng);
  return Expression(std::move(nodes));
}

std::vector<Expression> initial_population(const GpConfig& config, RngStream& rng) {
  std::vector<Expression> population;
  population.reserve(config.population_size);
  const int ramps = config.init_depth_max - config.init_depth_min + 1;
  for (std::size_t i = 0; i < config.population_size; ++i) {
    const int depth = config.init_depth_min + static_cast<int>(i % static_cast<std::size_t>(ramps));
    const bool full = ((i / static_cast<std::size_t>(ramps)) % 2) == 0;
    population.push_back(random_tree(depth, full, config, rng));
  }
  return population;
}

std::size_t tournament_select(std::span<const FitnessReport> reports, std::size_t k, RngStream& rng) {
  const std::size_t n = reports.size();
  if (n == 0 || k < 1 || k > n) {
    throw std::invalid_argument(fmt::format("tournament of size {} over population {}", k, n));
  }
  // Floyd's algorithm: a uniform k-subset of [0, n).
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (std::size_t j = n - k; j < n; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(j + 1));
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
      chosen.push_back(t);
    } else {
      chosen.push_back(j);
    }
  }
  std::size_t winner = chosen.front();
  for (std::size_t idx : chosen) {
    if (better(reports[idx], reports[winner]) ||
        (!better(reports[winner], reports[idx]) && idx < winner)) {
      winner = idx;
    }
  }
  return winner;
}

std::pair<Expression, Expression> crossover(const Expression& a, const Expression& b, int max_depth, RngStream& rng) {
  const auto ia = static_cast<std::size_t>(rng.below(a.size()));
  const auto ib = static_cast<std::size_t>(rng.below(b.size()));
  Expression child_a = a.replace_subtree(ia, b.subtree(ib));
  Expression child_b = b.replace_subtree(ib, a.subtree(ia));
  if (child_a.depth() > max_depth) {
    child_a = a;
  }
  if (child_b.depth() > max_depth) {
    child_b = b;
  }
  return {std::move(child_a), std::move(child_b)};
}

Expression mutate(const Expression& a, const GpConfig& config, RngStream& rng) {
  if (!(rng.uniform(0.0, 1.0) < config.mutation_prob)) {
    return a;
  }
  const auto index = static_cast<std::size_t>(rng.below(a.size()));
  const int at_depth = a.node_depths()[index];
  const int budget = std::max(0, std::min(config.mutation_depth, config.max_depth - at_depth));
  return a.replace_subtree(index, random_tree(budget, false, config, rng));
}

Expression point_mutate(const Expression& a, const GpConfig& config, RngStream& rng) {
  if (!(rng.uniform(0.0, 1.0) < config.point_mutation_prob)) {
    return a;
  }
  std::vector<Node> nodes(a.nodes().begin(), a.nodes().end());
  Node& node = nodes[static_cast<std::size_t>(rng.below(nodes.size()))];
  switch (node.op) {
    case Op::var_q:
      node.op = Op::var_r;
      break;
    case Op::var_r:
      node.op = Op::var_q;
      break;
    case Op::constant:
      node.value *= 1.0 + config.point_mutation_scale * rng.normal();
      break;
    default: {
      const auto pick = static_cast<std::size_t>(rng.below(kFunctions.size() - 1));
      const auto current = static_cast<std::size_t>(node.op);
      node.op = kFunctions[pick < current ? pick : pick + 1];
      break;
    }
  }
  return Expression(std::move(nodes));
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

std::vector<FitnessReport> evaluate_population(const std::vector<Expression>& population, const FitData& data,
                                               const GpConfig& config, int generation) {
  std::vector<FitnessReport> reports(population.size());
  parallel_for(population.size(), config.workers, [&](std::size_t i) {
    reports[i] = fitness(population[i], data, config.parsimony, generation);
  });
  return reports;
}

std::size_t best_index(std::span<const FitnessReport> reports) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (better(reports[i], reports[best])) {
      best = i;
    }
  }
  return best;
}

}  // namespace

EvolutionResult evolve(const GpConfig& config, const RegressionDataset& dataset) {
  config.validate();
  if (dataset.empty()) {
    throw std::invalid_argument("evolve: empty dataset");
  }
  const FitData data = FitData::from_dataset(dataset);
  RngStream rng(config.seed, 0x6e0);

  std::vector<Expression> population = initial_population(config, rng);
  std::vector<FitnessReport> reports = evaluate_population(population, data, config, 0);

  EvolutionResult result;
  result.seed = config.seed;
  std::size_t best = best_index(reports);
  result.history.push_back(reports[best]);

  for (int gen = 1; gen <= config.generations; ++gen) {
    std::vector<Expression> next;
    next.reserve(config.population_size);
    next.push_back(population[best]);
    while (next.size() < config.population_size) {
      const std::size_t ia = tournament_select(reports, config.tournament_size, rng);
      if (rng.uniform(0.0, 1.0) < config.crossover_prob) {
        const std::size_t ib = tournament_select(reports, config.tournament_size, rng);
        auto [c1, c2] = crossover(population[ia], population[ib], config.max_depth, rng);
        next.push_back(point_mutate(mutate(c1, config, rng), config, rng));
        if (next.size() < config.population_size) {
          next.push_back(point_mutate(mutate(c2, config, rng), config, rng));
        }
      } else {
        next.push_back(point_mutate(mutate(population[ia], config, rng), config, rng));
      }
    }
    population = std::move(next);
    reports = evaluate_population(population, data, config, gen);
    best = best_index(reports);
    result.history.push_back(reports[best]);
  }
  result.best = population[best];
  result.best_report = reports[best];
  return result;
}

std::vector<EvolutionResult> evolve_rounds(const GpConfig& config, const RegressionDataset& dataset) {
  config.validate();
  std::vector<EvolutionResult> rounds;
  rounds.reserve(static_cast<std::size_t>(config.independent_runs));
  for (int k = 0; k < config.independent_runs; ++k) {
    GpConfig round = config;
    round.seed = mix_seed(config.seed, static_cast<std::uint64_t>(k));
    rounds.push_back(evolve(round, dataset));
  }
  return rounds;
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

bool is_constant(const Expression& e, double value) {
  return e.size() == 1 && e.root().op == Op::constant && e.root().value == value;
}

bool is_any_constant(const Expression& e) { return e.size() == 1 && e.root().op == Op::constant; }

void collect_chain(const Expression& e, Op op, std::vector<Expression>& operands) {
  if (e.root().op == op) {
    const std::size_t lhs_end = e.subtree_end(1);
    collect_chain(e.subtree(1), op, operands);
    collect_chain(e.subtree(lhs_end), op, operands);
    return;
  }
  operands.push_back(e);
}

Expression simplify_once(const Expression& e) {
  if (!is_function(e.root().op)) {
    return e;
  }
  const Op op = e.root().op;
  const std::size_t lhs_end = e.subtree_end(1);
  const Expression lhs = simplify_once(e.subtree(1));
  const Expression rhs = simplify_once(e.subtree(lhs_end));

  if (is_any_constant(lhs) && is_any_constant(rhs)) {
    return Expression::constant(apply(op, lhs.root().value, rhs.root().value));
  }
  switch (op) {
    case Op::sub:
      if (is_constant(rhs, 0.0)) return lhs;
      return Expression::binary(op, lhs, rhs);
    case Op::div:
      if (is_constant(rhs, 1.0)) return lhs;
      return Expression::binary(op, lhs, rhs);
    default:
      break;
  }

  // add / mul: flatten, fold constants, drop the identity, sort the rest.
  std::vector<Expression> operands;
  collect_chain(lhs, op, operands);
  collect_chain(rhs, op, operands);
  const double identity = op == Op::add ? 0.0 : 1.0;
  double folded = identity;
  bool have_constant = false;
  std::vector<std::pair<std::string, Expression>> terms;
  for (auto& operand : operands) {
    if (is_any_constant(operand)) {
      folded = apply(op, folded, operand.root().value);
      have_constant = true;
    } else {
      terms.emplace_back(operand.to_prefix(), std::move(operand));
    }
  }
  std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (terms.empty()) {
    return Expression::constant(folded);
  }
  Expression out = terms.front().second;
  for (std::size_t i = 1; i < terms.size(); ++i) {
    out = Expression::binary(op, out, terms[i].second);
  }
  if (have_constant && folded != identity) {
    out = Expression::binary(op, Expression::constant(folded), out);
  }
  return out;
}

}  // namespace

Expression simplify(const Expression& expr) {
  Expression current = expr;
  for (int pass = 0; pass < 16; ++pass) {
    Expression next = simplify_once(current);
    if (next == current) {
      break;
    }
    current = std::move(next);
  }
  return current;
}

void write_history(std::ostream& out, std::span<const FitnessReport> history) {
  out << kHistoryHeader << '\n';
  for (const auto& h : history) {
    out << fmt::format("{},{:.17g},{:.17g},{}\n", h.generation, h.raw_mse, h.penalized_fitness, h.size);
  }
}

Expression quarter_rq_second_order() {
  return Expression::parse("(sub (mul 0.25 (mul q r)) (mul (mul 0.25 (mul q r)) (mul 0.25 (mul q r))))");
}

}  // namespace rmtkl::symreg
