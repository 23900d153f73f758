#include <doctest.h>

#include "rmtkl/symreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace rmtkl;
using namespace rmtkl::symreg;

namespace {

Expression mul(const Expression& a, const Expression& b) { return Expression::binary(Op::mul, a, b); }
Expression add(const Expression& a, const Expression& b) { return Expression::binary(Op::add, a, b); }
Expression sub(const Expression& a, const Expression& b) { return Expression::binary(Op::sub, a, b); }
Expression div(const Expression& a, const Expression& b) { return Expression::binary(Op::div, a, b); }
Expression c(double v) { return Expression::constant(v); }

RegressionDataset dataset_from(const std::function<double(double, double)>& f, std::size_t rows, std::uint64_t seed,
                               double q_max = 4.0) {
  CellSampling s;
  s.cells = rows;
  s.q_min = 0.01;
  s.q_max = q_max;
  s.qstar_min = 0.01;
  s.qstar_max = 0.99;
  s.seed = seed;
  return synthetic_dataset(s, 1000, f);
}

GpConfig small_config(std::uint64_t seed) {
  GpConfig cfg;
  cfg.population_size = 300;
  cfg.generations = 8;
  cfg.tournament_size = 7;
  cfg.seed = seed;
  return cfg;
}

std::vector<FitnessReport> reports_with(std::vector<double> penalized, std::vector<std::size_t> sizes) {
  std::vector<FitnessReport> out;
  for (std::size_t i = 0; i < penalized.size(); ++i) {
    FitnessReport r;
    r.penalized_fitness = penalized[i];
    r.raw_mse = penalized[i];
    r.size = sizes[i];
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("evaluate examples") {
  CHECK(evaluate(mul(Expression::q(), Expression::r()), 0.5, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(evaluate(div(Expression::q(), c(0.0)), 0.7, 0.2) == 1.0);
  CHECK(evaluate(sub(Expression::r(), c(0.25)), 0.0, 1.0) == 0.75);
  CHECK(evaluate(quarter_rq_second_order(), 1.0, 0.5) == doctest::Approx(0.109375).epsilon(1e-15));
  CHECK(protected_div(2.0, 1e-13) == 1.0);
  CHECK(protected_div(2.0, 4.0) == 0.5);
}

TEST_CASE("tree structure") {
  const Expression e = mul(add(Expression::q(), c(1.0)), Expression::r());
  CHECK(e.size() == 5);
  CHECK(e.depth() == 2);
  CHECK(Expression::q().depth() == 0);
  CHECK(e.subtree_end(1) == 4);
  CHECK(e.subtree(1) == add(Expression::q(), c(1.0)));
  CHECK(e.node_depths() == std::vector<int>{0, 1, 2, 2, 1});
  const Expression swapped = e.replace_subtree(4, Expression::q());
  CHECK(evaluate(swapped, 2.0, 9.0) == 6.0);
  CHECK_THROWS_AS(Expression(std::vector<Node>{Node{Op::add, 0.0}, Node{Op::var_q, 0.0}}), std::invalid_argument);
}

TEST_CASE("prefix round trip and parse errors") {
  const Expression e = sub(mul(c(0.25), mul(Expression::q(), Expression::r())), div(Expression::r(), c(-0.1)));
  CHECK(Expression::parse(e.to_prefix()) == e);
  CHECK(Expression::parse(quarter_rq_second_order().to_prefix()) == quarter_rq_second_order());
  CHECK(Expression::parse("(add q 0.5)") == add(Expression::q(), c(0.5)));
  CHECK_THROWS_AS(Expression::parse("(add q)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(pow q r)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(add q r) r"), ParseError);
  CHECK_FALSE(e.to_infix().empty());

  RngStream rng(5, 0);
  GpConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const Expression t = random_tree(5, i % 2 == 0, cfg, rng);
    CHECK(Expression::parse(t.to_prefix()) == t);
  }
}

TEST_CASE("fitness") {
  const auto data = dataset_from([](double q, double r) { return q * r; }, 50, 3);
  const FitData fit = FitData::from_dataset(data);
  const auto exact = fitness(mul(Expression::q(), Expression::r()), data, 1e-4);
  CHECK(exact.raw_mse == 0.0);
  CHECK(exact.size == 3);
  CHECK(exact.penalized_fitness == doctest::Approx(3e-4).epsilon(1e-12));

  double sse = 0.0;
  for (std::size_t i = 0; i < fit.rows(); ++i) {
    const double d = fit.q[i] - fit.target[i];
    sse += d * d;
  }
  const auto just_q = fitness(Expression::q(), fit, 0.0);
  CHECK(just_q.raw_mse == doctest::Approx(sse / static_cast<double>(fit.rows())).epsilon(1e-12));

  const auto blowup = fitness(div(c(1e300), c(1e-300)), fit, 0.0);
  CHECK(std::isfinite(blowup.raw_mse));
}

TEST_CASE("better orders by penalized fitness then size") {
  auto r = reports_with({1.0, 1.0, 0.5}, {5, 3, 9});
  CHECK(better(r[2], r[0]));
  CHECK(better(r[1], r[0]));
  CHECK_FALSE(better(r[0], r[1]));
  CHECK_FALSE(better(r[0], r[0]));
}

TEST_CASE("tournament selection") {
  const auto reports = reports_with({0.5, 0.2, 0.9, 0.2, 0.3, 0.8}, {3, 5, 1, 5, 1, 7});
  RngStream rng(1, 0);
  // k = N sees everyone: lowest penalized, tie on size, earliest index.
  for (int i = 0; i < 10; ++i) {
    CHECK(tournament_select(reports, reports.size(), rng) == 1);
  }
  std::vector<int> hits(reports.size(), 0);
  for (int i = 0; i < 6000; ++i) {
    ++hits[tournament_select(reports, 1, rng)];
  }
  for (int h : hits) {
    CHECK(h > 800);
    CHECK(h < 1200);
  }
  CHECK_THROWS_AS(tournament_select(reports, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(tournament_select(reports, 7, rng), std::invalid_argument);

  RngStream a(9, 2);
  RngStream b(9, 2);
  for (int i = 0; i < 50; ++i) {
    CHECK(tournament_select(reports, 3, a) == tournament_select(reports, 3, b));
  }
}

TEST_CASE("crossover") {
  RngStream rng(2, 0);
  const auto [x, y] = crossover(Expression::q(), Expression::r(), 12, rng);
  CHECK(x == Expression::r());
  CHECK(y == Expression::q());

  GpConfig cfg;
  for (int i = 0; i < 300; ++i) {
    const Expression a = random_tree(4, false, cfg, rng);
    const Expression b = random_tree(4, true, cfg, rng);
    const auto [ca, cb] = crossover(a, b, 12, rng);
    CHECK(ca.size() + cb.size() == a.size() + b.size());
  }

  // Depth guard: anything deeper than the limit falls back to the parent.
  for (int i = 0; i < 300; ++i) {
    const Expression a = random_tree(3, true, cfg, rng);
    const Expression b = random_tree(3, true, cfg, rng);
    const auto [ca, cb] = crossover(a, b, 3, rng);
    CHECK(ca.depth() <= 3);
    CHECK(cb.depth() <= 3);
  }
}

TEST_CASE("subtree and point mutation") {
  GpConfig cfg;
  RngStream rng(3, 0);
  const Expression e = quarter_rq_second_order();

  cfg.mutation_prob = 0.0;
  cfg.point_mutation_prob = 0.0;
  for (int i = 0; i < 50; ++i) {
    CHECK(mutate(e, cfg, rng) == e);
    CHECK(point_mutate(e, cfg, rng) == e);
  }

  cfg.mutation_prob = 1.0;
  cfg.max_depth = 6;
  int changed = 0;
  for (int i = 0; i < 200; ++i) {
    const Expression m = mutate(e, cfg, rng);
    CHECK(m.depth() <= 6);
    changed += m == e ? 0 : 1;
  }
  CHECK(changed > 150);
  CHECK(mutate(Expression::q(), cfg, rng).depth() <= cfg.mutation_depth);

  cfg.point_mutation_prob = 1.0;
  for (int i = 0; i < 200; ++i) {
    const Expression m = point_mutate(e, cfg, rng);
    REQUIRE(m.size() == e.size());
    CHECK(m.node_depths() == e.node_depths());
    int diffs = 0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      const Node& before = e.nodes()[k];
      const Node& after = m.nodes()[k];
      if (before == after) {
        continue;
      }
      ++diffs;
      CHECK(is_function(before.op) == is_function(after.op));
    }
    CHECK(diffs <= 1);
  }

  GpConfig d = cfg;
  RngStream r1(44, 1);
  RngStream r2(44, 1);
  for (int i = 0; i < 20; ++i) {
    CHECK(mutate(e, d, r1) == mutate(e, d, r2));
    CHECK(point_mutate(e, d, r1) == point_mutate(e, d, r2));
  }
}

TEST_CASE("initialization") {
  GpConfig cfg;
  RngStream rng(4, 0);
  for (int depth = 0; depth <= 6; ++depth) {
    CHECK(random_tree(depth, true, cfg, rng).depth() == depth);
    CHECK(random_tree(depth, false, cfg, rng).depth() <= depth);
  }
  for (int i = 0; i < 500; ++i) {
    for (const Node& n : random_tree(3, false, cfg, rng).nodes()) {
      if (n.op == Op::constant) {
        CHECK(n.value >= cfg.constant_min);
        CHECK(n.value <= cfg.constant_max);
      }
    }
  }

  cfg.population_size = 1000;
  const auto pop = initial_population(cfg, rng);
  REQUIRE(pop.size() == 1000);
  int deepest = 0;
  for (const auto& e : pop) {
    CHECK(e.depth() <= cfg.init_depth_max);
    deepest = std::max(deepest, e.depth());
  }
  CHECK(deepest == cfg.init_depth_max);
}

TEST_CASE("config validation") {
  GpConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  GpConfig bad = cfg;
  bad.population_size = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.crossover_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.parsimony = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.point_mutation_prob = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(evolve(cfg, RegressionDataset{}), std::invalid_argument);
}

TEST_CASE("generations = 0 returns the best initial individual") {
  const auto data = dataset_from([](double q, double r) { return q * r; }, 80, 5);
  GpConfig cfg = small_config(17);
  cfg.generations = 0;
  const auto result = evolve(cfg, data);
  REQUIRE(result.history.size() == 1);

  RngStream rng(cfg.seed, 0x6e0);
  const auto pop = initial_population(cfg, rng);
  FitnessReport best = fitness(pop.front(), data, cfg.parsimony);
  for (const auto& e : pop) {
    const auto r = fitness(e, data, cfg.parsimony);
    if (better(r, best)) {
      best = r;
    }
  }
  CHECK(result.best_report.penalized_fitness == best.penalized_fitness);
  CHECK(result.best_report.size == best.size);
}

TEST_CASE("evolution: elitism, depth bound and determinism") {
  const auto data = dataset_from(
      [](double q, double r) {
        const double x = q * r / 4.0;
        return x - x * x;
      },
      120, 6);
  GpConfig cfg = small_config(23);
  cfg.generations = 12;
  cfg.max_depth = 7;
  const auto a = evolve(cfg, data);
  REQUIRE(a.history.size() == 13);
  for (std::size_t g = 1; g < a.history.size(); ++g) {
    CHECK(a.history[g].penalized_fitness <= a.history[g - 1].penalized_fitness);
  }
  CHECK(a.best.depth() <= 7);
  CHECK(a.best_report.penalized_fitness == a.history.back().penalized_fitness);

  const auto b = evolve(cfg, data);
  CHECK(a.best == b.best);
  CHECK(a.best_report.penalized_fitness == b.best_report.penalized_fitness);

  cfg.independent_runs = 3;
  const auto rounds = evolve_rounds(cfg, data);
  REQUIRE(rounds.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(rounds[static_cast<std::size_t>(k)].seed == mix_seed(cfg.seed, static_cast<std::uint64_t>(k)));
  }

  std::ostringstream out;
  write_history(out, a.history);
  const std::string text = out.str();
  CHECK(text.rfind(std::string(kHistoryHeader), 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 14);
}

TEST_CASE("recovers q r") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto train = dataset_from([](double q, double r) { return q * r; }, 200, 100 + seed);
    GpConfig cfg;
    cfg.population_size = 2000;
    cfg.generations = 30;
    cfg.seed = seed;
    const auto result = evolve(cfg, train);
    hits += result.best_report.raw_mse <= 1e-6 ? 1 : 0;
  }
  CHECK(hits >= 3);
}

TEST_CASE("simplify examples") {
  const Expression q = Expression::q();
  const Expression r = Expression::r();
  CHECK(simplify(add(q, c(0.0))) == q);
  CHECK(simplify(mul(c(1.0), r)) == r);
  CHECK(simplify(sub(q, c(0.0))) == q);
  CHECK(simplify(div(r, c(1.0))) == r);
  CHECK(simplify(add(c(1.0), c(2.0))) == c(3.0));
  CHECK(simplify(mul(add(c(0.5), c(0.5)), q)) == q);
  CHECK(simplify(add(r, q)) == simplify(add(q, r)));
  CHECK(simplify(mul(mul(r, q), c(2.0))) == simplify(mul(c(2.0), mul(q, r))));
}

TEST_CASE("simplify preserves values on a probe grid") {
  GpConfig cfg;
  RngStream rng(8, 0);
  std::vector<std::pair<double, double>> probe;
  for (int i = 0; i < 1000; ++i) {
    probe.emplace_back(0.05 + 0.007 * (i % 32), 0.02 + 0.03 * (i / 32));
  }
  for (int t = 0; t < 300; ++t) {
    const Expression e = random_tree(5, t % 2 == 0, cfg, rng);
    const Expression s = simplify(e);
    CHECK(s.size() <= e.size());
    double worst = 0.0;
    for (const auto& [qv, rv] : probe) {
      const double a = evaluate(e, qv, rv);
      const double b = evaluate(s, qv, rv);
      if (std::isfinite(a) && std::abs(a) < 1e8) {
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
      }
    }
    CHECK(worst <= 1e-10);
  }
}
