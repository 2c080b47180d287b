#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "ncrelay/model.hpp"
#include "ncrelay/solver.hpp"
#include "ncrelay/structure.hpp"

using namespace ncrelay;
using ncrelay::testing::desk_params;
using ncrelay::testing::fig4_model;
using ncrelay::testing::fig4_solution;
using ncrelay::testing::tiny_params;

namespace {

// Test-local exact policy evaluation: dense Gaussian elimination with
// partial pivoting, independent of the production solver.
std::vector<double> oracle_policy_value(const Model& model,
                                        const std::vector<uint8_t>& actions) {
  const int n = model.space().size();
  std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> b(n, 0.0);
  for (int i = 0; i < n; ++i) {
    a[static_cast<size_t>(i) * n + i] = 1.0;
    b[i] = model.cost(i, actions[i]);
    for (const Transition& t : model.kernel().row(i, actions[i]))
      a[static_cast<size_t>(i) * n + t.next] -= model.params().beta * t.prob;
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[static_cast<size_t>(row) * n + col]) >
          std::abs(a[static_cast<size_t>(pivot) * n + col]))
        pivot = row;
    for (int k = 0; k < n; ++k)
      std::swap(a[static_cast<size_t>(col) * n + k], a[static_cast<size_t>(pivot) * n + k]);
    std::swap(b[col], b[pivot]);
    const double diag = a[static_cast<size_t>(col) * n + col];
    for (int row = col + 1; row < n; ++row) {
      const double factor = a[static_cast<size_t>(row) * n + col] / diag;
      if (factor == 0.0) continue;
      for (int k = col; k < n; ++k)
        a[static_cast<size_t>(row) * n + k] -= factor * a[static_cast<size_t>(col) * n + k];
      b[row] -= factor * b[col];
    }
  }
  std::vector<double> value(n, 0.0);
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[row];
    for (int k = row + 1; k < n; ++k) acc -= a[static_cast<size_t>(row) * n + k] * value[k];
    value[row] = acc / a[static_cast<size_t>(row) * n + row];
  }
  return value;
}

}  // namespace

TEST_CASE("myopic limit: zero discount converges in one sweep to argmin of C") {
  ModelParams p = tiny_params(2, /*beta=*/0.0);
  const Model m = Model::build(p);
  const SolveResult solve = value_iteration(m);
  CHECK(solve.iterations == 1);
  const std::vector<double> costs = cost_table(m);
  for (int xi = 0; xi < m.space().size(); ++xi) {
    int best = 0;
    for (int ai = 1; ai < kNumActions; ++ai)
      if (costs[static_cast<size_t>(xi) * 4 + ai] <
          costs[static_cast<size_t>(xi) * 4 + best] - kTieTolerance)
        best = ai;
    CHECK(solve.policy.action[xi] == best);
    CHECK(solve.value[xi] ==
          doctest::Approx(costs[static_cast<size_t>(xi) * 4 + best]).epsilon(1e-15));
  }
}

TEST_CASE("exhaustive policy enumeration matches value iteration on the 9-state model") {
  const Model m = Model::build(tiny_params(1, 0.9));
  REQUIRE(m.space().size() == 9);
  SolveOptions options;
  options.tolerance = 1e-10;
  const SolveResult solve = value_iteration(m, options);

  std::vector<double> best(9, 1e100);
  std::vector<uint8_t> actions(9, 0);
  for (long code = 0; code < 262144; ++code) {
    long rest = code;
    for (int i = 0; i < 9; ++i) {
      actions[i] = static_cast<uint8_t>(rest & 3);
      rest >>= 2;
    }
    const std::vector<double> value = oracle_policy_value(m, actions);
    for (int i = 0; i < 9; ++i) best[i] = std::min(best[i], value[i]);
  }
  const std::vector<double> vi_value = oracle_policy_value(m, solve.policy.action);
  for (int i = 0; i < 9; ++i) {
    CHECK(vi_value[i] >= best[i] - 1e-12);  // nothing beats the enumerated optimum
    CHECK(vi_value[i] - best[i] <= 1e-8);
  }
}

TEST_CASE("contraction and greedy consistency") {
  const SolveResult& solve = fig4_solution();
  const double beta = fig4_model().params().beta;
  SUBCASE("sup-norm residuals shrink geometrically") {
    for (size_t n = 1; n < solve.residuals.size(); ++n) {
      CHECK(solve.residuals[n] <= solve.residuals[n - 1] + 1e-12);
      CHECK(solve.residuals[n] <=
            std::pow(beta, static_cast<double>(n)) * solve.residuals[0] + 1e-12);
    }
  }
  SUBCASE("value equals the exact minimum of the final Q row") {
    for (int xi = 0; xi < fig4_model().space().size(); ++xi) {
      double minimum = solve.q[static_cast<size_t>(xi) * 4];
      for (int ai = 1; ai < kNumActions; ++ai)
        minimum = std::min(minimum, solve.q[static_cast<size_t>(xi) * 4 + ai]);
      CHECK(solve.value[xi] == minimum);
      CHECK(solve.q[static_cast<size_t>(xi) * 4 + solve.policy.action[xi]] <=
            minimum + kTieTolerance);
    }
  }
  SUBCASE("Q dominates the immediate cost") {
    const std::vector<double> costs = cost_table(fig4_model());
    for (size_t i = 0; i < costs.size(); ++i) CHECK(solve.q[i] >= costs[i] - 1e-12);
  }
  SUBCASE("values are finite and nonnegative") {
    for (double v : solve.value) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("exact policy evaluation") {
  SUBCASE("zero discount reproduces the one-shot cost") {
    const Model m = Model::build(tiny_params(2, 0.0));
    const SolveResult solve = value_iteration(m);
    const std::vector<double> value = policy_evaluation_exact(m, solve.policy);
    for (int xi = 0; xi < m.space().size(); ++xi)
      CHECK(value[xi] == doctest::Approx(m.cost(xi, solve.policy.action[xi])).epsilon(1e-14));
  }
  SUBCASE("agrees with the independent elimination oracle") {
    const Model m = Model::build(tiny_params(2, 0.9));
    const SolveResult solve = value_iteration(m);
    const std::vector<double> value = policy_evaluation_exact(m, solve.policy);
    const std::vector<double> oracle = oracle_policy_value(m, solve.policy.action);
    for (int xi = 0; xi < m.space().size(); ++xi)
      CHECK(value[xi] == doctest::Approx(oracle[xi]).epsilon(1e-11));
  }
  SUBCASE("consistent with value iteration within the stopping-rule bound") {
    const SolveResult& solve = fig4_solution();
    const std::vector<double> exact = policy_evaluation_exact(fig4_model(), solve.policy);
    const double beta = fig4_model().params().beta;
    const double bound = 1e-8 * (1.0 + beta) / (1.0 - beta);
    for (int xi = 0; xi < fig4_model().space().size(); ++xi)
      CHECK(std::abs(exact[xi] - solve.value[xi]) <= bound);
  }
}

TEST_CASE("optimal value is nondecreasing in queue states under the cost condition") {
  const Model& m = fig4_model();
  const SolveResult& solve = fig4_solution();
  for (int xi = 0; xi < m.space().size(); ++xi) {
    const State s = m.space().state(xi);
    if (s.b1 + 1 < m.space().queue_levels(1))
      CHECK(solve.value[m.space().index({s.b1 + 1, s.b2, s.g1, s.g2})] >=
            solve.value[xi] - 1e-9);
    if (s.b2 + 1 < m.space().queue_levels(2))
      CHECK(solve.value[m.space().index({s.b1, s.b2 + 1, s.g1, s.g2})] >=
            solve.value[xi] - 1e-9);
  }
}

TEST_CASE("monotone value iteration") {
  SUBCASE("matches plain value iteration with fewer evaluations") {
    const MonotoneSolveResult monotone = monotone_value_iteration(fig4_model());
    const SolveResult& plain = fig4_solution();
    REQUIRE(monotone.policy.action.size() == plain.policy.action.size());
    for (size_t i = 0; i < plain.policy.action.size(); ++i)
      CHECK(monotone.policy.action[i] == plain.policy.action[i]);
    CHECK(monotone.iterations == plain.iterations);
    CHECK(monotone.evaluations < monotone.plain_evaluations);
    for (size_t i = 0; i < plain.value.size(); ++i)
      CHECK(monotone.value[i] == doctest::Approx(plain.value[i]).epsilon(1e-12));
  }
  SUBCASE("refuses to run when the cost condition fails") {
    const Model m = Model::build(desk_params(0.1, 0.2, 2.0, /*xi=*/1.0));
    CHECK_THROWS_AS(monotone_value_iteration(m), ConditionViolation);
    try {
      monotone_value_iteration(m);
    } catch (const ConditionViolation& e) {
      CHECK_FALSE(e.report.pass);
      REQUIRE(e.report.clauses.size() == 1);
      CHECK(e.report.clauses[0].margin < 0.0);
    }
  }
  SUBCASE("myopic model reduces to argmin of the immediate cost") {
    ModelParams p = tiny_params(2, 0.0);
    const Model m = Model::build(p);
    const MonotoneSolveResult monotone = monotone_value_iteration(m);
    const SolveResult plain = value_iteration(m);
    for (size_t i = 0; i < plain.policy.action.size(); ++i)
      CHECK(monotone.policy.action[i] == plain.policy.action[i]);
  }
}

TEST_CASE("solver error handling and options") {
  SUBCASE("non-convergence reports the last residual") {
    SolveOptions options;
    options.max_iters = 3;
    CHECK_THROWS_WITH_AS(value_iteration(fig4_model(), options),
                         doctest::Contains("did not converge"), std::runtime_error);
  }
  SUBCASE("recorded iterates") {
    SolveOptions options;
    options.record_iterates = 5;
    const SolveResult solve = value_iteration(Model::build(tiny_params(2, 0.8)), options);
    CHECK(solve.iterates.size() == std::min<size_t>(5, solve.iterations));
    // First sweep from V = 0 is the myopic minimum.
    const Model m = Model::build(tiny_params(2, 0.8));
    for (int xi = 0; xi < m.space().size(); ++xi) {
      double best = m.cost(xi, 0);
      for (int ai = 1; ai < kNumActions; ++ai) best = std::min(best, m.cost(xi, ai));
      CHECK(solve.iterates[0][xi] == doctest::Approx(best).epsilon(1e-15));
    }
  }
  SUBCASE("threaded sweeps are bit-identical to single-threaded ones") {
    SolveOptions two;
    two.threads = 2;
    const SolveResult threaded = value_iteration(fig4_model(), two);
    const SolveResult& serial = fig4_solution();
    CHECK(threaded.iterations == serial.iterations);
    for (size_t i = 0; i < serial.value.size(); ++i)
      CHECK(threaded.value[i] == serial.value[i]);
    for (size_t i = 0; i < serial.policy.action.size(); ++i)
      CHECK(threaded.policy.action[i] == serial.policy.action[i]);
  }
}

TEST_CASE("power-delay-error tradeoff shows up in the optimal policy") {
  // Myopically, holding a single symbol always beats paying for a
  // transmission; with discounting the optimal policy still transmits
  // from some backlogged states. Neither concern dominates uniformly.
  const Model& m = fig4_model();
  const SolveResult& solve = fig4_solution();
  int transmits_with_backlog = 0;
  int holds_with_backlog = 0;
  for (int xi = 0; xi < m.space().size(); ++xi) {
    const State s = m.space().state(xi);
    if (s.b2 != 0 || s.b1 == 0) continue;
    const Action a = solve.policy.at(xi);
    if (a.a1 == 1) ++transmits_with_backlog;
    if (a.a1 == 0 && s.b1 >= 1) ++holds_with_backlog;
  }
  CHECK(transmits_with_backlog > 0);
  CHECK(holds_with_backlog > 0);
}
