#include "ncrelay/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "ncrelay/structure.hpp"

namespace ncrelay {

namespace {

double stopping_threshold(double tolerance, double beta) {
  if (beta <= 0.0) return std::numeric_limits<double>::infinity();
  return tolerance * (1.0 - beta) / (2.0 * beta);
}

// Greedy action with ties broken toward the lexicographically smallest
// action: a later candidate must beat the incumbent by more than the tie
// tolerance to take over.
int tie_break_argmin(const double* q_row) {
  int best = 0;
  for (int a = 1; a < kNumActions; ++a)
    if (q_row[a] < q_row[best] - kTieTolerance) best = a;
  return best;
}

void backup_range(const Model& model, const std::vector<double>& cost,
                  const std::vector<double>& v_prev, int begin, int end,
                  std::vector<double>& q, std::vector<double>& v) {
  const double beta = model.params().beta;
  const auto& kernel = model.kernel();
  for (int xi = begin; xi < end; ++xi) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < kNumActions; ++a) {
      double expectation = 0.0;
      for (const Transition& t : kernel.row(xi, a)) expectation += t.prob * v_prev[t.next];
      const double value = cost[static_cast<size_t>(xi) * kNumActions + a] + beta * expectation;
      q[static_cast<size_t>(xi) * kNumActions + a] = value;
      best = std::min(best, value);
    }
    v[xi] = best;
  }
}

void parallel_sweep(const Model& model, const std::vector<double>& cost,
                    const std::vector<double>& v_prev, int threads,
                    std::vector<double>& q, std::vector<double>& v) {
  const int n = model.space().size();
  if (threads <= 1 || n < 2 * threads) {
    backup_range(model, cost, v_prev, 0, n, q, v);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] { backup_range(model, cost, v_prev, begin, end, q, v); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

SolveResult value_iteration(const Model& model, const SolveOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  const int n = model.space().size();
  const std::vector<double> cost = cost_table(model);
  const double threshold = stopping_threshold(options.tolerance, model.params().beta);

  SolveResult result;
  result.q.assign(static_cast<size_t>(n) * kNumActions, 0.0);
  std::vector<double> v_prev(n, 0.0);
  std::vector<double> v(n, 0.0);

  for (long iter = 1; iter <= options.max_iters; ++iter) {
    parallel_sweep(model, cost, v_prev, options.threads, result.q, v);
    double residual = 0.0;
    for (int xi = 0; xi < n; ++xi) residual = std::max(residual, std::abs(v[xi] - v_prev[xi]));
    result.residuals.push_back(residual);
    result.iterations = iter;
    result.final_residual = residual;
    v_prev.swap(v);
    if (options.record_iterates > 0 && iter <= options.record_iterates)
      result.iterates.push_back(v_prev);
    if (residual < threshold) {
      result.value = std::move(v_prev);
      result.policy.action.resize(n);
      for (int xi = 0; xi < n; ++xi)
        result.policy.action[xi] = static_cast<uint8_t>(
            tie_break_argmin(result.q.data() + static_cast<size_t>(xi) * kNumActions));
      return result;
    }
  }
  throw std::runtime_error("value iteration did not converge after " +
                           std::to_string(options.max_iters) +
                           " sweeps; last residual " + std::to_string(result.final_residual));
}

std::vector<double> policy_evaluation_exact(const Model& model, const Policy& policy) {
  const int n = model.space().size();
  if (static_cast<int>(policy.action.size()) != n)
    throw std::invalid_argument("policy does not cover the state space");
  const double beta = model.params().beta;

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (int xi = 0; xi < n; ++xi) {
    const int a = policy.action[xi];
    rhs(xi) = model.cost(xi, a);
    for (const Transition& t : model.kernel().row(xi, a)) system(xi, t.next) -= beta * t.prob;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd value = lu.solve(rhs);
  // Iterative refinement until the fixed-point residual is certified.
  for (int pass = 0; pass < 8; ++pass) {
    Eigen::VectorXd residual = rhs - system * value;
    if (residual.lpNorm<Eigen::Infinity>() < 1e-10) break;
    value += lu.solve(residual);
  }
  Eigen::VectorXd residual = rhs - system * value;
  if (residual.lpNorm<Eigen::Infinity>() >= 1e-10)
    throw std::runtime_error("policy evaluation residual did not reach 1e-10");
  return {value.data(), value.data() + n};
}

MonotoneSolveResult monotone_value_iteration(const Model& model, const SolveOptions& options) {
  CheckReport conditions =
      check_sufficient_conditions(model.params(), model.channel1(), model.channel2(),
                                  SufficientCondition::kQueueMonotone);
  if (!conditions.pass)
    throw ConditionViolation(
        "monotone value iteration refused: queue-monotonicity condition fails\n" +
            conditions.to_text(),
        conditions);

  if (!(options.tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  const int n = model.space().size();
  const auto& space = model.space();
  const auto& kernel = model.kernel();
  const double beta = model.params().beta;
  const std::vector<double> cost = cost_table(model);
  const double threshold = stopping_threshold(options.tolerance, model.params().beta);

  MonotoneSolveResult result;
  std::vector<double> v_prev(n, 0.0), v(n, 0.0);
  std::vector<uint8_t> chosen(n, 0);
  std::array<double, kNumActions> q_row;

  bool converged = false;
  for (long iter = 1; iter <= options.max_iters && !converged; ++iter) {
    // The linear state order has b1 slowest and b2 second, so both lower
    // neighbors are already processed within the current sweep.
    for (int xi = 0; xi < n; ++xi) {
      const State s = space.state(xi);
      const int floor1 = s.b1 > 0 ? kActions[chosen[space.index({s.b1 - 1, s.b2, s.g1, s.g2})]].a1 : 0;
      const int floor2 = s.b2 > 0 ? kActions[chosen[space.index({s.b1, s.b2 - 1, s.g1, s.g2})]].a2 : 0;
      double best = std::numeric_limits<double>::infinity();
      double chosen_q = std::numeric_limits<double>::infinity();
      int best_a = -1;
      for (int a = 0; a < kNumActions; ++a) {
        if (kActions[a].a1 < floor1 || kActions[a].a2 < floor2) continue;
        double expectation = 0.0;
        for (const Transition& t : kernel.row(xi, a)) expectation += t.prob * v_prev[t.next];
        const double value = cost[static_cast<size_t>(xi) * kNumActions + a] + beta * expectation;
        ++result.evaluations;
        if (best_a < 0 || value < chosen_q - kTieTolerance) {
          best_a = a;
          chosen_q = value;
        }
        best = std::min(best, value);
      }
      v[xi] = best;
      chosen[xi] = static_cast<uint8_t>(best_a);
    }
    double residual = 0.0;
    for (int xi = 0; xi < n; ++xi) residual = std::max(residual, std::abs(v[xi] - v_prev[xi]));
    result.iterations = iter;
    result.final_residual = residual;
    v_prev.swap(v);
    converged = residual < threshold;
  }
  if (!converged)
    throw std::runtime_error("monotone value iteration did not converge after " +
                             std::to_string(options.max_iters) + " sweeps; last residual " +
                             std::to_string(result.final_residual));

  // Full-action verification sweep against the converged values. Any state
  // where the unrestricted greedy choice differs from the restricted one
  // exposes a certified condition that did not hold.
  for (int xi = 0; xi < n; ++xi) {
    for (int a = 0; a < kNumActions; ++a) {
      double expectation = 0.0;
      for (const Transition& t : kernel.row(xi, a)) expectation += t.prob * v_prev[t.next];
      q_row[a] = cost[static_cast<size_t>(xi) * kNumActions + a] + beta * expectation;
      ++result.evaluations;
    }
    const int unrestricted = tie_break_argmin(q_row.data());
    if (unrestricted != chosen[xi]) {
      const State s = space.state(xi);
      throw std::runtime_error(
          "monotone value iteration: restricted sweep diverged from the greedy policy at "
          "state (b1=" + std::to_string(s.b1) + ", b2=" + std::to_string(s.b2) +
          ", g1=" + std::to_string(s.g1) + ", g2=" + std::to_string(s.g2) +
          "); the monotonicity condition was mis-certified");
    }
  }

  result.plain_evaluations = static_cast<long>(result.iterations) * n * kNumActions;
  result.value = std::move(v_prev);
  result.policy.action = std::move(chosen);
  return result;
}

}  // namespace ncrelay
