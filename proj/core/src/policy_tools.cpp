#include "ncrelay/policy_tools.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ncrelay/rng.hpp"

namespace ncrelay {

namespace {

// Deterministic pairwise reduction; the tree shape depends only on the
// length, so sums are bit-stable however the inputs were produced.
double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 4) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const size_t half = values.size() / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

}  // namespace

ThresholdSurface::ThresholdSurface(const StateSpace& space)
    : nb1_(space.queue_levels(1)),
      nb2_(space.queue_levels(2)),
      k1_(space.channel_states(1)),
      k2_(space.channel_states(2)),
      th1_(static_cast<size_t>(nb2_) * k1_ * k2_, 0),
      th2_(static_cast<size_t>(nb1_) * k1_ * k2_, 0) {}

int ThresholdSurface::threshold(int queue, int b_other, int g1, int g2) const {
  return const_cast<ThresholdSurface*>(this)->threshold(queue, b_other, g1, g2);
}

int& ThresholdSurface::threshold(int queue, int b_other, int g1, int g2) {
  auto& data = queue == 1 ? th1_ : th2_;
  return data[(static_cast<size_t>(b_other) * k1_ + (g1 - 1)) * k2_ + (g2 - 1)];
}

ThresholdSurface extract_thresholds(const Model& model, const Policy& policy) {
  const auto& space = model.space();
  if (static_cast<int>(policy.action.size()) != space.size())
    throw std::invalid_argument("policy does not cover the state space");
  ThresholdSurface surface(space);
  for (int queue = 1; queue <= 2; ++queue) {
    const int own_levels = space.queue_levels(queue);
    const int other_levels = space.queue_levels(queue == 1 ? 2 : 1);
    for (int b_other = 0; b_other < other_levels; ++b_other)
      for (int g1 = 1; g1 <= space.channel_states(1); ++g1)
        for (int g2 = 1; g2 <= space.channel_states(2); ++g2) {
          int threshold = surface.never_value(queue);
          bool seen_transmit = false;
          bool slice_flagged = false;
          for (int b = 0; b < own_levels; ++b) {
            const State s =
                queue == 1 ? State{b, b_other, g1, g2} : State{b_other, b, g1, g2};
            const Action a = policy.at(space.index(s));
            const int own = queue == 1 ? a.a1 : a.a2;
            if (own == 1 && !seen_transmit) {
              threshold = b;
              seen_transmit = true;
            } else if (own == 0 && seen_transmit && !slice_flagged) {
              // The literal minimum stands, but it no longer determines
              // the policy on this slice.
              surface.summarizes_policy = false;
              surface.nonmonotone_slices.push_back(s);
              slice_flagged = true;
            }
          }
          surface.threshold(queue, b_other, g1, g2) = threshold;
        }
  }
  return surface;
}

Policy threshold_policy(const Model& model, const ThresholdSurface& surface) {
  const auto& space = model.space();
  Policy policy;
  policy.action.resize(space.size());
  for (int xi = 0; xi < space.size(); ++xi) {
    const State s = space.state(xi);
    const int a1 = s.b1 >= surface.threshold(1, s.b2, s.g1, s.g2) ? 1 : 0;
    const int a2 = s.b2 >= surface.threshold(2, s.b1, s.g1, s.g2) ? 1 : 0;
    policy.action[xi] = static_cast<uint8_t>(action_index({a1, a2}));
  }
  return policy;
}

CheckReport check_threshold_nonincreasing(const Model& model,
                                          const ThresholdSurface& surface, int queue,
                                          std::span<const int> axes) {
  const auto& space = model.space();
  const int own_axis = queue == 1 ? kAxisB1 : kAxisB2;
  for (int axis : axes)
    if (axis == own_axis || axis < kAxisB1 || axis > kAxisG2)
      throw std::invalid_argument("threshold check: axis not in the surface domain");

  CheckReport report;
  const int other_levels = surface.other_levels(queue);
  for (int b_other = 0; b_other < other_levels; ++b_other)
    for (int g1 = 1; g1 <= space.channel_states(1); ++g1)
      for (int g2 = 1; g2 <= space.channel_states(2); ++g2)
        for (int axis : axes) {
          int nb = b_other, ng1 = g1, ng2 = g2;
          if (axis == kAxisB1 || axis == kAxisB2) ++nb;
          if (axis == kAxisG1) ++ng1;
          if (axis == kAxisG2) ++ng2;
          if (nb >= other_levels || ng1 > space.channel_states(1) ||
              ng2 > space.channel_states(2))
            continue;
          const int here = surface.threshold(queue, b_other, g1, g2);
          const int up = surface.threshold(queue, nb, ng1, ng2);
          if (up > here) {
            report.pass = false;
            report.witness = CheckWitness{
                Point{b_other, g1, g2}, axis, -1, static_cast<double>(up - here),
                "threshold rises from " + std::to_string(here) + " to " +
                    std::to_string(up) + " as " + axis_name(axis) + " steps up"};
            return report;
          }
        }
  return report;
}

namespace {

struct StepCounters {
  double held = 0.0;
  double transmissions = 0.0;
  double coded = 0.0;
  double overflow = 0.0;
  double errors = 0.0;
};

StepCounters state_action_counters(const Model& model, const State& s, const Action& a) {
  StepCounters c;
  c.held = std::min(s.b1, model.params().L1) + std::min(s.b2, model.params().L2);
  c.transmissions = (a.a1 == 1 || a.a2 == 1) ? 1.0 : 0.0;
  c.coded = (a.a1 == 1 && a.a2 == 1) ? 1.0 : 0.0;
  c.overflow = (std::max(s.b1 - a.a1, 0) == model.params().L1 + 1 ? 1.0 : 0.0) +
               (std::max(s.b2 - a.a2, 0) == model.params().L2 + 1 ? 1.0 : 0.0);
  c.errors = a.a1 * model.channel2().error_prob(s.g2) +
             a.a2 * model.channel1().error_prob(s.g1);
  return c;
}

int sample_channel(const ChannelModel& ch, int g, double u) {
  double cumulative = 0.0;
  const int lo = std::max(1, g - 1);
  const int hi = std::min(ch.num_states(), g + 1);
  for (int h = lo; h <= hi; ++h) {
    cumulative += ch.transition(g, h);
    if (u < cumulative) return h;
  }
  return hi;
}

struct ReplicationResult {
  double discounted = 0.0;
  StepCounters tail;  // already divided by the tail length
};

ReplicationResult run_replication(const Model& model, const Policy& policy,
                                  const SimOptions& options, uint64_t stream_index) {
  SplitMix64 rng = SplitMix64::stream(options.seed, stream_index);
  const auto& params = model.params();
  const long burn_in = static_cast<long>(options.burn_in_fraction *
                                         static_cast<double>(options.horizon));
  const long tail_len = std::max<long>(options.horizon - burn_in, 1);

  ReplicationResult out;
  State s = options.initial;
  double discount_pow = 1.0;
  for (long t = 0; t < options.horizon; ++t) {
    const int xi = model.space().index(s);
    const Action a = policy.at(xi);
    out.discounted += discount_pow * model.cost(xi, action_index(a));
    discount_pow *= params.beta;
    if (t >= burn_in) {
      const StepCounters c = state_action_counters(model, s, a);
      out.tail.held += c.held;
      out.tail.transmissions += c.transmissions;
      out.tail.coded += c.coded;
      out.tail.overflow += c.overflow;
      out.tail.errors += c.errors;
    }
    // One epoch: arrivals to each queue, then both channels move. The
    // draw order (f1, f2, g1, g2) is fixed for reproducibility.
    const int f1 = rng.next_double() < params.p1 ? 1 : 0;
    const int f2 = rng.next_double() < params.p2 ? 1 : 0;
    const int g1 = sample_channel(model.channel1(), s.g1, rng.next_double());
    const int g2 = sample_channel(model.channel2(), s.g2, rng.next_double());
    s = State{next_queue_occupancy(s.b1, a.a1, f1, params.L1),
              next_queue_occupancy(s.b2, a.a2, f2, params.L2), g1, g2};
  }
  out.tail.held /= static_cast<double>(tail_len);
  out.tail.transmissions /= static_cast<double>(tail_len);
  out.tail.coded /= static_cast<double>(tail_len);
  out.tail.overflow /= static_cast<double>(tail_len);
  out.tail.errors /= static_cast<double>(tail_len);
  return out;
}

}  // namespace

ChainMetrics simulate_chain(const Model& model, const Policy& policy,
                            const SimOptions& options) {
  if (options.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (options.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!model.space().contains(options.initial))
    throw std::invalid_argument("initial state outside the state space");
  if (static_cast<int>(policy.action.size()) != model.space().size())
    throw std::invalid_argument("policy does not cover the state space");

  const int reps = options.replications;
  std::vector<ReplicationResult> results(reps);
  auto worker = [&](int begin, int end) {
    for (int r = begin; r < end; ++r)
      results[r] = run_replication(model, policy, options, static_cast<uint64_t>(r));
  };
  if (options.threads <= 1 || reps < 2 * options.threads) {
    worker(0, reps);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (reps + options.threads - 1) / options.threads;
    for (int t = 0; t < options.threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(reps, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  auto mean_of = [&](auto&& getter) {
    std::vector<double> values(reps);
    for (int r = 0; r < reps; ++r) values[r] = getter(results[r]);
    return pairwise_sum(values) / reps;
  };

  ChainMetrics metrics;
  metrics.horizon = options.horizon;
  metrics.replications = reps;
  metrics.discounted_cost = mean_of([](const ReplicationResult& r) { return r.discounted; });
  if (reps > 1) {
    std::vector<double> sq(reps);
    for (int r = 0; r < reps; ++r) {
      const double d = results[r].discounted - metrics.discounted_cost;
      sq[r] = d * d;
    }
    metrics.discounted_cost_se =
        std::sqrt(pairwise_sum(sq) / (static_cast<double>(reps) * (reps - 1)));
  }
  metrics.avg_held_symbols = mean_of([](const ReplicationResult& r) { return r.tail.held; });
  metrics.avg_transmissions =
      mean_of([](const ReplicationResult& r) { return r.tail.transmissions; });
  metrics.avg_coded_broadcasts =
      mean_of([](const ReplicationResult& r) { return r.tail.coded; });
  metrics.avg_overflow_symbols =
      mean_of([](const ReplicationResult& r) { return r.tail.overflow; });
  metrics.avg_symbol_errors =
      mean_of([](const ReplicationResult& r) { return r.tail.errors; });

  double max_policy_cost = 0.0;
  for (int xi = 0; xi < model.space().size(); ++xi)
    max_policy_cost = std::max(max_policy_cost, model.cost(xi, policy.action[xi]));
  const double beta = model.params().beta;
  metrics.truncation_bias_bound =
      std::pow(beta, static_cast<double>(options.horizon)) * max_policy_cost / (1.0 - beta);
  return metrics;
}

namespace {

// Strongly connected components of the induced chain, iterative Tarjan.
// Returns a component id per node (restricted to `nodes`), components
// numbered in reverse topological order.
std::vector<int> tarjan_scc(const std::vector<std::vector<int>>& adjacency, int& num_components) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<int> index(n, -1), low(n, 0), component(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_index = 0;
  num_components = 0;

  struct Frame {
    int node;
    size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call_stack{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call_stack.empty()) {
      Frame& frame = call_stack.back();
      if (frame.edge < adjacency[frame.node].size()) {
        const int next = adjacency[frame.node][frame.edge++];
        if (index[next] == -1) {
          index[next] = low[next] = next_index++;
          stack.push_back(next);
          on_stack[next] = true;
          call_stack.push_back({next, 0});
        } else if (on_stack[next]) {
          low[frame.node] = std::min(low[frame.node], index[next]);
        }
      } else {
        if (low[frame.node] == index[frame.node]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            component[w] = num_components;
            if (w == frame.node) break;
          }
          ++num_components;
        }
        const int done = frame.node;
        call_stack.pop_back();
        if (!call_stack.empty())
          low[call_stack.back().node] = std::min(low[call_stack.back().node], low[done]);
      }
    }
  }
  return component;
}

}  // namespace

ChainMetrics stationary_metrics(const Model& model, const Policy& policy,
                                const State& initial) {
  const auto& space = model.space();
  if (static_cast<int>(policy.action.size()) != space.size())
    throw std::invalid_argument("policy does not cover the state space");
  if (!space.contains(initial))
    throw std::invalid_argument("initial state outside the state space");
  const int n = space.size();

  // Reachable set under the induced chain.
  std::vector<int> order;
  std::vector<int> local(n, -1);
  order.push_back(space.index(initial));
  local[order[0]] = 0;
  for (size_t head = 0; head < order.size(); ++head) {
    const int xi = order[head];
    for (const Transition& t : model.kernel().row(xi, policy.action[xi]))
      if (t.prob > 0.0 && local[t.next] == -1) {
        local[t.next] = static_cast<int>(order.size());
        order.push_back(t.next);
      }
  }
  const int m = static_cast<int>(order.size());
  std::vector<std::vector<int>> adjacency(m);
  for (int i = 0; i < m; ++i)
    for (const Transition& t : model.kernel().row(order[i], policy.action[order[i]]))
      if (t.prob > 0.0) adjacency[i].push_back(local[t.next]);

  int num_components = 0;
  const std::vector<int> component = tarjan_scc(adjacency, num_components);
  std::vector<bool> terminal(num_components, true);
  for (int i = 0; i < m; ++i)
    for (int j : adjacency[i])
      if (component[j] != component[i]) terminal[component[i]] = false;
  std::vector<int> terminal_ids;
  for (int c = 0; c < num_components; ++c)
    if (terminal[c]) terminal_ids.push_back(c);
  if (terminal_ids.size() != 1)
    throw std::runtime_error("induced chain has " + std::to_string(terminal_ids.size()) +
                             " reachable recurrent classes; stationary metrics undefined");

  std::vector<int> recurrent;  // global state indices of the recurrent class
  for (int i = 0; i < m; ++i)
    if (component[i] == terminal_ids[0]) recurrent.push_back(order[i]);
  std::sort(recurrent.begin(), recurrent.end());
  const int r = static_cast<int>(recurrent.size());
  std::vector<int> position(n, -1);
  for (int i = 0; i < r; ++i) position[recurrent[i]] = i;

  // pi^T P = pi^T with sum(pi) = 1 on the recurrent class.
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    const int xi = recurrent[i];
    for (const Transition& t : model.kernel().row(xi, policy.action[xi])) {
      if (t.prob <= 0.0) continue;
      const int j = position[t.next];
      if (j < 0)
        throw std::runtime_error("recurrent class is not closed; SCC computation broken");
      system(j, i) += t.prob;
    }
    system(i, i) -= 1.0;
  }
  for (int i = 0; i < r; ++i) system(r - 1, i) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  rhs(r - 1) = 1.0;
  Eigen::VectorXd pi = system.partialPivLu().solve(rhs);

  // Certify the fixed-point residual directly on pi^T P - pi^T.
  auto residual_of = [&](const Eigen::VectorXd& candidate) {
    Eigen::VectorXd image = Eigen::VectorXd::Zero(r);
    for (int i = 0; i < r; ++i) {
      const int xi = recurrent[i];
      for (const Transition& t : model.kernel().row(xi, policy.action[xi]))
        if (t.prob > 0.0) image(position[t.next]) += t.prob * candidate(i);
    }
    return (image - candidate).lpNorm<Eigen::Infinity>();
  };
  for (int pass = 0; pass < 64 && residual_of(pi) >= 1e-10; ++pass) {
    // Power-iteration refinement; the recurrent class makes this a
    // contraction toward the stationary vector.
    Eigen::VectorXd image = Eigen::VectorXd::Zero(r);
    for (int i = 0; i < r; ++i) {
      const int xi = recurrent[i];
      for (const Transition& t : model.kernel().row(xi, policy.action[xi]))
        if (t.prob > 0.0) image(position[t.next]) += t.prob * pi(i);
    }
    pi = image / image.sum();
  }
  if (residual_of(pi) >= 1e-10)
    throw std::runtime_error("stationary distribution residual did not reach 1e-10");

  ChainMetrics metrics;
  metrics.exact = true;
  metrics.irreducible = (r == n);
  if (!metrics.irreducible)
    metrics.note = "chain not irreducible; metrics over the recurrent class reachable from "
                   "the initial state (" +
                   std::to_string(r) + " of " + std::to_string(n) + " states)";
  for (int i = 0; i < r; ++i) {
    const int xi = recurrent[i];
    const State s = space.state(xi);
    const Action a = policy.at(xi);
    const StepCounters c = state_action_counters(model, s, a);
    metrics.avg_held_symbols += pi(i) * c.held;
    metrics.avg_transmissions += pi(i) * c.transmissions;
    metrics.avg_coded_broadcasts += pi(i) * c.coded;
    metrics.avg_overflow_symbols += pi(i) * c.overflow;
    metrics.avg_symbol_errors += pi(i) * c.errors;
  }
  const std::vector<double> exact_value = policy_evaluation_exact(model, policy);
  metrics.discounted_cost = exact_value[space.index(initial)];
  return metrics;
}

}  // namespace ncrelay
