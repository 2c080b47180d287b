#include "ncrelay/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ncrelay {

namespace {
constexpr double kRowSumTolerance = 1e-12;

void check_range(const char* what, int value, int lo, int hi) {
  if (value < lo || value > hi)
    throw std::invalid_argument(std::string(what) + " = " + std::to_string(value) +
                                " outside [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
}
}  // namespace

void ModelParams::validate() const {
  if (L1 < 1 || L2 < 1) throw std::invalid_argument("queue capacities must be >= 1");
  if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0))
    throw std::invalid_argument("arrival probabilities must lie in [0, 1]");
  if (!(lambda_hold > 0.0)) throw std::invalid_argument("lambda_hold must be > 0");
  if (!(xi_overflow > lambda_hold))
    throw std::invalid_argument("xi_overflow must exceed lambda_hold");
  if (!(tau_tx > lambda_hold))
    throw std::invalid_argument("tau_tx must exceed lambda_hold");
  if (!(eta_err >= 0.0)) throw std::invalid_argument("eta_err must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
  channel1.validate();
  channel2.validate();
}

StateSpace::StateSpace(int L1, int L2, int K1, int K2)
    : nb1_(L1 + 2), nb2_(L2 + 2), k1_(K1), k2_(K2), size_(nb1_ * nb2_ * k1_ * k2_) {
  if (L1 < 1 || L2 < 1 || K1 < 1 || K2 < 1)
    throw std::invalid_argument("state space dimensions must be positive");
}

int next_queue_occupancy(int occupancy, int departures, int arrival, int capacity) {
  check_range("occupancy", occupancy, 0, capacity + 1);
  check_range("departures", departures, 0, 1);
  check_range("arrival", arrival, 0, 1);
  const int after_departure = std::max(occupancy - departures, 0);
  return std::min(after_departure, capacity) + arrival;
}

double queue_transition_prob(int occupancy, int departures, int next_occupancy,
                             double arrival_prob, int capacity) {
  check_range("occupancy", occupancy, 0, capacity + 1);
  check_range("departures", departures, 0, 1);
  check_range("next_occupancy", next_occupancy, 0, capacity + 1);
  const int after_departure = std::min(std::max(occupancy - departures, 0), capacity);
  const int arrival = next_occupancy - after_departure;
  if (arrival == 0) return 1.0 - arrival_prob;
  if (arrival == 1) return arrival_prob;
  return 0.0;
}

double holding_cost(int post_departure_occupancy, int capacity, const ModelParams& params) {
  const int held = std::max(post_departure_occupancy, 0);
  double cost = params.lambda_hold * std::min(held, capacity);
  if (held == capacity + 1) cost += params.xi_overflow;
  return cost;
}

double immediate_cost(const State& s, const Action& a, const ModelParams& params,
                      const ChannelModel& channel1, const ChannelModel& channel2) {
  double cost = holding_cost(s.b1 - a.a1, params.L1, params) +
                holding_cost(s.b2 - a.a2, params.L2, params);
  // A symbol departing queue 1 travels the downlink of user 2, so its
  // error term is priced by channel 2, and symmetrically for queue 2.
  cost += params.eta_err *
          (a.a1 * channel2.error_prob(s.g2) + a.a2 * channel1.error_prob(s.g1));
  if (a.a1 == 1 || a.a2 == 1) cost += params.tau_tx;
  return cost;
}

TransitionKernel::TransitionKernel(int num_states, std::vector<uint32_t> offsets,
                                   std::vector<Transition> entries)
    : num_states_(num_states), offsets_(std::move(offsets)), entries_(std::move(entries)) {
  if (offsets_.size() != static_cast<size_t>(num_states_) * kNumActions + 1)
    throw std::invalid_argument("kernel offsets size mismatch");
}

TransitionKernel build_kernel(const StateSpace& space, const ModelParams& params,
                              const ChannelModel& channel1, const ChannelModel& channel2) {
  const int n = space.size();
  std::vector<uint32_t> offsets;
  offsets.reserve(static_cast<size_t>(n) * kNumActions + 1);
  std::vector<Transition> entries;
  entries.reserve(static_cast<size_t>(n) * kNumActions * 8);

  struct Successor {
    int value;
    double prob;
  };
  auto queue_successors = [](int b, int a, double p, int L) {
    std::vector<Successor> out;
    const int after = std::min(std::max(b - a, 0), L);
    if (1.0 - p > 0.0) out.push_back({after, 1.0 - p});
    if (p > 0.0) out.push_back({after + 1, p});
    return out;
  };
  auto channel_successors = [](const ChannelModel& ch, int g) {
    std::vector<Successor> out;
    for (int h = std::max(1, g - 1); h <= std::min(ch.num_states(), g + 1); ++h) {
      const double prob = ch.transition(g, h);
      if (prob > 0.0) out.push_back({h, prob});
    }
    return out;
  };

  offsets.push_back(0);
  for (int xi = 0; xi < n; ++xi) {
    const State s = space.state(xi);
    const auto c1 = channel_successors(channel1, s.g1);
    const auto c2 = channel_successors(channel2, s.g2);
    for (const Action& a : kActions) {
      const auto q1 = queue_successors(s.b1, a.a1, params.p1, params.L1);
      const auto q2 = queue_successors(s.b2, a.a2, params.p2, params.L2);
      double row_sum = 0.0;
      for (const auto& s1 : q1)
        for (const auto& s2 : q2)
          for (const auto& t1 : c1)
            for (const auto& t2 : c2) {
              const double prob = s1.prob * s2.prob * t1.prob * t2.prob;
              const State next{s1.value, s2.value, t1.value, t2.value};
              entries.push_back({static_cast<int32_t>(space.index(next)), prob});
              row_sum += prob;
            }
      if (std::abs(row_sum - 1.0) > kRowSumTolerance)
        throw std::runtime_error("kernel row for state " + std::to_string(xi) +
                                 " sums to " + std::to_string(row_sum));
      offsets.push_back(static_cast<uint32_t>(entries.size()));
    }
  }
  return TransitionKernel(n, std::move(offsets), std::move(entries));
}

Model::Model(ModelParams params, ChannelModel ch1, ChannelModel ch2, StateSpace space,
             TransitionKernel kernel)
    : params_(std::move(params)),
      channel1_(std::move(ch1)),
      channel2_(std::move(ch2)),
      space_(space),
      kernel_(std::move(kernel)) {}

Model Model::build(const ModelParams& params) {
  params.validate();
  ChannelModel ch1 = build_channel_model(params.channel1);
  ChannelModel ch2 = build_channel_model(params.channel2);
  StateSpace space(params.L1, params.L2, ch1.num_states(), ch2.num_states());
  TransitionKernel kernel = build_kernel(space, params, ch1, ch2);
  return Model(params, std::move(ch1), std::move(ch2), space, std::move(kernel));
}

std::vector<double> cost_table(const Model& model) {
  const int n = model.space().size();
  std::vector<double> table(static_cast<size_t>(n) * kNumActions);
  for (int xi = 0; xi < n; ++xi)
    for (int ai = 0; ai < kNumActions; ++ai)
      table[static_cast<size_t>(xi) * kNumActions + ai] = model.cost(xi, ai);
  return table;
}

}  // namespace ncrelay
