#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ncrelay/channel.hpp"

namespace ncrelay {

// Scalar parameters of one relay-control problem instance. Two finite FIFO
// queues buffer Bernoulli symbol arrivals; a scheduler decides per epoch
// which queues transmit, paying holding, overflow, transmission and symbol
// error costs, discounted over an infinite horizon.
struct ModelParams {
  int L1 = 3;                 // capacity of queue 1 (symbols)
  int L2 = 3;                 // capacity of queue 2
  double p1 = 0.5;            // arrival probability per epoch, queue 1
  double p2 = 0.5;            // arrival probability per epoch, queue 2
  double lambda_hold = 0.05;  // unit holding cost per symbol per epoch
  double xi_overflow = 4.0;   // unit cost per symbol lost to overflow
  double tau_tx = 1.0;        // unit cost per transmission
  double eta_err = 2.0;       // unit cost per expected symbol error
  double beta = 0.97;         // discount factor, in [0, 1)
  ChannelConfig channel1;
  ChannelConfig channel2;

  // Enforces lambda_hold > 0, xi_overflow > lambda_hold,
  // tau_tx > lambda_hold, eta_err >= 0, beta in [0,1), p_i in [0,1] and
  // positive capacities; throws std::invalid_argument otherwise.
  void validate() const;
};

// Queue occupancies live in {0,..,L_i+1}; the extra level marks an
// overflowed queue. Channel states are 1-based, in {1,..,K_i}.
struct State {
  int b1 = 0;
  int b2 = 0;
  int g1 = 1;
  int g2 = 1;

  bool operator==(const State&) const = default;
};

struct Action {
  int a1 = 0;  // symbols departing queue 1 this epoch (0 or 1)
  int a2 = 0;

  bool operator==(const Action&) const = default;
};

// All four actions in lexicographic (a1, a2) order; the index of an action
// in this table equals 2*a1 + a2. (1,1) is the coded broadcast: one
// transmission serves both directions.
inline constexpr std::array<Action, 4> kActions{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
inline constexpr int kNumActions = 4;

constexpr int action_index(const Action& a) { return 2 * a.a1 + a.a2; }

// Dense bijection between states and contiguous indices. Row-major over
// (b1, b2, g1, g2) with b1 slowest and g2 fastest; this is the ordering
// used by every CSV export.
class StateSpace {
 public:
  StateSpace(int L1, int L2, int K1, int K2);

  int size() const { return size_; }
  int queue_levels(int queue) const { return queue == 1 ? nb1_ : nb2_; }
  int channel_states(int channel) const { return channel == 1 ? k1_ : k2_; }
  int capacity(int queue) const { return queue == 1 ? nb1_ - 2 : nb2_ - 2; }

  int index(const State& s) const {
    return ((s.b1 * nb2_ + s.b2) * k1_ + (s.g1 - 1)) * k2_ + (s.g2 - 1);
  }

  State state(int index) const {
    State s;
    s.g2 = index % k2_ + 1;
    index /= k2_;
    s.g1 = index % k1_ + 1;
    index /= k1_;
    s.b2 = index % nb2_;
    s.b1 = index / nb2_;
    return s;
  }

  bool contains(const State& s) const {
    return s.b1 >= 0 && s.b1 < nb1_ && s.b2 >= 0 && s.b2 < nb2_ && s.g1 >= 1 &&
           s.g1 <= k1_ && s.g2 >= 1 && s.g2 <= k2_;
  }

 private:
  int nb1_, nb2_, k1_, k2_;
  int size_;
};

// Occupancy after one epoch: departures leave first, the queue clamps to
// its capacity (dropping an overflowed symbol), then the arrival lands.
// Inputs are range-checked; throws std::invalid_argument.
int next_queue_occupancy(int occupancy, int departures, int arrival, int capacity);

// Probability that queue occupancy moves from b to b_next under the given
// departure count, with arrival probability p. Zero unless the implied
// arrival count is 0 or 1.
double queue_transition_prob(int occupancy, int departures, int next_occupancy,
                             double arrival_prob, int capacity);

// Holding-plus-overflow cost of post-departure occupancy y in {-1,..,L+1}:
// lambda * min([y]+, L) + xi_overflow if the queue overflowed.
// Nondecreasing and discretely convex in y as long as xi_overflow > lambda.
double holding_cost(int post_departure_occupancy, int capacity,
                    const ModelParams& params);

// One-epoch cost of taking the action in the given state. The symbol
// leaving queue i travels on channel -i, so a1's error term is priced by
// channel 2's error probability and vice versa.
double immediate_cost(const State& s, const Action& a, const ModelParams& params,
                      const ChannelModel& channel1, const ChannelModel& channel2);

struct Transition {
  int32_t next;
  double prob;
};

// Sparse one-step transition kernel over (state, action) rows. Rows are
// products of two queue factors and two channel factors and sum to one
// within 1e-12.
class TransitionKernel {
 public:
  TransitionKernel(int num_states, std::vector<uint32_t> offsets,
                   std::vector<Transition> entries);

  std::span<const Transition> row(int state_index, int action) const {
    const size_t r = static_cast<size_t>(state_index) * kNumActions + action;
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  int num_states() const { return num_states_; }
  size_t num_entries() const { return entries_.size(); }

 private:
  int num_states_;
  std::vector<uint32_t> offsets_;  // size num_states*4 + 1
  std::vector<Transition> entries_;
};

TransitionKernel build_kernel(const StateSpace& space, const ModelParams& params,
                              const ChannelModel& channel1,
                              const ChannelModel& channel2);

// Everything defining one solvable instance. Immutable after build();
// safe to share across threads.
class Model {
 public:
  static Model build(const ModelParams& params);

  const ModelParams& params() const { return params_; }
  const ChannelModel& channel1() const { return channel1_; }
  const ChannelModel& channel2() const { return channel2_; }
  const StateSpace& space() const { return space_; }
  const TransitionKernel& kernel() const { return kernel_; }

  double cost(int state_index, int action) const {
    return immediate_cost(space_.state(state_index), kActions[action], params_,
                          channel1_, channel2_);
  }

 private:
  Model(ModelParams params, ChannelModel ch1, ChannelModel ch2, StateSpace space,
        TransitionKernel kernel);

  ModelParams params_;
  ChannelModel channel1_;
  ChannelModel channel2_;
  StateSpace space_;
  TransitionKernel kernel_;
};

// Immediate costs tabulated in (state, action) order, state-major. The
// cost function itself stays the source of truth; the table is a
// convenience for the solver hot loop and CSV export.
std::vector<double> cost_table(const Model& model);

}  // namespace ncrelay
