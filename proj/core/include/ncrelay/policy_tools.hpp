#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ncrelay/model.hpp"
#include "ncrelay/solver.hpp"
#include "ncrelay/structure.hpp"

namespace ncrelay {

// Switching thresholds of a policy: per queue i, the least occupancy b_i at
// which the policy transmits, as a function of the other queue's occupancy
// and both channel states. L_i + 2 encodes "never transmits on this slice"
// so the surface stays total and order-consistent.
class ThresholdSurface {
 public:
  ThresholdSurface(const StateSpace& space);

  int threshold(int queue, int b_other, int g1, int g2) const;
  int& threshold(int queue, int b_other, int g1, int g2);

  // Sentinel value meaning the policy never transmits from this queue on
  // the given slice.
  int never_value(int queue) const { return queue == 1 ? nb1_ : nb2_; }

  // False when some slice of the source policy was not monotone in its own
  // queue state, in which case the threshold is still the literal minimum
  // but does not summarize the policy.
  bool summarizes_policy = true;
  std::vector<State> nonmonotone_slices;  // one representative state each

  int other_levels(int queue) const { return queue == 1 ? nb2_ : nb1_; }
  int k1() const { return k1_; }
  int k2() const { return k2_; }

 private:
  int nb1_, nb2_, k1_, k2_;
  std::vector<int> th1_;  // indexed over (b2, g1, g2)
  std::vector<int> th2_;  // indexed over (b1, g1, g2)
};

ThresholdSurface extract_thresholds(const Model& model, const Policy& policy);

// The deterministic policy induced by a surface: transmit from queue i
// exactly when b_i has reached the slice's threshold.
Policy threshold_policy(const Model& model, const ThresholdSurface& surface);

// Nonincreasing check of one queue's threshold surface along the given
// state axes (the queue's own occupancy axis is not part of the surface
// domain and is rejected).
CheckReport check_threshold_nonincreasing(const Model& model,
                                          const ThresholdSurface& surface, int queue,
                                          std::span<const int> axes);

// Long-run behavior of the Markov chain a fixed policy induces.
struct ChainMetrics {
  double discounted_cost = 0.0;
  double discounted_cost_se = 0.0;       // 0 for exact results
  double truncation_bias_bound = 0.0;    // simulation only
  double avg_held_symbols = 0.0;         // delay proxy via Little's law
  double avg_transmissions = 0.0;
  double avg_coded_broadcasts = 0.0;
  double avg_overflow_symbols = 0.0;
  double avg_symbol_errors = 0.0;
  long horizon = 0;
  int replications = 0;
  bool exact = false;
  bool irreducible = true;
  std::string note;
};

struct SimOptions {
  long horizon = 1000;
  int replications = 200;
  uint64_t seed = 1;
  State initial{0, 0, 1, 1};  // empty queues, worst channels
  double burn_in_fraction = 0.1;
  int threads = 1;
};

// Monte Carlo over the induced chain. Discounted cost is truncated at the
// horizon; the truncation bias bound beta^horizon * C_max / (1 - beta) is
// reported alongside. Per-epoch averages are taken over the post-burn-in
// tail. Bit-reproducible for a given seed regardless of thread count.
ChainMetrics simulate_chain(const Model& model, const Policy& policy,
                            const SimOptions& options);

// Exact counterpart: stationary distribution of the recurrent class
// reachable from the initial state (solved to residual < 1e-10) and exact
// per-epoch averages under it; the discounted cost is the exact policy
// value at the initial state. If the chain is not irreducible the note
// says which portion carried the metrics. Throws std::runtime_error if
// more than one recurrent class is reachable.
ChainMetrics stationary_metrics(const Model& model, const Policy& policy,
                                const State& initial = State{0, 0, 1, 1});

}  // namespace ncrelay
