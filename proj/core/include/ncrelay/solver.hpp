#pragma once

#include <cstdint>
#include <vector>

#include "ncrelay/model.hpp"

namespace ncrelay {

// Deterministic stationary policy: one action index per state.
struct Policy {
  std::vector<uint8_t> action;

  Action at(int state_index) const { return kActions[action[state_index]]; }
};

struct SolveOptions {
  double tolerance = 1e-8;  // epsilon of the certified epsilon-optimal policy
  long max_iters = 100000;
  int threads = 1;
  // Keep a snapshot of V after each of the first N sweeps (0 = none); used
  // by the structural property tests that track values across iterations.
  int record_iterates = 0;
};

// Ties in every argmin over actions are broken toward the lexicographically
// smallest (a1, a2), with ties detected at this absolute tolerance.
inline constexpr double kTieTolerance = 1e-10;

struct SolveResult {
  std::vector<double> value;       // V after the final sweep
  std::vector<double> q;           // state-major (state, action) values, final sweep
  Policy policy;                   // greedy w.r.t. q
  long iterations = 0;             // sweeps performed
  double final_residual = 0.0;     // sup-norm change of the last sweep
  std::vector<double> residuals;   // sup-norm change per sweep
  std::vector<std::vector<double>> iterates;  // recorded V snapshots, if any
};

// Value iteration from V = 0 with Jacobi sweeps (every backup reads the
// previous sweep's values). Stops once the sup-norm change drops below
// tolerance*(1-beta)/(2*beta), which certifies the greedy policy to be
// tolerance-optimal; with beta == 0 a single sweep is exact.
// Throws std::runtime_error if max_iters sweeps do not converge (the
// message carries the last residual).
SolveResult value_iteration(const Model& model, const SolveOptions& options = {});

// Exact discounted value of a fixed policy: the linear fixed point
// V = C_policy + beta * P_policy * V, solved directly and refined until the
// residual is below 1e-10. Serves as ground truth for the solver and the
// simulation paths.
std::vector<double> policy_evaluation_exact(const Model& model, const Policy& policy);

struct MonotoneSolveResult {
  std::vector<double> value;
  Policy policy;
  long iterations = 0;
  double final_residual = 0.0;
  // Q evaluations actually performed (restricted sweeps plus the final
  // full-action verification sweep) versus what plain value iteration
  // would have spent on the same number of sweeps.
  long evaluations = 0;
  long plain_evaluations = 0;
};

// Value iteration that exploits the monotone structure of the optimal
// policy: states are swept in increasing queue order and each queue's
// candidate actions are cut below the action already chosen at the next
// lower occupancy. Requires the queue-monotonicity cost condition to be
// certified first and refuses to run otherwise (ConditionViolation, see
// structure.hpp). After convergence a full-action verification sweep
// checks the restricted choices; a mismatch aborts with the offending
// state, since it means the certified condition did not actually hold.
MonotoneSolveResult monotone_value_iteration(const Model& model,
                                             const SolveOptions& options = {});

}  // namespace ncrelay
