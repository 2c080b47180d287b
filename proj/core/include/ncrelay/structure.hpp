#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncrelay/model.hpp"
#include "ncrelay/solver.hpp"

namespace ncrelay {

using Point = std::vector<int>;

// A real-valued function on a finite integer box. Outside the declared
// box evaluation yields +infinity (the effective-domain convention);
// checkers skip any inequality instance that touches an infinite value.
// Evaluation must be pure: same point, same value.
class LatticeFunction {
 public:
  using Eval = std::function<double(std::span<const int>)>;

  LatticeFunction(Point lower, Point upper, Eval eval);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }

  bool inside(std::span<const int> x) const;
  double operator()(std::span<const int> x) const;

 private:
  Point lower_;
  Point upper_;
  Eval eval_;
};

// Inequality checks ignore violations smaller than this; probability-level
// checks (row sums, dominance) use kProbTolerance instead.
inline constexpr double kCheckTolerance = 1e-9;
inline constexpr double kProbTolerance = 1e-12;

struct CheckWitness {
  Point base;                  // lattice point (or coordinate tuple) at fault
  int axis_a = -1;             // axis pair of the violated inequality, if any
  int axis_b = -1;
  double violation = 0.0;      // magnitude by which the inequality failed
  std::string detail;
};

struct ConditionClause {
  std::string name;
  bool pass = true;
  double margin = 0.0;  // >= 0 means satisfied; most negative clause reported
  std::string detail;
};

struct CheckReport {
  bool pass = true;
  std::optional<CheckWitness> witness;       // first violation in scan order
  std::vector<ConditionClause> clauses;      // for condition predicates
  bool routes_consistent = true;             // dual-route checkers only
  std::string note;

  std::string to_text() const;
};

// Thrown when an operation that requires a certified structural condition
// is invoked while the condition check fails.
class ConditionViolation : public std::runtime_error {
 public:
  ConditionViolation(std::string what, CheckReport report)
      : std::runtime_error(std::move(what)), report(std::move(report)) {}

  CheckReport report;
};

// f(x+e_i) + f(x+e_j) >= f(x) + f(x+e_i+e_j) at every point of the box
// where all four evaluations are finite. The strict variant demands slack
// greater than the tolerance everywhere.
CheckReport check_submodular(const LatticeFunction& f, int axis_i, int axis_j,
                             bool strict = false, double tol = kCheckTolerance);

// Submodularity over every axis pair of the box.
CheckReport check_submodular_all_pairs(const LatticeFunction& f,
                                       double tol = kCheckTolerance);

// Discrete convexity in the L-natural sense: the diagonally shifted
// function psi(x, z) = f(x - z*1) is submodular in (x, z). In one
// dimension this reduces to ordinary discrete convexity.
CheckReport check_lnatural(const LatticeFunction& f, double tol = kCheckTolerance);

// Multimodularity: psi(x, z) = f(x1 - z, x2 - x1, ..., xn - x(n-1)) is
// submodular in (x, z). For two-dimensional functions the result is
// cross-checked against the equivalent difference criterion (supermodular
// plus superconvex); a disagreement between the two routes is flagged via
// routes_consistent and never silently resolved.
CheckReport check_multimodular(const LatticeFunction& f, double tol = kCheckTolerance);

// The unimodular block matrix with an upper-triangular all-ones block of
// size `split` (negated) and a lower-triangular all-ones block of size
// n - split. Multimodular and L-natural-convex functions are images of one
// another under these maps.
std::vector<std::vector<int>> unimodular_block_matrix(int n, int split);
std::vector<std::vector<int>> unimodular_block_matrix_inverse(int n, int split);

// Composes f with sign*M (or sign*M^-1) for M the block matrix above.
// The result lives on the bounding box of the preimage of f's box, with
// +infinity filling the corners the map does not reach; transforming back
// reproduces f pointwise.
LatticeFunction unimodular_transform(const LatticeFunction& f, int split, int sign,
                                     bool apply_inverse);

// First-order stochastic dominance of a row-stochastic matrix in its row
// index: every upper-tail sum is nondecreasing from each row to the next.
// Throws std::invalid_argument if the matrix is not row-stochastic.
CheckReport check_stochastic_dominance(const std::vector<double>& matrix,
                                       int num_states,
                                       double tol = kProbTolerance);

// Sufficient conditions under which the optimal policy provably inherits
// monotone structure.
enum class SufficientCondition {
  // Overflow cost dominates: xi_overflow >= 2*lambda + eta + tau. Makes
  // each a_i nondecreasing in its own queue state b_i.
  kQueueMonotone,
  // Additionally equiprobable arrivals (p = 0.5) and
  // beta <= 2*(tau - lambda)/(tau + eta). Makes (a1, a2) jointly
  // nondecreasing in (b1, b2).
  kJointQueueMonotone,
  // Queue condition plus channel-side requirements: nonincreasing error
  // probability, stochastic dominance of the channel transitions, and a
  // per-state discount bound. Makes a_i nondecreasing in (b_i, g_-i).
  kChannelMonotone,
};

CheckReport check_sufficient_conditions(const ModelParams& params,
                                        const ChannelModel& channel1,
                                        const ChannelModel& channel2,
                                        SufficientCondition which);

// One state's 2x2 coordination game between the two departure decisions,
// with utility -Q. Indexed by action_index.
struct GameCheck {
  bool strictly_coordinating = false;  // -Q strictly supermodular in (a1, a2)
  double supermodular_margin = 0.0;    // Q(1,0)+Q(0,1)-Q(0,0)-Q(1,1)
  std::array<bool, 4> equilibrium{};   // pure Nash equilibria by action index
  bool has_coordination_equilibria = false;  // (0,0) and (1,1) both equilibria
};

GameCheck check_game_equilibria(std::span<const double, 4> q_values,
                                double tol = kCheckTolerance);

// Applies the game check at every state with both queues below overflow:
// passes iff -Q is strictly supermodular in the actions and (0,0) and
// (1,1) are both pure equilibria everywhere there. min_queue_occupancy
// narrows the scan to states with both queues at least that full; at an
// empty queue the transmit deviation is free of holding relief, so the
// both-transmit equilibrium cannot exist there whenever errors are priced.
CheckReport check_coordination_equilibria(const Model& model,
                                          std::span<const double> q,
                                          double tol = kCheckTolerance,
                                          int min_queue_occupancy = 0);

// State axes usable in monotonicity checks, in CSV column order.
enum StateAxis : int { kAxisB1 = 0, kAxisB2 = 1, kAxisG1 = 2, kAxisG2 = 3 };

const char* axis_name(int axis);

// Componentwise monotonicity of the chosen action components along the
// chosen state axes (all other coordinates held fixed): passes iff every
// unit step up any chosen axis never decreases any chosen component.
CheckReport check_monotone_policy(const Model& model, const Policy& policy,
                                  std::span<const int> action_components,
                                  std::span<const int> axes);

// Structural checks of a converged Q table, sliced per the statements that
// motivate them. `queue` selects i in {1, 2}; every slice fixes all other
// coordinates including the other queue's action.
CheckReport check_q_lnatural_queue_slices(const Model& model, std::span<const double> q,
                                          int queue, double tol = kCheckTolerance);
// Same slices pushed through the (b, a) -> (b - a, a) change of
// coordinates, which must come out multimodular exactly when the original
// is L-natural convex.
CheckReport check_q_multimodular_transformed_slices(const Model& model,
                                                    std::span<const double> q,
                                                    int queue,
                                                    double tol = kCheckTolerance);
// Pairwise submodularity of Q over (b_i, g_-i, a_i), the shape behind
// monotonicity in the cross channel.
CheckReport check_q_submodular_channel_slices(const Model& model,
                                              std::span<const double> q, int queue,
                                              double tol = kCheckTolerance);

}  // namespace ncrelay
