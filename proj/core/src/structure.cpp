#include "ncrelay/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncrelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Advances p through [lo, hi] in lexicographic order; false once exhausted.
bool advance(Point& p, const Point& lo, const Point& hi) {
  for (int d = static_cast<int>(p.size()) - 1; d >= 0; --d) {
    if (p[d] < hi[d]) {
      ++p[d];
      for (size_t k = d + 1; k < p.size(); ++k) p[k] = lo[k];
      return true;
    }
  }
  return false;
}

std::string point_str(const Point& p) {
  std::string out = "(";
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(p[i]);
  }
  return out + ")";
}

}  // namespace

LatticeFunction::LatticeFunction(Point lower, Point upper, Eval eval)
    : lower_(std::move(lower)), upper_(std::move(upper)), eval_(std::move(eval)) {
  if (lower_.size() != upper_.size() || lower_.empty())
    throw std::invalid_argument("lattice function box dimensions mismatch");
  for (size_t d = 0; d < lower_.size(); ++d)
    if (lower_[d] > upper_[d]) throw std::invalid_argument("lattice function box is empty");
}

bool LatticeFunction::inside(std::span<const int> x) const {
  for (size_t d = 0; d < lower_.size(); ++d)
    if (x[d] < lower_[d] || x[d] > upper_[d]) return false;
  return true;
}

double LatticeFunction::operator()(std::span<const int> x) const {
  if (!inside(x)) return kInf;
  return eval_(x);
}

std::string CheckReport::to_text() const {
  std::ostringstream out;
  out << (pass ? "PASS" : "FAIL");
  if (!routes_consistent) out << " [routes disagree]";
  out << "\n";
  for (const auto& clause : clauses) {
    out << "  clause " << clause.name << ": " << (clause.pass ? "PASS" : "FAIL")
        << " margin=" << clause.margin;
    if (!clause.detail.empty()) out << " (" << clause.detail << ")";
    out << "\n";
  }
  if (witness) {
    out << "  witness at " << point_str(witness->base);
    if (witness->axis_a >= 0) out << " axes (" << witness->axis_a << ", " << witness->axis_b << ")";
    out << " violation=" << witness->violation;
    if (!witness->detail.empty()) out << " " << witness->detail;
    out << "\n";
  }
  if (!note.empty()) out << "  note: " << note << "\n";
  return out.str();
}

namespace {

// One four-point inequality instance
//   f(base + da) + f(base + db) >= f(base) + f(base + da + db),
// skipped whenever any of the four values is not finite.
struct Instance {
  double slack;
  bool applicable;
};

Instance evaluate_instance(const LatticeFunction& f, const Point& base,
                           const std::vector<int>& da, const std::vector<int>& db) {
  const size_t n = base.size();
  Point pa(n), pb(n), pab(n);
  for (size_t d = 0; d < n; ++d) {
    pa[d] = base[d] + da[d];
    pb[d] = base[d] + db[d];
    pab[d] = base[d] + da[d] + db[d];
  }
  const double f0 = f(base), fa = f(pa), fb = f(pb), fab = f(pab);
  if (!std::isfinite(f0) || !std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fab))
    return {0.0, false};
  return {fa + fb - f0 - fab, true};
}

// Scans every instance of the given direction pairs over the box and
// reports the first violation in lexicographic order. `labels` names the
// lifted axes for the witness.
CheckReport scan_direction_pairs(const LatticeFunction& f,
                                 const std::vector<std::vector<int>>& directions,
                                 const std::vector<std::pair<int, int>>& pairs,
                                 const std::vector<int>& labels, bool strict, double tol,
                                 const char* what) {
  CheckReport report;
  Point base = f.lower();
  long applicable = 0;
  do {
    for (const auto& [ia, ib] : pairs) {
      const Instance inst = evaluate_instance(f, base, directions[ia], directions[ib]);
      if (!inst.applicable) continue;
      ++applicable;
      const bool violated = strict ? inst.slack <= tol : inst.slack < -tol;
      if (violated) {
        report.pass = false;
        report.witness = CheckWitness{base, labels[ia], labels[ib],
                                      strict ? tol - inst.slack : -inst.slack,
                                      std::string(what) + " inequality violated"};
        return report;
      }
    }
  } while (advance(base, f.lower(), f.upper()));
  if (applicable == 0) report.note = "no applicable inequality instances";
  return report;
}

std::vector<int> unit(int dim, int axis, int value = 1) {
  std::vector<int> e(dim, 0);
  e[axis] = value;
  return e;
}

}  // namespace

CheckReport check_submodular(const LatticeFunction& f, int axis_i, int axis_j, bool strict,
                             double tol) {
  const int n = f.dim();
  if (axis_i < 0 || axis_j < 0 || axis_i >= n || axis_j >= n || axis_i == axis_j)
    throw std::invalid_argument("check_submodular: bad axis pair");
  std::vector<std::vector<int>> directions{unit(n, axis_i), unit(n, axis_j)};
  return scan_direction_pairs(f, directions, {{0, 1}}, {axis_i, axis_j}, strict, tol,
                              "submodularity");
}

CheckReport check_submodular_all_pairs(const LatticeFunction& f, double tol) {
  const int n = f.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      CheckReport report = check_submodular(f, i, j, false, tol);
      if (!report.pass) return report;
    }
  return {};
}

CheckReport check_lnatural(const LatticeFunction& f, double tol) {
  const int n = f.dim();
  // Instances of submodularity of f(x - z*1) in (x, z), folded back onto
  // the base point x - z*1. Axis label n stands for the shift coordinate.
  std::vector<std::vector<int>> directions;
  for (int i = 0; i < n; ++i) directions.push_back(unit(n, i));
  directions.push_back(std::vector<int>(n, -1));  // the z step
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j <= n; ++j) pairs.push_back({i, j});
  std::vector<int> labels(n + 1);
  for (int i = 0; i <= n; ++i) labels[i] = i;
  return scan_direction_pairs(f, directions, pairs, labels, false, tol, "L-natural");
}

namespace {

CheckReport check_multimodular_definitional(const LatticeFunction& f, double tol) {
  const int n = f.dim();
  // Coordinate steps of psi(x, z) = f(x1 - z, x2 - x1, ..., xn - x(n-1))
  // expressed as moves of the base point: raising x_k adds e_k - e_(k+1)
  // (just e_n for the last), raising z subtracts e_1.
  std::vector<std::vector<int>> directions;
  for (int k = 0; k < n; ++k) {
    std::vector<int> d(n, 0);
    d[k] = 1;
    if (k + 1 < n) d[k + 1] = -1;
    directions.push_back(std::move(d));
  }
  directions.push_back(unit(n, 0, -1));
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) pairs.push_back({i, j});
  std::vector<int> labels(n + 1);
  for (int i = 0; i <= n; ++i) labels[i] = i;
  return scan_direction_pairs(f, directions, pairs, labels, false, tol, "multimodularity");
}

// Two-dimensional difference criterion: supermodular plus superconvex.
CheckReport check_multimodular_differences_2d(const LatticeFunction& f, double tol) {
  CheckReport report;
  Point base = f.lower();
  do {
    const std::vector<std::vector<int>> e{unit(2, 0), unit(2, 1)};
    // Supermodularity: f(x) + f(x+e1+e2) >= f(x+e1) + f(x+e2).
    {
      const Instance inst = evaluate_instance(f, base, e[0], e[1]);
      if (inst.applicable && -inst.slack < -tol) {
        report.pass = false;
        report.witness =
            CheckWitness{base, 0, 1, inst.slack, "supermodularity inequality violated"};
        return report;
      }
    }
    // Superconvexity for both orderings:
    // f(x+e_i) - f(x) >= f(x+e_j) - f(x+e_j-e_i).
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      std::vector<int> dj_minus_di(2, 0);
      dj_minus_di[j] = 1;
      dj_minus_di[i] = -1;
      const Instance inst = evaluate_instance(f, base, e[i], dj_minus_di);
      if (inst.applicable && inst.slack < -tol) {
        report.pass = false;
        report.witness =
            CheckWitness{base, i, j, -inst.slack, "superconvexity inequality violated"};
        return report;
      }
    }
  } while (advance(base, f.lower(), f.upper()));
  return report;
}

}  // namespace

CheckReport check_multimodular(const LatticeFunction& f, double tol) {
  CheckReport definitional = check_multimodular_definitional(f, tol);
  if (f.dim() == 2) {
    const CheckReport differences = check_multimodular_differences_2d(f, tol);
    if (differences.pass != definitional.pass) {
      definitional.routes_consistent = false;
      definitional.note =
          "definitional and difference-criterion routes disagree: definitional " +
          std::string(definitional.pass ? "PASS" : "FAIL") + ", difference " +
          std::string(differences.pass ? "PASS" : "FAIL");
    }
  }
  return definitional;
}

std::vector<std::vector<int>> unimodular_block_matrix(int n, int split) {
  if (n < 1 || split < 0 || split > n)
    throw std::invalid_argument("unimodular_block_matrix: bad block split");
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 0));
  for (int r = 0; r < split; ++r)
    for (int c = r; c < split; ++c) m[r][c] = -1;  // minus upper-triangular ones
  for (int r = split; r < n; ++r)
    for (int c = split; c <= r; ++c) m[r][c] = 1;  // lower-triangular ones
  return m;
}

std::vector<std::vector<int>> unimodular_block_matrix_inverse(int n, int split) {
  if (n < 1 || split < 0 || split > n)
    throw std::invalid_argument("unimodular_block_matrix: bad block split");
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 0));
  // Inverse of an all-ones triangular matrix is bidiagonal.
  for (int r = 0; r < split; ++r) {
    m[r][r] = -1;
    if (r + 1 < split) m[r][r + 1] = 1;
  }
  for (int r = split; r < n; ++r) {
    m[r][r] = 1;
    if (r - 1 >= split) m[r][r - 1] = -1;
  }
  return m;
}

LatticeFunction unimodular_transform(const LatticeFunction& f, int split, int sign,
                                     bool apply_inverse) {
  const int n = f.dim();
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
  std::vector<std::vector<int>> a =
      apply_inverse ? unimodular_block_matrix_inverse(n, split) : unimodular_block_matrix(n, split);
  std::vector<std::vector<int>> a_inv =
      apply_inverse ? unimodular_block_matrix(n, split) : unimodular_block_matrix_inverse(n, split);
  for (auto& row : a)
    for (int& v : row) v *= sign;
  for (auto& row : a_inv)
    for (int& v : row) v *= sign;

  // The composed domain is {x : sign*A*x in f.box}; its bounding box is the
  // coordinate-wise range of sign*A^-1 over the corners of f's box.
  Point lo(n, 0), hi(n, 0);
  for (int r = 0; r < n; ++r) {
    long lo_sum = 0, hi_sum = 0;
    for (int c = 0; c < n; ++c) {
      const int coeff = a_inv[r][c];
      lo_sum += coeff * static_cast<long>(coeff > 0 ? f.lower()[c] : f.upper()[c]);
      hi_sum += coeff * static_cast<long>(coeff > 0 ? f.upper()[c] : f.lower()[c]);
    }
    lo[r] = static_cast<int>(lo_sum);
    hi[r] = static_cast<int>(hi_sum);
    if (lo[r] > hi[r]) throw std::invalid_argument("transformed box is empty");
  }

  LatticeFunction base = f;
  auto eval = [base, a](std::span<const int> x) -> double {
    const int m = static_cast<int>(a.size());
    Point mapped(m, 0);
    for (int r = 0; r < m; ++r) {
      int acc = 0;
      for (int c = 0; c < m; ++c) acc += a[r][c] * x[c];
      mapped[r] = acc;
    }
    return base(mapped);
  };
  return LatticeFunction(std::move(lo), std::move(hi), std::move(eval));
}

CheckReport check_stochastic_dominance(const std::vector<double>& matrix, int num_states,
                                       double tol) {
  if (num_states < 1 || matrix.size() != static_cast<size_t>(num_states) * num_states)
    throw std::invalid_argument("dominance check: matrix size mismatch");
  for (int g = 0; g < num_states; ++g) {
    double sum = 0.0;
    for (int h = 0; h < num_states; ++h) {
      const double p = matrix[static_cast<size_t>(g) * num_states + h];
      if (p < -kProbTolerance)
        throw std::invalid_argument("dominance check: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("dominance check: row " + std::to_string(g + 1) +
                                  " is not stochastic");
  }

  CheckReport report;
  // Upper-tail sums characterize dominance over all nondecreasing test
  // functions; accumulate right to left for accuracy.
  auto tails = [&](int g) {
    std::vector<double> t(num_states + 1, 0.0);
    for (int m = num_states - 1; m >= 0; --m)
      t[m] = t[m + 1] + matrix[static_cast<size_t>(g) * num_states + m];
    return t;
  };
  std::vector<double> lower = tails(0);
  for (int g = 1; g < num_states; ++g) {
    std::vector<double> upper = tails(g);
    for (int m = 0; m < num_states; ++m) {
      if (upper[m] < lower[m] - tol) {
        report.pass = false;
        report.witness = CheckWitness{Point{g, m + 1}, -1, -1, lower[m] - upper[m],
                                      "upper-tail sum decreases from row " +
                                          std::to_string(g) + " to row " +
                                          std::to_string(g + 1) + " at m=" +
                                          std::to_string(m + 1)};
        return report;
      }
    }
    lower.swap(upper);
  }
  return report;
}

namespace {

ConditionClause overflow_cost_clause(const ModelParams& p) {
  const double bound = 2.0 * p.lambda_hold + p.eta_err + p.tau_tx;
  ConditionClause clause;
  clause.name = "xi_overflow >= 2*lambda_hold + eta_err + tau_tx";
  clause.margin = p.xi_overflow - bound;
  clause.pass = clause.margin >= -kProbTolerance;
  clause.detail = "bound=" + std::to_string(bound);
  return clause;
}

void append_channel_clauses(std::vector<ConditionClause>& clauses, const ChannelModel& ch,
                            double beta, const std::string& label) {
  {
    ConditionClause clause;
    clause.name = label + " error probability nonincreasing";
    double min_drop = kInf;
    int arg = 1;
    for (int g = 1; g <= ch.num_states(); ++g) {
      const double drop = ch.error_prob(g) - ch.error_prob(g + 1);
      if (drop < min_drop) {
        min_drop = drop;
        arg = g;
      }
    }
    clause.margin = min_drop;
    clause.pass = min_drop >= -kProbTolerance;
    clause.detail = "tightest at g=" + std::to_string(arg);
    clauses.push_back(std::move(clause));
  }
  {
    ConditionClause clause;
    clause.name = label + " transitions stochastically nondecreasing";
    const CheckReport dom = check_stochastic_dominance(ch.transition_matrix(), ch.num_states());
    clause.pass = dom.pass;
    clause.margin = dom.pass ? 0.0 : -dom.witness->violation;
    if (!dom.pass) clause.detail = dom.witness->detail;
    clauses.push_back(std::move(clause));
  }
  {
    // beta <= drop(g) / sum_g' P(g, g') * drop(g') must hold at every g,
    // with the error probability beyond the best state taken as zero.
    ConditionClause clause;
    clause.name = label + " discount bound";
    double min_margin = kInf;
    std::string per_state;
    for (int g = 1; g <= ch.num_states(); ++g) {
      const double numerator = ch.error_prob(g) - ch.error_prob(g + 1);
      double denominator = 0.0;
      for (int h = std::max(1, g - 1); h <= std::min(ch.num_states(), g + 1); ++h)
        denominator += ch.transition(g, h) * (ch.error_prob(h) - ch.error_prob(h + 1));
      const double ratio = denominator > 0.0 ? numerator / denominator : kInf;
      const double margin = ratio - beta;
      if (!per_state.empty()) per_state += ", ";
      per_state += "g=" + std::to_string(g) + ": " + std::to_string(margin);
      min_margin = std::min(min_margin, margin);
    }
    clause.margin = min_margin;
    clause.pass = min_margin >= -kProbTolerance;
    clause.detail = per_state;
    clauses.push_back(std::move(clause));
  }
}

}  // namespace

CheckReport check_sufficient_conditions(const ModelParams& params,
                                        const ChannelModel& channel1,
                                        const ChannelModel& channel2,
                                        SufficientCondition which) {
  CheckReport report;
  report.clauses.push_back(overflow_cost_clause(params));
  switch (which) {
    case SufficientCondition::kQueueMonotone:
      break;
    case SufficientCondition::kJointQueueMonotone: {
      ConditionClause arrivals;
      arrivals.name = "p1 == p2 == 0.5";
      arrivals.margin = -std::max(std::abs(params.p1 - 0.5), std::abs(params.p2 - 0.5));
      arrivals.pass = arrivals.margin >= -kProbTolerance;
      report.clauses.push_back(std::move(arrivals));

      ConditionClause discount;
      const double bound =
          2.0 * (params.tau_tx - params.lambda_hold) / (params.tau_tx + params.eta_err);
      discount.name = "beta <= 2*(tau_tx - lambda_hold)/(tau_tx + eta_err)";
      discount.margin = bound - params.beta;
      discount.pass = discount.margin >= -kProbTolerance;
      discount.detail = "bound=" + std::to_string(bound);
      report.clauses.push_back(std::move(discount));
      break;
    }
    case SufficientCondition::kChannelMonotone:
      append_channel_clauses(report.clauses, channel1, params.beta, "channel1");
      append_channel_clauses(report.clauses, channel2, params.beta, "channel2");
      break;
  }
  for (const auto& clause : report.clauses) report.pass = report.pass && clause.pass;
  return report;
}

GameCheck check_game_equilibria(std::span<const double, 4> q, double tol) {
  GameCheck result;
  const auto value = [&](int a1, int a2) { return q[2 * a1 + a2]; };
  result.supermodular_margin = value(1, 0) + value(0, 1) - value(0, 0) - value(1, 1);
  result.strictly_coordinating = result.supermodular_margin > tol;
  for (int a1 = 0; a1 <= 1; ++a1)
    for (int a2 = 0; a2 <= 1; ++a2) {
      // A pure equilibrium of the common-utility game: no unilateral
      // deviation lowers the cost.
      const bool stable = value(a1, a2) <= value(1 - a1, a2) + tol &&
                          value(a1, a2) <= value(a1, 1 - a2) + tol;
      result.equilibrium[2 * a1 + a2] = stable;
    }
  result.has_coordination_equilibria = result.equilibrium[0] && result.equilibrium[3];
  return result;
}

CheckReport check_coordination_equilibria(const Model& model, std::span<const double> q,
                                          double tol, int min_queue_occupancy) {
  CheckReport report;
  const auto& space = model.space();
  for (int xi = 0; xi < space.size(); ++xi) {
    const State s = space.state(xi);
    if (s.b1 >= model.params().L1 + 1 || s.b2 >= model.params().L2 + 1) continue;
    if (s.b1 < min_queue_occupancy || s.b2 < min_queue_occupancy) continue;
    const GameCheck game = check_game_equilibria(
        std::span<const double, 4>(q.data() + static_cast<size_t>(xi) * kNumActions, 4), tol);
    if (!game.strictly_coordinating || !game.has_coordination_equilibria) {
      report.pass = false;
      report.witness = CheckWitness{
          Point{s.b1, s.b2, s.g1, s.g2}, -1, -1,
          game.strictly_coordinating ? 0.0 : -game.supermodular_margin,
          game.strictly_coordinating
              ? "both-transmit/both-hold equilibria missing"
              : "negated Q not strictly supermodular in the actions"};
      return report;
    }
  }
  return report;
}

const char* axis_name(int axis) {
  switch (axis) {
    case kAxisB1: return "b1";
    case kAxisB2: return "b2";
    case kAxisG1: return "g1";
    case kAxisG2: return "g2";
  }
  return "?";
}

CheckReport check_monotone_policy(const Model& model, const Policy& policy,
                                  std::span<const int> action_components,
                                  std::span<const int> axes) {
  const auto& space = model.space();
  if (static_cast<int>(policy.action.size()) != space.size())
    throw std::invalid_argument("policy does not cover the state space");
  for (int axis : axes)
    if (axis < kAxisB1 || axis > kAxisG2)
      throw std::invalid_argument("check_monotone_policy: bad axis");
  for (int comp : action_components)
    if (comp != 0 && comp != 1)
      throw std::invalid_argument("check_monotone_policy: bad action component");

  CheckReport report;
  for (int xi = 0; xi < space.size(); ++xi) {
    const State s = space.state(xi);
    for (int axis : axes) {
      State up = s;
      switch (axis) {
        case kAxisB1: ++up.b1; break;
        case kAxisB2: ++up.b2; break;
        case kAxisG1: ++up.g1; break;
        case kAxisG2: ++up.g2; break;
      }
      if (!space.contains(up)) continue;
      const Action low_action = policy.at(xi);
      const Action up_action = policy.at(space.index(up));
      for (int comp : action_components) {
        const int low = comp == 0 ? low_action.a1 : low_action.a2;
        const int high = comp == 0 ? up_action.a1 : up_action.a2;
        if (high < low) {
          report.pass = false;
          report.witness = CheckWitness{
              Point{s.b1, s.b2, s.g1, s.g2}, axis, -1, static_cast<double>(low - high),
              std::string("a") + (comp == 0 ? "1" : "2") + " drops from " +
                  std::to_string(low) + " to " + std::to_string(high) + " as " +
                  axis_name(axis) + " steps up"};
          return report;
        }
      }
    }
  }
  return report;
}

namespace {

// Runs `slice_check` over every assignment of the fixed coordinates and
// returns the first failing slice, annotated.
template <typename MakeSlice>
CheckReport for_each_queue_slice(const Model& model, int queue, MakeSlice&& slice_check) {
  const auto& space = model.space();
  const int other_levels = space.queue_levels(queue == 1 ? 2 : 1);
  for (int b_other = 0; b_other < other_levels; ++b_other)
    for (int g1 = 1; g1 <= space.channel_states(1); ++g1)
      for (int g2 = 1; g2 <= space.channel_states(2); ++g2)
        for (int a_other = 0; a_other <= 1; ++a_other) {
          CheckReport report = slice_check(b_other, g1, g2, a_other);
          if (!report.pass) {
            report.note = "slice " + std::string(queue == 1 ? "b2" : "b1") + "=" +
                          std::to_string(b_other) + ", g1=" + std::to_string(g1) +
                          ", g2=" + std::to_string(g2) + ", a" + (queue == 1 ? "2" : "1") +
                          "=" + std::to_string(a_other) +
                          (report.note.empty() ? "" : "; " + report.note);
            return report;
          }
        }
  return {};
}

LatticeFunction own_queue_action_slice(const Model& model, std::span<const double> q,
                                       int queue, int b_other, int g1, int g2,
                                       int a_other) {
  const auto& space = model.space();
  const int cap = queue == 1 ? model.params().L1 : model.params().L2;
  // Copy the slice so the lattice function owns its data.
  std::vector<double> values(static_cast<size_t>(cap + 2) * 2);
  for (int b = 0; b <= cap + 1; ++b)
    for (int a = 0; a <= 1; ++a) {
      const State s = queue == 1 ? State{b, b_other, g1, g2} : State{b_other, b, g1, g2};
      const Action act = queue == 1 ? Action{a, a_other} : Action{a_other, a};
      values[static_cast<size_t>(b) * 2 + a] =
          q[static_cast<size_t>(space.index(s)) * kNumActions + action_index(act)];
    }
  return LatticeFunction(
      Point{0, 0}, Point{cap + 1, 1},
      [values = std::move(values)](std::span<const int> x) {
        return values[static_cast<size_t>(x[0]) * 2 + x[1]];
      });
}

}  // namespace

CheckReport check_q_lnatural_queue_slices(const Model& model, std::span<const double> q,
                                          int queue, double tol) {
  if (queue != 1 && queue != 2) throw std::invalid_argument("queue must be 1 or 2");
  return for_each_queue_slice(model, queue, [&](int b_other, int g1, int g2, int a_other) {
    return check_lnatural(own_queue_action_slice(model, q, queue, b_other, g1, g2, a_other),
                          tol);
  });
}

CheckReport check_q_multimodular_transformed_slices(const Model& model,
                                                    std::span<const double> q, int queue,
                                                    double tol) {
  if (queue != 1 && queue != 2) throw std::invalid_argument("queue must be 1 or 2");
  return for_each_queue_slice(model, queue, [&](int b_other, int g1, int g2, int a_other) {
    const LatticeFunction slice =
        own_queue_action_slice(model, q, queue, b_other, g1, g2, a_other);
    // (y, a) -> (y + a, a) is minus the block matrix with a full upper
    // block; the image is exactly the post-departure coordinates.
    const LatticeFunction transformed =
        unimodular_transform(slice, /*split=*/2, /*sign=*/-1, /*apply_inverse=*/false);
    return check_multimodular(transformed, tol);
  });
}

CheckReport check_q_submodular_channel_slices(const Model& model, std::span<const double> q,
                                              int queue, double tol) {
  if (queue != 1 && queue != 2) throw std::invalid_argument("queue must be 1 or 2");
  const auto& space = model.space();
  const int cap = queue == 1 ? model.params().L1 : model.params().L2;
  const int cross_channel = queue == 1 ? 2 : 1;
  const int cross_states = space.channel_states(cross_channel);
  const int own_levels = space.queue_levels(queue == 1 ? 2 : 1);
  const int own_states = space.channel_states(queue);

  for (int b_other = 0; b_other < own_levels; ++b_other)
    for (int g_own = 1; g_own <= own_states; ++g_own)
      for (int a_other = 0; a_other <= 1; ++a_other) {
        std::vector<double> values(static_cast<size_t>(cap + 2) * cross_states * 2);
        for (int b = 0; b <= cap + 1; ++b)
          for (int gc = 1; gc <= cross_states; ++gc)
            for (int a = 0; a <= 1; ++a) {
              const State s = queue == 1 ? State{b, b_other, g_own, gc}
                                         : State{b_other, b, gc, g_own};
              const Action act = queue == 1 ? Action{a, a_other} : Action{a_other, a};
              values[(static_cast<size_t>(b) * cross_states + (gc - 1)) * 2 + a] =
                  q[static_cast<size_t>(space.index(s)) * kNumActions + action_index(act)];
            }
        LatticeFunction f(
            Point{0, 1, 0}, Point{cap + 1, cross_states, 1},
            [values = std::move(values), cross_states](std::span<const int> x) {
              return values[(static_cast<size_t>(x[0]) * cross_states + (x[1] - 1)) * 2 + x[2]];
            });
        CheckReport report = check_submodular_all_pairs(f, tol);
        if (!report.pass) {
          report.note = "slice " + std::string(queue == 1 ? "b2" : "b1") + "=" +
                        std::to_string(b_other) + ", g" + std::to_string(queue) + "=" +
                        std::to_string(g_own) + ", a" + (queue == 1 ? "2" : "1") + "=" +
                        std::to_string(a_other);
          return report;
        }
      }
  return {};
}

}  // namespace ncrelay
