#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "ncrelay/model.hpp"
#include "ncrelay/rng.hpp"

using namespace ncrelay;
using ncrelay::testing::desk_params;
using ncrelay::testing::fig4_model;

namespace {

// Straight-line re-implementation of the cost definitions, kept deliberately
// naive; the production path must agree with it on the whole grid.
double oracle_cost(const State& s, const Action& a, const ModelParams& p,
                   const ChannelModel& ch1, const ChannelModel& ch2) {
  double total = 0.0;
  {
    int y = s.b1 - a.a1;
    int held = y > 0 ? y : 0;
    if (held > p.L1) held = p.L1;
    total += p.lambda_hold * held;
    if ((y > 0 ? y : 0) == p.L1 + 1) total += p.xi_overflow;
  }
  {
    int y = s.b2 - a.a2;
    int held = y > 0 ? y : 0;
    if (held > p.L2) held = p.L2;
    total += p.lambda_hold * held;
    if ((y > 0 ? y : 0) == p.L2 + 1) total += p.xi_overflow;
  }
  if (a.a1 == 1) total += p.eta_err * ch2.error_prob(s.g2);
  if (a.a2 == 1) total += p.eta_err * ch1.error_prob(s.g1);
  if (a.a1 + a.a2 >= 1) total += p.tau_tx;
  return total;
}

}  // namespace

TEST_CASE("queue recursion") {
  SUBCASE("transmitting from an empty queue is a no-op") {
    CHECK(next_queue_occupancy(0, 1, 0, 3) == 0);
  }
  SUBCASE("overflowed queue drops the stuck symbol before the arrival lands") {
    CHECK(next_queue_occupancy(4, 0, 1, 3) == 4);
    CHECK(next_queue_occupancy(4, 0, 0, 3) == 3);
  }
  SUBCASE("full queue stays full through one send/arrive cycle") {
    CHECK(next_queue_occupancy(3, 1, 1, 3) == 3);
  }
  SUBCASE("out-of-range inputs rejected") {
    CHECK_THROWS_AS(next_queue_occupancy(5, 0, 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(next_queue_occupancy(1, 2, 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(next_queue_occupancy(1, 0, -1, 3), std::invalid_argument);
  }
}

TEST_CASE("queue transition probabilities") {
  CHECK(queue_transition_prob(3, 1, 2, 0.1, 3) == doctest::Approx(0.9));
  CHECK(queue_transition_prob(3, 1, 3, 0.1, 3) == doctest::Approx(0.1));
  SUBCASE("lost-symbol branch: overfull queue clamps before the arrival") {
    for (const double p : {0.0, 0.3, 1.0}) {
      CHECK(queue_transition_prob(4, 0, 3, p, 3) == doctest::Approx(1.0 - p));
      CHECK(queue_transition_prob(4, 0, 4, p, 3) == doctest::Approx(p));
    }
  }
  SUBCASE("mass sits on exactly two successors") {
    const double p = 0.3;
    for (int b = 0; b <= 4; ++b)
      for (int a = 0; a <= 1; ++a) {
        double total = 0.0;
        int supported = 0;
        for (int next = 0; next <= 4; ++next) {
          const double prob = queue_transition_prob(b, a, next, p, 3);
          total += prob;
          if (prob > 0.0) ++supported;
        }
        CHECK(total == doctest::Approx(1.0));
        CHECK(supported == 2);
      }
  }
}

TEST_CASE("holding cost") {
  ModelParams p = desk_params();
  CHECK(holding_cost(-1, 3, p) == 0.0);
  CHECK(holding_cost(4, 3, p) == doctest::Approx(4.15));
  CHECK(holding_cost(2, 3, p) == doctest::Approx(0.10));

  SUBCASE("discrete convexity on the whole domain whenever overflow beats holding") {
    for (const double xi : {0.06, 1.0, 4.0}) {
      ModelParams q = p;
      q.xi_overflow = xi;
      for (int y = 0; y <= q.L1; ++y) {
        const double second_difference = holding_cost(y + 1, q.L1, q) +
                                         holding_cost(y - 1, q.L1, q) -
                                         2.0 * holding_cost(y, q.L1, q);
        CHECK(second_difference >= 0.0);
      }
    }
  }
}

TEST_CASE("immediate cost") {
  SUBCASE("idle empty relay costs nothing") {
    const Model& m = fig4_model();
    CHECK(immediate_cost({0, 0, 1, 1}, {0, 0}, m.params(), m.channel1(), m.channel2()) ==
          0.0);
  }
  SUBCASE("coded broadcast at the error ceiling") {
    // Single-state channels put both error probabilities at 1/2.
    ModelParams p = testing::tiny_params(1);
    const Model m = Model::build(p);
    CHECK(immediate_cost({1, 1, 1, 1}, {1, 1}, p, m.channel1(), m.channel2()) ==
          doctest::Approx(3.0));
  }
  SUBCASE("cross-channel pricing: a1 is charged on channel 2") {
    const Model& m = fig4_model();
    const double at_worst_g2 =
        immediate_cost({1, 0, 8, 1}, {1, 0}, m.params(), m.channel1(), m.channel2());
    const double at_best_g2 =
        immediate_cost({1, 0, 1, 8}, {1, 0}, m.params(), m.channel1(), m.channel2());
    CHECK(at_worst_g2 > at_best_g2);  // only g2 matters to a1's error term
  }
  SUBCASE("full grid matches the straight-line oracle") {
    const Model& m = fig4_model();
    for (int xi = 0; xi < m.space().size(); ++xi) {
      const State s = m.space().state(xi);
      for (int ai = 0; ai < kNumActions; ++ai) {
        const double expected =
            oracle_cost(s, kActions[ai], m.params(), m.channel1(), m.channel2());
        CHECK(m.cost(xi, ai) == doctest::Approx(expected).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("cost sanity invariants") {
  const Model& m = fig4_model();
  SUBCASE("nonnegative everywhere; holding-only when idle") {
    ModelParams varied = m.params();
    varied.tau_tx = 7.0;
    varied.eta_err = 9.0;
    for (int xi = 0; xi < m.space().size(); ++xi) {
      for (int ai = 0; ai < kNumActions; ++ai) CHECK(m.cost(xi, ai) >= 0.0);
      const State s = m.space().state(xi);
      // The idle action's cost must not move with tau or eta.
      CHECK(immediate_cost(s, {0, 0}, varied, m.channel1(), m.channel2()) ==
            immediate_cost(s, {0, 0}, m.params(), m.channel1(), m.channel2()));
    }
  }
  SUBCASE("nondecreasing in each queue state for a fixed action") {
    for (int xi = 0; xi < m.space().size(); ++xi) {
      const State s = m.space().state(xi);
      for (int ai = 0; ai < kNumActions; ++ai) {
        if (s.b1 + 1 < m.space().queue_levels(1)) {
          const State up{s.b1 + 1, s.b2, s.g1, s.g2};
          CHECK(m.cost(m.space().index(up), ai) >= m.cost(xi, ai));
        }
        if (s.b2 + 1 < m.space().queue_levels(2)) {
          const State up{s.b1, s.b2 + 1, s.g1, s.g2};
          CHECK(m.cost(m.space().index(up), ai) >= m.cost(xi, ai));
        }
      }
    }
  }
  SUBCASE("one-shot transmit and hold costs are both strictly positive") {
    for (int g2 = 1; g2 <= 8; ++g2) {
      const State s{1, 0, 1, g2};
      const double transmit =
          immediate_cost(s, {1, 0}, m.params(), m.channel1(), m.channel2());
      const double hold = immediate_cost(s, {0, 0}, m.params(), m.channel1(), m.channel2());
      CHECK(transmit == doctest::Approx(m.params().tau_tx +
                                        m.params().eta_err * m.channel2().error_prob(g2)));
      CHECK(hold == doctest::Approx(m.params().lambda_hold));
      CHECK(transmit > 0.0);
      CHECK(hold > 0.0);
    }
  }
}

TEST_CASE("state space indexing") {
  const StateSpace space(3, 3, 8, 8);
  CHECK(space.size() == 5 * 5 * 8 * 8);
  SUBCASE("dense bijection") {
    for (int i = 0; i < space.size(); ++i) CHECK(space.index(space.state(i)) == i);
  }
  SUBCASE("documented row-major order: g2 fastest, b1 slowest") {
    CHECK(space.index({0, 0, 1, 1}) == 0);
    CHECK(space.index({0, 0, 1, 2}) == 1);
    CHECK(space.index({0, 0, 2, 1}) == 8);
    CHECK(space.index({0, 1, 1, 1}) == 64);
    CHECK(space.index({4, 4, 8, 8}) == space.size() - 1);
  }
}

TEST_CASE("transition kernel") {
  SUBCASE("static channels leave at most four successors") {
    const Model m = Model::build(testing::tiny_params(1));
    for (int xi = 0; xi < m.space().size(); ++xi)
      for (int ai = 0; ai < kNumActions; ++ai)
        CHECK(m.kernel().row(xi, ai).size() <= 4);
  }
  SUBCASE("rows sum to one") {
    const Model& m = fig4_model();
    for (int xi = 0; xi < m.space().size(); ++xi)
      for (int ai = 0; ai < kNumActions; ++ai) {
        double sum = 0.0;
        for (const Transition& t : m.kernel().row(xi, ai)) sum += t.prob;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
  }
  SUBCASE("random probes factorize into two queue and two channel terms") {
    const Model& m = fig4_model();
    const ModelParams& p = m.params();
    SplitMix64 rng(7);
    for (int probe = 0; probe < 4000; ++probe) {
      const int xi = static_cast<int>(rng.next() % m.space().size());
      const int ai = static_cast<int>(rng.next() % kNumActions);
      const int xj = static_cast<int>(rng.next() % m.space().size());
      const State s = m.space().state(xi);
      const State t = m.space().state(xj);
      const Action a = kActions[ai];
      const double expected =
          queue_transition_prob(s.b1, a.a1, t.b1, p.p1, p.L1) *
          queue_transition_prob(s.b2, a.a2, t.b2, p.p2, p.L2) *
          m.channel1().transition(s.g1, t.g1) * m.channel2().transition(s.g2, t.g2);
      double found = 0.0;
      for (const Transition& entry : m.kernel().row(xi, ai))
        if (entry.next == xj) found = entry.prob;
      CHECK(found == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("model parameter validation") {
  ModelParams p = desk_params();
  SUBCASE("overflow must beat holding") {
    p.xi_overflow = p.lambda_hold;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("transmission must beat holding") {
    p.tau_tx = 0.01;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("discount strictly below one") {
    p.beta = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("arrival probabilities in range") {
    p.p1 = 1.2;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
}
