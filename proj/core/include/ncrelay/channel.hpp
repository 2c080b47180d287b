#pragma once

#include <vector>

namespace ncrelay {

enum class Modulation { kBpsk };

// Finite-state Markov channel over an equiprobable partition of the
// Rayleigh-fading SNR range. Adjacent-state transition probabilities come
// from the level crossing rate of the fading envelope, so the transition
// matrix is tridiagonal and symmetric, with heavy diagonal mass in the
// slow-fading regime this model assumes.
struct ChannelConfig {
  int num_states = 8;                    // K
  double mean_snr = 1.0;                 // linear scale, > 0
  double doppler_symbol_product = 0.01;  // f_d * T, dimensionless
  Modulation modulation = Modulation::kBpsk;

  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

class ChannelModel {
 public:
  ChannelModel(std::vector<double> boundaries, std::vector<double> transition,
               std::vector<double> error_prob);

  int num_states() const { return num_states_; }

  // Lower SNR boundary of state g, g in 1..K+1; boundary(1) == 0 and
  // boundary(K+1) == +infinity.
  double boundary(int g) const { return boundaries_.at(static_cast<size_t>(g) - 1); }

  // One-step probability of moving from state g to state g_next (1-based).
  double transition(int g, int g_next) const {
    return transition_[static_cast<size_t>(g - 1) * num_states_ + (g_next - 1)];
  }

  // Stationary probability of state g; 1/K for the equiprobable partition.
  double stationary(int /*g*/) const { return 1.0 / num_states_; }

  // Symbol error probability of state g, evaluated at the state's lower
  // boundary (worst case within the region). Defined for g in 1..K+1 with
  // error_prob(K+1) == 0.
  double error_prob(int g) const { return error_prob_.at(static_cast<size_t>(g) - 1); }

  const std::vector<double>& transition_matrix() const { return transition_; }
  const std::vector<double>& boundaries() const { return boundaries_; }

 private:
  int num_states_;
  std::vector<double> boundaries_;   // K+1 entries, last is +inf
  std::vector<double> transition_;   // K*K, row-major
  std::vector<double> error_prob_;   // K+1 entries, last is 0
};

// SNR boundaries of the equiprobable partition: each of the K regions
// carries stationary mass 1/K under the exponential SNR law of Rayleigh
// fading. Returns K+1 values; the first is 0, the last +infinity.
std::vector<double> equiprobable_boundaries(int num_states, double mean_snr);

// Level-crossing-rate transition matrix for the given partition. The rate
// through boundary G is N(G) = sqrt(2*pi*G/mean_snr) * f_d * exp(-G/mean_snr);
// with equiprobable regions the adjacent-state probabilities are
// N(boundary) * T * K and the diagonal takes the remainder.
// Throws std::runtime_error if any off-diagonal reaches 0.5 or a diagonal
// would go negative (fading too fast for the adjacent-transition premise).
std::vector<double> lcr_transition_matrix(const std::vector<double>& boundaries,
                                          double mean_snr,
                                          double doppler_symbol_product);

// Symbol error probability at the given SNR; 0.5*erfc(sqrt(snr)) for BPSK.
// An infinite SNR yields 0.
double symbol_error_prob(double boundary_snr, Modulation modulation);

double db_to_linear(double snr_db);

ChannelModel build_channel_model(const ChannelConfig& config);

}  // namespace ncrelay
