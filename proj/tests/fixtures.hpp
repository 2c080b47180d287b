#pragma once

#include "ncrelay/model.hpp"
#include "ncrelay/solver.hpp"

namespace ncrelay::testing {

// The desk-scale parameter sets the experiment suite revolves around.
inline ModelParams desk_params(double p1 = 0.1, double p2 = 0.2, double eta = 2.0,
                               double xi = 4.0, double beta = 0.97,
                               double snr_db = 0.0, double fdt = 0.01) {
  ModelParams p;
  p.L1 = p.L2 = 3;
  p.p1 = p1;
  p.p2 = p2;
  p.lambda_hold = 0.05;
  p.xi_overflow = xi;
  p.tau_tx = 1.0;
  p.eta_err = eta;
  p.beta = beta;
  p.channel1.num_states = p.channel2.num_states = 8;
  p.channel1.mean_snr = p.channel2.mean_snr = db_to_linear(snr_db);
  p.channel1.doppler_symbol_product = p.channel2.doppler_symbol_product = fdt;
  return p;
}

// A small instance that solves in milliseconds.
inline ModelParams tiny_params(int K = 1, double beta = 0.9) {
  ModelParams p;
  p.L1 = p.L2 = 1;
  p.p1 = 0.3;
  p.p2 = 0.6;
  p.lambda_hold = 0.05;
  p.xi_overflow = 4.0;
  p.tau_tx = 1.0;
  p.eta_err = 2.0;
  p.beta = beta;
  p.channel1.num_states = p.channel2.num_states = K;
  p.channel1.mean_snr = p.channel2.mean_snr = 1.0;
  return p;
}

// Solves are the slow part of the suite; cache the few models the
// structural tests keep coming back to.
inline const Model& fig4_model() {
  static const Model model = Model::build(desk_params());
  return model;
}

inline const SolveResult& fig4_solution() {
  static const SolveResult result = value_iteration(fig4_model());
  return result;
}

}  // namespace ncrelay::testing
