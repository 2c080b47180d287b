#include "ncrelay/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ncrelay {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRowSumTolerance = 1e-12;
}  // namespace

void ChannelConfig::validate() const {
  if (num_states < 1) throw std::invalid_argument("channel: num_states must be >= 1");
  if (!(mean_snr > 0.0)) throw std::invalid_argument("channel: mean_snr must be > 0");
  if (!(doppler_symbol_product > 0.0))
    throw std::invalid_argument("channel: doppler_symbol_product must be > 0");
}

double db_to_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

std::vector<double> equiprobable_boundaries(int num_states, double mean_snr) {
  if (num_states < 1) throw std::invalid_argument("num_states must be >= 1");
  if (!(mean_snr > 0.0)) throw std::invalid_argument("mean_snr must be > 0");
  std::vector<double> boundaries(static_cast<size_t>(num_states) + 1);
  // The instantaneous SNR of a Rayleigh channel is exponential with mean
  // mean_snr, so equal-mass boundaries are quantiles of that law.
  for (int k = 1; k <= num_states; ++k) {
    const double tail = 1.0 - static_cast<double>(k - 1) / num_states;
    boundaries[static_cast<size_t>(k) - 1] = -mean_snr * std::log(tail);
  }
  boundaries[static_cast<size_t>(num_states)] = kInf;
  boundaries[0] = 0.0;
  return boundaries;
}

namespace {

// Expected boundary crossings per second of the fading envelope, scaled by
// the symbol time via doppler_symbol_product outside.
double level_crossing_rate(double boundary, double mean_snr, double doppler) {
  if (!std::isfinite(boundary)) return 0.0;
  return std::sqrt(2.0 * std::numbers::pi * boundary / mean_snr) * doppler *
         std::exp(-boundary / mean_snr);
}

}  // namespace

std::vector<double> lcr_transition_matrix(const std::vector<double>& boundaries,
                                          double mean_snr,
                                          double doppler_symbol_product) {
  const int k = static_cast<int>(boundaries.size()) - 1;
  if (k < 1) throw std::invalid_argument("boundaries must delimit at least one region");
  std::vector<double> matrix(static_cast<size_t>(k) * k, 0.0);
  const double stationary = 1.0 / k;
  for (int row = 1; row <= k; ++row) {
    // Crossings of the region's upper boundary move up, of the lower
    // boundary move down; each per-epoch probability is rate * T / pi_k.
    const double up =
        row < k ? level_crossing_rate(boundaries[static_cast<size_t>(row)], mean_snr, 1.0) *
                      doppler_symbol_product / stationary
                : 0.0;
    const double down =
        row > 1 ? level_crossing_rate(boundaries[static_cast<size_t>(row) - 1], mean_snr, 1.0) *
                      doppler_symbol_product / stationary
                : 0.0;
    if (up >= 0.5 || down >= 0.5)
      throw std::runtime_error(
          "channel: adjacent transition probability reaches 0.5; fading too fast "
          "for the adjacent-transition model (row " +
          std::to_string(row) + ")");
    const double stay = 1.0 - up - down;
    if (stay < 0.0)
      throw std::runtime_error("channel: negative diagonal at row " + std::to_string(row));
    auto at = [&](int r, int c) -> double& {
      return matrix[static_cast<size_t>(r - 1) * k + (c - 1)];
    };
    if (row > 1) at(row, row - 1) = down;
    at(row, row) = stay;
    if (row < k) at(row, row + 1) = up;
  }
  return matrix;
}

double symbol_error_prob(double boundary_snr, Modulation modulation) {
  if (boundary_snr < 0.0) throw std::invalid_argument("boundary_snr must be >= 0");
  switch (modulation) {
    case Modulation::kBpsk:
      if (!std::isfinite(boundary_snr)) return 0.0;
      return 0.5 * std::erfc(std::sqrt(boundary_snr));
  }
  throw std::invalid_argument("unknown modulation");
}

ChannelModel::ChannelModel(std::vector<double> boundaries, std::vector<double> transition,
                           std::vector<double> error_prob)
    : num_states_(static_cast<int>(boundaries.size()) - 1),
      boundaries_(std::move(boundaries)),
      transition_(std::move(transition)),
      error_prob_(std::move(error_prob)) {
  if (num_states_ < 1) throw std::invalid_argument("channel model needs >= 1 state");
  if (transition_.size() != static_cast<size_t>(num_states_) * num_states_)
    throw std::invalid_argument("transition matrix size mismatch");
  if (error_prob_.size() != static_cast<size_t>(num_states_) + 1)
    throw std::invalid_argument("error probability vector size mismatch");
  for (int g = 1; g <= num_states_; ++g) {
    double sum = 0.0;
    for (int h = 1; h <= num_states_; ++h) sum += this->transition(g, h);
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw std::runtime_error("channel transition row " + std::to_string(g) +
                               " does not sum to 1");
  }
}

ChannelModel build_channel_model(const ChannelConfig& config) {
  config.validate();
  auto boundaries = equiprobable_boundaries(config.num_states, config.mean_snr);
  auto transition =
      lcr_transition_matrix(boundaries, config.mean_snr, config.doppler_symbol_product);
  std::vector<double> error_prob(static_cast<size_t>(config.num_states) + 1);
  for (int g = 1; g <= config.num_states + 1; ++g)
    error_prob[static_cast<size_t>(g) - 1] =
        symbol_error_prob(boundaries[static_cast<size_t>(g) - 1], config.modulation);
  return ChannelModel(std::move(boundaries), std::move(transition), std::move(error_prob));
}

}  // namespace ncrelay
