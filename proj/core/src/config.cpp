#include "ncrelay/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ncrelay {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + value +
                                "' is not a number");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long parsed = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + value +
                                "' is not an integer");
  }
}

}  // namespace

KeyValues parse_flat_config(std::istream& in) {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");
    if (!kv.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_flat_config(in);
}

std::optional<std::string> get_string(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  return it->second;
}

double require_double(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw std::invalid_argument("config: missing key '" + key + "'");
  return parse_double(key, it->second);
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return parse_double(key, it->second);
}

long get_long(const KeyValues& kv, const std::string& key, long fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return parse_long(key, it->second);
}

namespace {

ChannelConfig channel_from_config(const KeyValues& kv, const std::string& prefix) {
  ChannelConfig config;
  config.num_states = static_cast<int>(get_long(kv, prefix + ".K", config.num_states));
  config.mean_snr = db_to_linear(get_double(kv, prefix + ".mean_snr_db", 0.0));
  config.doppler_symbol_product =
      get_double(kv, prefix + ".doppler_symbol_product", config.doppler_symbol_product);
  if (const auto modulation = get_string(kv, prefix + ".modulation")) {
    if (*modulation != "BPSK")
      throw std::invalid_argument("config: unsupported modulation '" + *modulation + "'");
    config.modulation = Modulation::kBpsk;
  }
  return config;
}

}  // namespace

ModelParams params_from_config(const KeyValues& kv) {
  ModelParams params;
  params.L1 = static_cast<int>(get_long(kv, "L1", params.L1));
  params.L2 = static_cast<int>(get_long(kv, "L2", params.L2));
  params.p1 = require_double(kv, "p1");
  params.p2 = require_double(kv, "p2");
  params.lambda_hold = require_double(kv, "lambda_hold");
  params.xi_overflow = require_double(kv, "xi_overflow");
  params.tau_tx = require_double(kv, "tau_tx");
  params.eta_err = require_double(kv, "eta_err");
  params.beta = require_double(kv, "beta");
  params.channel1 = channel_from_config(kv, "channel1");
  params.channel2 = channel_from_config(kv, "channel2");
  params.validate();
  return params;
}

}  // namespace ncrelay
