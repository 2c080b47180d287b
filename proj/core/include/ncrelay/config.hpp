#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "ncrelay/model.hpp"

namespace ncrelay {

// Flat key/value configuration: one `key = value` pair per line, `#` starts
// a comment. Keys are namespaced with dots and ordered lexicographically.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_flat_config(std::istream& in);
KeyValues load_flat_config(const std::string& path);

// Model parameters from a configuration. Keys are named exactly after the
// ModelParams fields (L1, p1, lambda_hold, ...); channels use
// channelN.K, channelN.mean_snr_db, channelN.doppler_symbol_product and
// channelN.modulation. Mean SNR is given in dB and converted once here;
// everything downstream is linear scale. Unknown model keys and invalid
// values raise std::invalid_argument.
ModelParams params_from_config(const KeyValues& kv);

// Typed accessors shared by the experiment loader.
std::optional<std::string> get_string(const KeyValues& kv, const std::string& key);
double require_double(const KeyValues& kv, const std::string& key);
double get_double(const KeyValues& kv, const std::string& key, double fallback);
long get_long(const KeyValues& kv, const std::string& key, long fallback);

}  // namespace ncrelay
