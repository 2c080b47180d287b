#pragma once

#include <cstdint>
#include <string>

namespace ncrelay {

// Shortest round-trip decimal form; keeps CSV output byte-stable.
std::string format_double(double value);

// FNV-1a over a file's bytes, for the artifact manifest.
uint64_t fnv1a64_file(const std::string& path);

}  // namespace ncrelay
