#pragma once

#include <cstdint>
#include <string>

#include "superlab/model.hpp"

namespace superlab {

/// Parse a model config: fields `types`, `a`, `b`, `eta`, `jumps` (array of
/// {type (1-based), rate, vector}). Unknown fields are rejected with ConfigError.
/// Only the shape is checked here; see validate() for the model invariants.
Mechanism parse_mechanism(const std::string& json_text);

Mechanism load_mechanism(const std::string& path);

std::string read_file(const std::string& path);

/// FNV-1a 64-bit hash, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace superlab
