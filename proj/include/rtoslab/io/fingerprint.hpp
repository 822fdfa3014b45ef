#pragma once

#include <string>

#include "json.hpp"

namespace rtoslab::io {

/// Stable 64-bit FNV-1a digest of the canonical (sorted-key, compact) dump,
/// as 16 hex digits.
std::string fingerprint(const nlohmann::json& config);

}  // namespace rtoslab::io
