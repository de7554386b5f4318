#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace reljudge {

// Hex-encoded SHA-256 of data.
std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256(data) as a big-endian integer. Used as a keyed
// uniform source for deterministic sampling.
std::uint64_t sha256_u64(std::string_view data);

} // namespace reljudge
