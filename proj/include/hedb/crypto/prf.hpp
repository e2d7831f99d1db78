#pragma once

#include <array>
#include <cstdint>

#include "hedb/common/bytes.hpp"
#include "hedb/crypto/modarith.hpp"

namespace hedb {

using Key16 = std::array<std::uint8_t, 16>;
using Block16 = std::array<std::uint8_t, 16>;

// Keyed 128-bit PRF (SipHash-2-4 with 128-bit output).
Block16 prf128(const Key16& key, ByteView msg);
// Keyed 64-bit PRF (SipHash-2-4).
std::uint64_t prf64(const Key16& key, ByteView msg);

u128 block_to_u128(const Block16& b);

// PRF over a 64-bit nonce with a one-byte domain tag, mapped into Z_p.
u128 prf_field(const Key16& key, std::uint64_t nonce, std::uint8_t domain);

// Deterministic byte stream (ChaCha20) expanded from a 32-byte seed.
void prg_fill(std::span<std::uint8_t> out, const std::array<std::uint8_t, 32>& seed);

}  // namespace hedb
