#include "hedb/crypto/prf.hpp"

#include <sodium.h>

namespace hedb {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw Error(ErrorCode::kInvalidArgument, "libsodium initialisation failed");
  }
};

void ensure_sodium() { static SodiumInit init; }

}  // namespace

Block16 prf128(const Key16& key, ByteView msg) {
  static_assert(crypto_shorthash_siphashx24_KEYBYTES == 16 && crypto_shorthash_siphashx24_BYTES == 16);
  Block16 out;
  crypto_shorthash_siphashx24(out.data(), msg.data(), msg.size(), key.data());
  return out;
}

std::uint64_t prf64(const Key16& key, ByteView msg) {
  static_assert(crypto_shorthash_siphash24_KEYBYTES == 16 && crypto_shorthash_siphash24_BYTES == 8);
  std::uint8_t out[8];
  crypto_shorthash_siphash24(out, msg.data(), msg.size(), key.data());
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(out[i]) << (8 * i);
  return v;
}

u128 block_to_u128(const Block16& b) {
  u128 v = 0;
  for (int i = 15; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

u128 prf_field(const Key16& key, std::uint64_t nonce, std::uint8_t domain) {
  std::uint8_t msg[9];
  for (int i = 0; i < 8; ++i) msg[i] = static_cast<std::uint8_t>(nonce >> (8 * i));
  msg[8] = domain;
  return Mersenne127::reduce(block_to_u128(prf128(key, msg)));
}

void prg_fill(std::span<std::uint8_t> out, const std::array<std::uint8_t, 32>& seed) {
  ensure_sodium();
  static_assert(randombytes_SEEDBYTES == 32);
  randombytes_buf_deterministic(out.data(), out.size(), seed.data());
}

}  // namespace hedb
