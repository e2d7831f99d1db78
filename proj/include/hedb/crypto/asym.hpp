#pragma once

#include <array>
#include <cstdint>

#include "hedb/common/bytes.hpp"

namespace hedb {

using PublicKey32 = std::array<std::uint8_t, 32>;
using Signature64 = std::array<std::uint8_t, 64>;
using Mac16 = std::array<std::uint8_t, 16>;

struct X25519KeyPair {
  std::array<std::uint8_t, 32> secret{};
  PublicKey32 public_key{};

  static X25519KeyPair generate();
};

// Raw X25519 shared secret. Throws kAuthFailure on a low-order peer key.
std::array<std::uint8_t, 32> x25519_shared(const X25519KeyPair& self, const PublicKey32& peer);

struct Ed25519KeyPair {
  std::array<std::uint8_t, 32> seed{};
  PublicKey32 public_key{};

  static Ed25519KeyPair generate();
  static Ed25519KeyPair from_seed(ByteView seed32);
};

Signature64 ed25519_sign(const Ed25519KeyPair& key, ByteView msg);
bool ed25519_verify(const PublicKey32& pub, ByteView msg, const Signature64& sig);

// AES-128-CMAC.
Mac16 aes_cmac(ByteView key16, ByteView msg);

bool constant_time_equal(ByteView a, ByteView b);

}  // namespace hedb
