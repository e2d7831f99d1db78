#pragma once

#include <array>
#include <cstdint>

#include "hedb/common/bytes.hpp"
#include "hedb/crypto/keys.hpp"

namespace hedb {

// Deterministic encryption: synthetic IV = HMAC(k_mac, m)[0..16), body =
// AES-256-CTR(k_enc, IV, m). Equal plaintexts give equal ciphertexts.
struct DetCipher {
  Bytes bytes;  // IV || body

  bool operator==(const DetCipher&) const = default;
  Bytes serialize() const;
  static DetCipher parse(ByteView b);
};

DetCipher det_encrypt(ByteView m, const ColumnKey& key);
Bytes det_decrypt(const DetCipher& c, const ColumnKey& key);

// Randomized authenticated encryption (AES-256-GCM).
struct RndCipher {
  std::array<std::uint8_t, 12> nonce{};
  Bytes body;
  std::array<std::uint8_t, 16> tag{};

  bool operator==(const RndCipher&) const = default;
  Bytes serialize() const;
  static RndCipher parse(ByteView b);
};

RndCipher rnd_encrypt(ByteView m, const ColumnKey& key);
// Throws Error(kAuthFailure) on any tamper.
Bytes rnd_decrypt(const RndCipher& c, const ColumnKey& key);

// Raw AES-256-GCM primitives shared with the attestation channel and sealing.
RndCipher aead_seal(ByteView key32, ByteView m, ByteView aad);
Bytes aead_open(ByteView key32, const RndCipher& c, ByteView aad);

// Fixed 8-byte little-endian encoding of integers fed to DET/RND.
Bytes encode_i64(std::int64_t v);
std::int64_t decode_i64(ByteView b);

}  // namespace hedb
