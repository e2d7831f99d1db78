#pragma once

// Symmetric additive (AHE) and multiplicative (MHE) homomorphic schemes.
//
// A fresh ciphertext masks the plaintext with a PRF output indexed by a
// 64-bit nonce:  AHE  c = m + F_k(r)  (mod p)
//                MHE  c = m * G_k(r)  (mod p),  G_k(r) != 0
// Combining ciphertexts combines the masks, so a ciphertext carries the
// signed multiset of nonces whose masks it still contains. The multiset
// size is exactly what the server learns: how many rows produced a value.

#include <cstdint>
#include <utility>
#include <vector>

#include "hedb/common/bytes.hpp"
#include "hedb/crypto/keys.hpp"
#include "hedb/crypto/modarith.hpp"

namespace hedb {

using Field = Mersenne127;

inline constexpr std::uint8_t kModulusMersenne127 = 1;

// Sorted (nonce, multiplicity) pairs; multiplicity is never zero.
class NonceMultiset {
 public:
  NonceMultiset() = default;
  static NonceMultiset single(std::uint64_t nonce) {
    NonceMultiset m;
    m.entries_.emplace_back(nonce, 1);
    return m;
  }

  // this + sign * other
  NonceMultiset combined(const NonceMultiset& other, int sign) const;

  // Number of fresh ciphertexts folded in (sum of positive multiplicities
  // plus magnitude of negative ones).
  std::uint64_t cardinality() const;
  const std::vector<std::pair<std::uint64_t, std::int64_t>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  bool operator==(const NonceMultiset&) const = default;

  void write(ByteWriter& w) const;
  static NonceMultiset read(ByteReader& r);

 private:
  std::vector<std::pair<std::uint64_t, std::int64_t>> entries_;
};

struct AheCipher {
  u128 masked_sum = 0;
  NonceMultiset nonces;
  std::uint8_t modulus_id = kModulusMersenne127;

  bool operator==(const AheCipher&) const = default;
  Bytes serialize() const;
  static AheCipher parse(ByteView b);
};

struct MheCipher {
  u128 masked_product = 0;
  NonceMultiset nonces;
  std::uint8_t modulus_id = kModulusMersenne127;

  bool operator==(const MheCipher&) const = default;
  Bytes serialize() const;
  static MheCipher parse(ByteView b);
};

// Signed 64-bit integers map onto Z_p as m mod p; decoding takes the
// representative in (-p/2, p/2).
u128 encode_signed(std::int64_t v);
std::int64_t decode_signed(u128 v);

AheCipher sahe_encrypt(u128 m, const ColumnKey& key, std::uint64_t nonce);
u128 sahe_decrypt(const AheCipher& c, const ColumnKey& key);
AheCipher sahe_add(const AheCipher& a, const AheCipher& b);
AheCipher sahe_sub(const AheCipher& a, const AheCipher& b);
AheCipher sahe_add_plain(const AheCipher& a, u128 m);

MheCipher smhe_encrypt(u128 m, const ColumnKey& key, std::uint64_t nonce);
u128 smhe_decrypt(const MheCipher& c, const ColumnKey& key);
MheCipher smhe_mul(const MheCipher& a, const MheCipher& b);
MheCipher smhe_div(const MheCipher& a, const MheCipher& b);
MheCipher smhe_mul_plain(const MheCipher& a, u128 m);

// The PRF mask for one nonce (exposed for tests of the definition).
u128 sahe_mask(const ColumnKey& key, std::uint64_t nonce);
u128 smhe_mask(const ColumnKey& key, std::uint64_t nonce);

}  // namespace hedb
