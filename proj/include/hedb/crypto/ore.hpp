#pragma once

// Block-wise order-revealing encryption with a public comparison function.
//
// The plaintext is split into big-endian digits of `block_bits` bits. Each
// ciphertext carries two halves:
//   - a left token per block: a PRF key tied to the digit prefix and the
//     digit's position under a prefix-keyed permutation;
//   - a right table per block: for every permuted slot j, the comparison of
//     the slot's digit against this ciphertext's digit, masked by
//     H(slot key, nonce) mod 3.
// compare(a, b) walks blocks, unmasks b's table entry selected by a's left
// token and stops at the first non-zero trit. The fresh nonce makes every
// encryption byte-distinct; comparison reveals the order and the index of the
// first differing block.

#include <array>
#include <cstdint>
#include <vector>

#include "hedb/common/bytes.hpp"
#include "hedb/crypto/keys.hpp"

namespace hedb {

enum class Ordering : std::int8_t { kLess = -1, kEqual = 0, kGreater = 1 };

struct OreParams {
  std::uint32_t bit_width = 32;  // 8, 32 or 64 for integers; 8*len for byte strings
  std::uint32_t block_bits = 8;  // divides bit_width, at most 8

  std::uint32_t block_count() const { return bit_width / block_bits; }
  void validate() const;
};

struct OreLeftToken {
  std::array<std::uint8_t, 16> slot_key{};
  std::uint8_t slot = 0;
  bool operator==(const OreLeftToken&) const = default;
};

struct OreCipher {
  std::uint32_t bit_width = 0;
  std::uint8_t block_bits = 0;
  std::uint32_t key_tag = 0;  // fingerprint of the encrypting key
  std::array<std::uint8_t, 16> nonce{};
  std::vector<OreLeftToken> left;  // one per block
  Bytes right;                     // block_count * 2^block_bits trits, 4 per byte

  std::uint32_t block_count() const { return static_cast<std::uint32_t>(left.size()); }
  bool operator==(const OreCipher&) const = default;

  Bytes serialize() const;
  static OreCipher parse(ByteView b);
  std::size_t serialized_size() const;
};

// m must fit in params.bit_width bits (bit_width <= 64).
OreCipher ore_encrypt(std::uint64_t m, const ColumnKey& key, const OreParams& params = {});
// Fixed-width byte string; shorter input is right-padded with zero bytes.
OreCipher ore_encrypt_bytes(ByteView m, const ColumnKey& key, const OreParams& params);

// Order-preserving offset for signed values: x + 2^(w-1).
std::uint64_t ore_offset_signed(std::int64_t v, std::uint32_t bit_width);

struct OreComparison {
  Ordering order;
  std::uint32_t first_diff_block;  // block_count when equal
};

Ordering ore_compare(const OreCipher& a, const OreCipher& b);
OreComparison ore_compare_detailed(const OreCipher& a, const OreCipher& b);

// -1/0/+1 comparator plus the five predicates built on its sign.
int ore_comparator(const OreCipher& a, const OreCipher& b);
inline bool ore_lt(const OreCipher& a, const OreCipher& b) { return ore_comparator(a, b) < 0; }
inline bool ore_le(const OreCipher& a, const OreCipher& b) { return ore_comparator(a, b) <= 0; }
inline bool ore_gt(const OreCipher& a, const OreCipher& b) { return ore_comparator(a, b) > 0; }
inline bool ore_ge(const OreCipher& a, const OreCipher& b) { return ore_comparator(a, b) >= 0; }
inline bool ore_eq(const OreCipher& a, const OreCipher& b) { return ore_comparator(a, b) == 0; }

}  // namespace hedb
