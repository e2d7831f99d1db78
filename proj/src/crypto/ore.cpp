#include "hedb/crypto/ore.hpp"

#include <numeric>

#include "hedb/crypto/prf.hpp"

namespace hedb {

namespace {

constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint8_t kTagOre = 0xA3;

struct BlockContext {
  Key16 prefix_key;                 // F(k1, i || prefix)
  std::vector<std::uint8_t> perm;   // digit -> slot
  std::vector<std::uint8_t> inv;    // slot -> digit
};

// Digits of a big-endian byte string, block_bits each.
std::vector<std::uint8_t> split_digits(ByteView value, const OreParams& p) {
  std::vector<std::uint8_t> digits(p.block_count());
  const std::uint32_t mask = (1u << p.block_bits) - 1;
  for (std::uint32_t i = 0; i < digits.size(); ++i) {
    std::uint32_t bit = i * p.block_bits;  // offset from the most significant bit
    std::uint32_t byte = bit / 8, shift = 8 - (bit % 8) - p.block_bits;
    digits[i] = static_cast<std::uint8_t>((value[byte] >> shift) & mask);
  }
  return digits;
}

BlockContext block_context(const ColumnKey& key, std::uint32_t index, const std::vector<std::uint8_t>& digits,
                           const OreParams& p) {
  ByteWriter msg(8 + index);
  msg.u32(index);
  msg.u32(p.block_bits);
  msg.raw(ByteView(digits.data(), index));

  BlockContext ctx;
  ctx.prefix_key = prf128(key.sub_key(0), msg.bytes());

  // Prefix-keyed permutation of the digit domain (Fisher-Yates over a PRG).
  std::array<std::uint8_t, 32> seed{};
  Block16 s0 = prf128(key.sub_key(1), msg.bytes());
  msg.u8(0xff);
  Block16 s1 = prf128(key.sub_key(1), msg.bytes());
  std::copy(s0.begin(), s0.end(), seed.begin());
  std::copy(s1.begin(), s1.end(), seed.begin() + 16);

  const std::uint32_t domain = 1u << p.block_bits;
  ctx.perm.resize(domain);
  std::iota(ctx.perm.begin(), ctx.perm.end(), 0);
  std::vector<std::uint8_t> rnd(4 * domain);
  prg_fill(rnd, seed);
  for (std::uint32_t i = domain - 1; i > 0; --i) {
    std::uint32_t r = static_cast<std::uint32_t>(rnd[4 * i]) | rnd[4 * i + 1] << 8 | rnd[4 * i + 2] << 16 |
                      static_cast<std::uint32_t>(rnd[4 * i + 3]) << 24;
    std::swap(ctx.perm[i], ctx.perm[r % (i + 1)]);
  }
  ctx.inv.resize(domain);
  for (std::uint32_t d = 0; d < domain; ++d) ctx.inv[ctx.perm[d]] = static_cast<std::uint8_t>(d);
  return ctx;
}

Key16 slot_key(const Key16& prefix_key, std::uint32_t slot) {
  std::uint8_t msg[2] = {static_cast<std::uint8_t>(slot), static_cast<std::uint8_t>(slot >> 8)};
  return prf128(prefix_key, msg);
}

std::uint8_t mask_trit(const Key16& key, const std::array<std::uint8_t, 16>& nonce) {
  return static_cast<std::uint8_t>(prf64(key, nonce) % 3);
}

std::uint8_t get_trit(const Bytes& packed, std::size_t idx) { return (packed[idx / 4] >> (2 * (idx % 4))) & 3; }

void set_trit(Bytes& packed, std::size_t idx, std::uint8_t v) {
  packed[idx / 4] = static_cast<std::uint8_t>(packed[idx / 4] | (v << (2 * (idx % 4))));
}

OreCipher encrypt_digits(const std::vector<std::uint8_t>& digits, const ColumnKey& key, const OreParams& p) {
  if (key.scheme != Scheme::kOre) throw Error(ErrorCode::kSchemeMismatch, "expected ORE key");
  OreCipher c;
  c.bit_width = p.bit_width;
  c.block_bits = static_cast<std::uint8_t>(p.block_bits);
  c.key_tag = key.fingerprint();
  random_fill(c.nonce);

  const std::uint32_t n = p.block_count();
  const std::uint32_t domain = 1u << p.block_bits;
  c.left.resize(n);
  c.right.assign((static_cast<std::size_t>(n) * domain + 3) / 4, 0);

  for (std::uint32_t i = 0; i < n; ++i) {
    BlockContext ctx = block_context(key, i, digits, p);
    const std::uint8_t digit = digits[i];
    const std::uint8_t own_slot = ctx.perm[digit];
    for (std::uint32_t slot = 0; slot < domain; ++slot) {
      Key16 k = slot_key(ctx.prefix_key, slot);
      if (slot == own_slot) {
        c.left[i].slot_key = k;
        c.left[i].slot = own_slot;
      }
      // Trit encodes cmp(slot digit, own digit): 0 equal, 1 less, 2 greater.
      const std::uint8_t u = ctx.inv[slot];
      const std::uint8_t cmp = u == digit ? 0 : (u < digit ? 1 : 2);
      set_trit(c.right, static_cast<std::size_t>(i) * domain + slot, static_cast<std::uint8_t>((cmp + mask_trit(k, c.nonce)) % 3));
    }
  }
  return c;
}

}  // namespace

void OreParams::validate() const {
  if (block_bits == 0 || block_bits > 8) throw Error(ErrorCode::kInvalidArgument, "ORE block width must be 1..8 bits");
  if (bit_width == 0 || bit_width % block_bits != 0 || bit_width % 8 != 0)
    throw Error(ErrorCode::kInvalidArgument, "ORE bit width must be a byte multiple divisible by the block width");
  if (8 % block_bits != 0) throw Error(ErrorCode::kInvalidArgument, "ORE block width must divide 8");
}

std::uint64_t ore_offset_signed(std::int64_t v, std::uint32_t bit_width) {
  if (bit_width == 0 || bit_width > 64) throw Error(ErrorCode::kInvalidArgument, "bad ORE bit width");
  if (bit_width == 64) return static_cast<std::uint64_t>(v) ^ (std::uint64_t{1} << 63);
  const std::int64_t half = std::int64_t{1} << (bit_width - 1);
  if (v < -half || v >= half) throw Error(ErrorCode::kOutOfRange, "value does not fit the ORE bit width");
  return static_cast<std::uint64_t>(v + half);
}

OreCipher ore_encrypt(std::uint64_t m, const ColumnKey& key, const OreParams& params) {
  params.validate();
  if (params.bit_width > 64) throw Error(ErrorCode::kInvalidArgument, "integer ORE supports at most 64 bits");
  if (params.bit_width < 64 && (m >> params.bit_width) != 0)
    throw Error(ErrorCode::kOutOfRange, "value does not fit the ORE bit width");
  const std::uint32_t nbytes = params.bit_width / 8;
  Bytes be(nbytes);
  for (std::uint32_t i = 0; i < nbytes; ++i) be[nbytes - 1 - i] = static_cast<std::uint8_t>(m >> (8 * i));
  return encrypt_digits(split_digits(be, params), key, params);
}

OreCipher ore_encrypt_bytes(ByteView m, const ColumnKey& key, const OreParams& params) {
  params.validate();
  const std::uint32_t nbytes = params.bit_width / 8;
  if (m.size() > nbytes) throw Error(ErrorCode::kOutOfRange, "byte string longer than the ORE width");
  Bytes padded(m.begin(), m.end());
  padded.resize(nbytes, 0);
  return encrypt_digits(split_digits(padded, params), key, params);
}

OreComparison ore_compare_detailed(const OreCipher& a, const OreCipher& b) {
  if (a.bit_width != b.bit_width || a.block_bits != b.block_bits || a.left.size() != b.left.size())
    throw Error(ErrorCode::kLayoutMismatch, "ORE ciphertexts have different block layouts");
  if (a.key_tag != b.key_tag) throw Error(ErrorCode::kLayoutMismatch, "ORE ciphertexts come from different keys");
  const std::uint32_t domain = 1u << a.block_bits;
  for (std::uint32_t i = 0; i < a.left.size(); ++i) {
    const OreLeftToken& tok = a.left[i];
    std::uint8_t z = get_trit(b.right, static_cast<std::size_t>(i) * domain + tok.slot);
    std::uint8_t v = static_cast<std::uint8_t>((z + 3 - mask_trit(tok.slot_key, b.nonce)) % 3);
    if (v == 1) return {Ordering::kLess, i};
    if (v == 2) return {Ordering::kGreater, i};
  }
  return {Ordering::kEqual, static_cast<std::uint32_t>(a.left.size())};
}

Ordering ore_compare(const OreCipher& a, const OreCipher& b) { return ore_compare_detailed(a, b).order; }

int ore_comparator(const OreCipher& a, const OreCipher& b) { return static_cast<int>(ore_compare(a, b)); }

std::size_t OreCipher::serialized_size() const { return 1 + 1 + 4 + 1 + 4 + 16 + 4 + left.size() * 17 + 4 + right.size(); }

Bytes OreCipher::serialize() const {
  ByteWriter w(serialized_size());
  w.u8(kFormatVersion);
  w.u8(kTagOre);
  w.u32(bit_width);
  w.u8(block_bits);
  w.u32(key_tag);
  w.raw(nonce);
  w.u32(static_cast<std::uint32_t>(left.size()));
  for (const auto& t : left) {
    w.raw(t.slot_key);
    w.u8(t.slot);
  }
  w.blob(right);
  return std::move(w).take();
}

OreCipher OreCipher::parse(ByteView b) {
  ByteReader r(b);
  if (r.u8() != kFormatVersion) throw Error(ErrorCode::kFormat, "unsupported ORE ciphertext version");
  if (r.u8() != kTagOre) throw Error(ErrorCode::kFormat, "ciphertext type tag mismatch");
  OreCipher c;
  c.bit_width = r.u32();
  c.block_bits = r.u8();
  OreParams{c.bit_width, c.block_bits}.validate();
  c.key_tag = r.u32();
  ByteView nonce = r.raw(16);
  std::copy(nonce.begin(), nonce.end(), c.nonce.begin());
  std::uint32_t n = r.u32();
  if (n != c.bit_width / c.block_bits) throw Error(ErrorCode::kFormat, "ORE block count does not match layout");
  c.left.resize(n);
  for (auto& t : c.left) {
    ByteView k = r.raw(16);
    std::copy(k.begin(), k.end(), t.slot_key.begin());
    t.slot = r.u8();
  }
  c.right = r.blob();
  const std::size_t domain = std::size_t{1} << c.block_bits;
  if (c.right.size() != (n * domain + 3) / 4) throw Error(ErrorCode::kFormat, "ORE right table has wrong length");
  for (const auto& t : c.left)
    if (t.slot >= domain) throw Error(ErrorCode::kFormat, "ORE slot outside digit domain");
  r.expect_done();
  return c;
}

}  // namespace hedb
