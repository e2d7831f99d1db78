#include "hedb/crypto/homomorphic.hpp"

#include <algorithm>

#include "hedb/crypto/prf.hpp"

namespace hedb {

namespace {

constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint8_t kTagAhe = 0xA1;
constexpr std::uint8_t kTagMhe = 0xA2;
constexpr std::uint8_t kDomainAhe = 0x01;
constexpr std::uint8_t kDomainMhe = 0x02;

void require_scheme(const ColumnKey& key, Scheme s) {
  if (key.scheme != s)
    throw Error(ErrorCode::kSchemeMismatch,
                std::string("expected ") + scheme_name(s) + " key, got " + scheme_name(key.scheme));
}

void require_residue(u128 m) {
  if (m >= Field::kP) throw Error(ErrorCode::kOutOfRange, "plaintext not reduced modulo p");
}

void require_same_modulus(std::uint8_t a, std::uint8_t b) {
  if (a != b) throw Error(ErrorCode::kModulusMismatch, "ciphertexts use different moduli");
}

template <typename Cipher>
Bytes serialize_cipher(std::uint8_t tag, u128 value, const Cipher& c) {
  ByteWriter w(64);
  w.u8(kFormatVersion);
  w.u8(tag);
  w.u8(c.modulus_id);
  w.u128(value);
  c.nonces.write(w);
  return std::move(w).take();
}

template <typename Cipher>
Cipher parse_cipher(std::uint8_t tag, ByteView b, u128 Cipher::*value) {
  ByteReader r(b);
  if (r.u8() != kFormatVersion) throw Error(ErrorCode::kFormat, "unsupported ciphertext version");
  if (r.u8() != tag) throw Error(ErrorCode::kFormat, "ciphertext type tag mismatch");
  Cipher c;
  c.modulus_id = r.u8();
  if (c.modulus_id != kModulusMersenne127) throw Error(ErrorCode::kModulusMismatch, "unknown modulus id");
  c.*value = r.u128();
  if (c.*value >= Field::kP) throw Error(ErrorCode::kFormat, "ciphertext value not reduced");
  c.nonces = NonceMultiset::read(r);
  r.expect_done();
  return c;
}

}  // namespace

NonceMultiset NonceMultiset::combined(const NonceMultiset& other, int sign) const {
  NonceMultiset out;
  out.entries_.reserve(entries_.size() + other.entries_.size());
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() || b != other.entries_.end()) {
    if (b == other.entries_.end() || (a != entries_.end() && a->first < b->first)) {
      out.entries_.push_back(*a++);
    } else if (a == entries_.end() || b->first < a->first) {
      out.entries_.emplace_back(b->first, sign * b->second);
      ++b;
    } else {
      std::int64_t m = a->second + sign * b->second;
      if (m != 0) out.entries_.emplace_back(a->first, m);
      ++a;
      ++b;
    }
  }
  return out;
}

std::uint64_t NonceMultiset::cardinality() const {
  std::uint64_t n = 0;
  for (const auto& [nonce, mult] : entries_) n += static_cast<std::uint64_t>(mult < 0 ? -mult : mult);
  return n;
}

void NonceMultiset::write(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [nonce, mult] : entries_) {
    w.u64(nonce);
    w.i64(mult);
  }
}

NonceMultiset NonceMultiset::read(ByteReader& r) {
  NonceMultiset m;
  std::uint32_t n = r.u32();
  if (n > r.remaining() / 16) throw Error(ErrorCode::kFormat, "nonce multiset length exceeds record");
  m.entries_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint64_t nonce = r.u64();
    std::int64_t mult = r.i64();
    if (mult == 0 || (!m.entries_.empty() && m.entries_.back().first >= nonce))
      throw Error(ErrorCode::kFormat, "malformed nonce multiset");
    m.entries_.emplace_back(nonce, mult);
  }
  return m;
}

Bytes AheCipher::serialize() const { return serialize_cipher(kTagAhe, masked_sum, *this); }
AheCipher AheCipher::parse(ByteView b) { return parse_cipher<AheCipher>(kTagAhe, b, &AheCipher::masked_sum); }
Bytes MheCipher::serialize() const { return serialize_cipher(kTagMhe, masked_product, *this); }
MheCipher MheCipher::parse(ByteView b) { return parse_cipher<MheCipher>(kTagMhe, b, &MheCipher::masked_product); }

u128 encode_signed(std::int64_t v) {
  if (v >= 0) return static_cast<u128>(v);
  return Field::kP - static_cast<u128>(-(v + 1)) - 1;
}

std::int64_t decode_signed(u128 v) {
  constexpr u128 kHalf = Field::kP / 2;
  if (v <= kHalf) {
    if (v > static_cast<u128>(INT64_MAX)) throw Error(ErrorCode::kOutOfRange, "decrypted value exceeds int64");
    return static_cast<std::int64_t>(v);
  }
  u128 mag = Field::kP - v;
  if (mag > static_cast<u128>(INT64_MAX) + 1) throw Error(ErrorCode::kOutOfRange, "decrypted value exceeds int64");
  return mag == static_cast<u128>(INT64_MAX) + 1 ? INT64_MIN : -static_cast<std::int64_t>(mag);
}

u128 sahe_mask(const ColumnKey& key, std::uint64_t nonce) { return prf_field(key.sub_key(0), nonce, kDomainAhe); }

u128 smhe_mask(const ColumnKey& key, std::uint64_t nonce) {
  u128 g = prf_field(key.sub_key(0), nonce, kDomainMhe);
  return g == 0 ? 1 : g;
}

AheCipher sahe_encrypt(u128 m, const ColumnKey& key, std::uint64_t nonce) {
  require_scheme(key, Scheme::kAhe);
  require_residue(m);
  AheCipher c;
  c.masked_sum = Field::add(m, sahe_mask(key, nonce));
  c.nonces = NonceMultiset::single(nonce);
  return c;
}

u128 sahe_decrypt(const AheCipher& c, const ColumnKey& key) {
  require_scheme(key, Scheme::kAhe);
  if (c.modulus_id != kModulusMersenne127) throw Error(ErrorCode::kModulusMismatch, "unknown modulus id");
  u128 m = c.masked_sum;
  for (const auto& [nonce, mult] : c.nonces.entries()) {
    u128 mask = sahe_mask(key, nonce);
    u128 times = Field::mul(mask, encode_signed(mult));
    m = Field::sub(m, times);
  }
  return m;
}

AheCipher sahe_add(const AheCipher& a, const AheCipher& b) {
  require_same_modulus(a.modulus_id, b.modulus_id);
  return AheCipher{Field::add(a.masked_sum, b.masked_sum), a.nonces.combined(b.nonces, +1), a.modulus_id};
}

AheCipher sahe_sub(const AheCipher& a, const AheCipher& b) {
  require_same_modulus(a.modulus_id, b.modulus_id);
  return AheCipher{Field::sub(a.masked_sum, b.masked_sum), a.nonces.combined(b.nonces, -1), a.modulus_id};
}

AheCipher sahe_add_plain(const AheCipher& a, u128 m) {
  require_residue(m);
  return AheCipher{Field::add(a.masked_sum, m), a.nonces, a.modulus_id};
}

MheCipher smhe_encrypt(u128 m, const ColumnKey& key, std::uint64_t nonce) {
  require_scheme(key, Scheme::kMhe);
  require_residue(m);
  MheCipher c;
  c.masked_product = Field::mul(m, smhe_mask(key, nonce));
  c.nonces = NonceMultiset::single(nonce);
  return c;
}

u128 smhe_decrypt(const MheCipher& c, const ColumnKey& key) {
  require_scheme(key, Scheme::kMhe);
  if (c.modulus_id != kModulusMersenne127) throw Error(ErrorCode::kModulusMismatch, "unknown modulus id");
  u128 num = 1;  // masks still multiplied in
  u128 den = 1;  // masks divided out
  for (const auto& [nonce, mult] : c.nonces.entries()) {
    u128 g = smhe_mask(key, nonce);
    if (mult > 0) num = Field::mul(num, Field::pow(g, static_cast<u128>(mult)));
    else den = Field::mul(den, Field::pow(g, static_cast<u128>(-mult)));
  }
  return Field::mul(Field::mul(c.masked_product, den), Field::inv(num));
}

MheCipher smhe_mul(const MheCipher& a, const MheCipher& b) {
  require_same_modulus(a.modulus_id, b.modulus_id);
  return MheCipher{Field::mul(a.masked_product, b.masked_product), a.nonces.combined(b.nonces, +1), a.modulus_id};
}

MheCipher smhe_div(const MheCipher& a, const MheCipher& b) {
  require_same_modulus(a.modulus_id, b.modulus_id);
  // Masks are non-zero, so a zero ciphertext means a zero plaintext divisor.
  if (b.masked_product == 0) throw Error(ErrorCode::kNotInvertible, "divisor encrypts zero");
  return MheCipher{Field::mul(a.masked_product, Field::inv(b.masked_product)), a.nonces.combined(b.nonces, -1),
                   a.modulus_id};
}

MheCipher smhe_mul_plain(const MheCipher& a, u128 m) {
  require_residue(m);
  return MheCipher{Field::mul(a.masked_product, m), a.nonces, a.modulus_id};
}

}  // namespace hedb
