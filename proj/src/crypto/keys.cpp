#include "hedb/crypto/keys.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <memory>

namespace hedb {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kPlain: return "PLAIN";
    case Scheme::kAhe: return "AHE";
    case Scheme::kMhe: return "MHE";
    case Scheme::kOre: return "ORE";
    case Scheme::kDet: return "DET";
    case Scheme::kRnd: return "RND";
  }
  return "?";
}

Scheme scheme_from_name(std::string_view name) {
  for (Scheme s : {Scheme::kPlain, Scheme::kAhe, Scheme::kMhe, Scheme::kOre, Scheme::kDet, Scheme::kRnd})
    if (name == scheme_name(s)) return s;
  throw Error(ErrorCode::kFormat, "unknown scheme '" + std::string(name) + "'");
}

MasterKey MasterKey::generate() {
  MasterKey k;
  random_fill(k.secret_);
  return k;
}

MasterKey MasterKey::from_bytes(ByteView b) {
  if (b.size() != 32) throw Error(ErrorCode::kInvalidArgument, "master key must be exactly 32 bytes");
  MasterKey k;
  std::copy(b.begin(), b.end(), k.secret_.begin());
  return k;
}

std::array<std::uint8_t, 16> ColumnKey::sub_key(int half) const {
  std::array<std::uint8_t, 16> out{};
  std::copy_n(key_bytes.begin() + (half ? 16 : 0), 16, out.begin());
  return out;
}

std::uint32_t ColumnKey::fingerprint() const {
  static const std::uint8_t kLabel[] = {'f', 'p'};
  Bytes tag = hmac_sha256(key_bytes, kLabel);
  return static_cast<std::uint32_t>(tag[0]) | static_cast<std::uint32_t>(tag[1]) << 8 |
         static_cast<std::uint32_t>(tag[2]) << 16 | static_cast<std::uint32_t>(tag[3]) << 24;
}

ColumnKey derive_column_key(const MasterKey& master, ByteView label, Scheme scheme) {
  if (label.empty()) throw Error(ErrorCode::kInvalidArgument, "column label must be non-empty");
  static const std::uint8_t kSalt[] = {'h', 'e', 'd', 'b', '-', 'c', 'o', 'l', 'u', 'm', 'n'};
  ByteWriter info;
  info.u8(static_cast<std::uint8_t>(scheme));
  info.blob(label);
  Bytes okm = hkdf_sha256(master.secret(), kSalt, info.bytes(), 32);
  ColumnKey key;
  key.scheme = scheme;
  std::copy(okm.begin(), okm.end(), key.key_bytes.begin());
  key.column_label.assign(label.begin(), label.end());
  return key;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t out_len) {
  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr),
                                                                  &EVP_PKEY_CTX_free);
  Bytes out(out_len);
  std::size_t len = out_len;
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) <= 0 || EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())) <= 0 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())) <= 0 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), info.data(), static_cast<int>(info.size())) <= 0 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &len) <= 0 || len != out_len)
    throw Error(ErrorCode::kInvalidArgument, "HKDF derivation failed");
  return out;
}

Bytes hmac_sha256(ByteView key, ByteView msg) {
  Bytes out(32);
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(), out.data(), &len))
    throw Error(ErrorCode::kInvalidArgument, "HMAC failed");
  return out;
}

Bytes sha256(ByteView msg) {
  Bytes out(SHA256_DIGEST_LENGTH);
  SHA256(msg.data(), msg.size(), out.data());
  return out;
}

void random_fill(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    throw Error(ErrorCode::kInvalidArgument, "system RNG failure");
}

std::uint64_t random_u64() {
  std::array<std::uint8_t, 8> b{};
  random_fill(b);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace hedb
