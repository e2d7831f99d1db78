#include "hedb/crypto/symmetric.hpp"

#include <openssl/evp.h>

#include <memory>

namespace hedb {

namespace {

constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint8_t kTagDet = 0xA4;
constexpr std::uint8_t kTagRnd = 0xA5;

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx new_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw Error(ErrorCode::kInvalidArgument, "EVP_CIPHER_CTX_new failed");
  return ctx;
}

Bytes aes_ctr(ByteView key32, ByteView iv16, ByteView in) {
  CipherCtx ctx = new_ctx();
  Bytes out(in.size());
  int len = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, key32.data(), iv16.data()) != 1 ||
      (!in.empty() && EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size())) != 1))
    throw Error(ErrorCode::kInvalidArgument, "AES-CTR failed");
  return out;
}

void require_scheme(const ColumnKey& key, Scheme s) {
  if (key.scheme != s)
    throw Error(ErrorCode::kSchemeMismatch,
                std::string("expected ") + scheme_name(s) + " key, got " + scheme_name(key.scheme));
}

Bytes det_subkey(const ColumnKey& key, char which) {
  const std::uint8_t label[] = {'d', 'e', 't', static_cast<std::uint8_t>(which)};
  return hmac_sha256(key.key_bytes, label);
}

}  // namespace

Bytes encode_i64(std::int64_t v) {
  ByteWriter w(8);
  w.i64(v);
  return std::move(w).take();
}

std::int64_t decode_i64(ByteView b) {
  if (b.size() != 8) throw Error(ErrorCode::kFormat, "integer payload must be 8 bytes");
  ByteReader r(b);
  return r.i64();
}

DetCipher det_encrypt(ByteView m, const ColumnKey& key) {
  require_scheme(key, Scheme::kDet);
  Bytes iv = hmac_sha256(det_subkey(key, 'm'), m);
  iv.resize(16);
  Bytes body = aes_ctr(det_subkey(key, 'e'), iv, m);
  DetCipher c;
  c.bytes = std::move(iv);
  c.bytes.insert(c.bytes.end(), body.begin(), body.end());
  return c;
}

Bytes det_decrypt(const DetCipher& c, const ColumnKey& key) {
  require_scheme(key, Scheme::kDet);
  if (c.bytes.size() < 16) throw Error(ErrorCode::kFormat, "DET ciphertext too short");
  ByteView iv(c.bytes.data(), 16);
  Bytes m = aes_ctr(det_subkey(key, 'e'), iv, ByteView(c.bytes).subspan(16));
  Bytes check = hmac_sha256(det_subkey(key, 'm'), m);
  if (!std::equal(iv.begin(), iv.end(), check.begin())) throw Error(ErrorCode::kAuthFailure, "DET synthetic IV mismatch");
  return m;
}

Bytes DetCipher::serialize() const {
  ByteWriter w(bytes.size() + 6);
  w.u8(kFormatVersion);
  w.u8(kTagDet);
  w.blob(bytes);
  return std::move(w).take();
}

DetCipher DetCipher::parse(ByteView b) {
  ByteReader r(b);
  if (r.u8() != kFormatVersion) throw Error(ErrorCode::kFormat, "unsupported DET ciphertext version");
  if (r.u8() != kTagDet) throw Error(ErrorCode::kFormat, "ciphertext type tag mismatch");
  DetCipher c{r.blob()};
  if (c.bytes.size() < 16) throw Error(ErrorCode::kFormat, "DET ciphertext too short");
  r.expect_done();
  return c;
}

RndCipher aead_seal(ByteView key32, ByteView m, ByteView aad) {
  if (key32.size() != 32) throw Error(ErrorCode::kInvalidArgument, "AEAD key must be 32 bytes");
  RndCipher c;
  random_fill(c.nonce);
  c.body.resize(m.size());
  CipherCtx ctx = new_ctx();
  int len = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key32.data(), c.nonce.data()) != 1 ||
      (!aad.empty() && EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) ||
      (!m.empty() && EVP_EncryptUpdate(ctx.get(), c.body.data(), &len, m.data(), static_cast<int>(m.size())) != 1) ||
      EVP_EncryptFinal_ex(ctx.get(), c.body.data() + c.body.size(), &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, c.tag.data()) != 1)
    throw Error(ErrorCode::kInvalidArgument, "AES-GCM encryption failed");
  return c;
}

Bytes aead_open(ByteView key32, const RndCipher& c, ByteView aad) {
  if (key32.size() != 32) throw Error(ErrorCode::kInvalidArgument, "AEAD key must be 32 bytes");
  Bytes m(c.body.size());
  CipherCtx ctx = new_ctx();
  int len = 0;
  std::array<std::uint8_t, 16> tag = c.tag;
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key32.data(), c.nonce.data()) != 1 ||
      (!aad.empty() && EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) ||
      (!c.body.empty() &&
       EVP_DecryptUpdate(ctx.get(), m.data(), &len, c.body.data(), static_cast<int>(c.body.size())) != 1) ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1)
    throw Error(ErrorCode::kInvalidArgument, "AES-GCM setup failed");
  if (EVP_DecryptFinal_ex(ctx.get(), m.data() + m.size(), &len) != 1)
    throw Error(ErrorCode::kAuthFailure, "AES-GCM tag verification failed");
  return m;
}

RndCipher rnd_encrypt(ByteView m, const ColumnKey& key) {
  require_scheme(key, Scheme::kRnd);
  return aead_seal(key.key_bytes, m, key.column_label);
}

Bytes rnd_decrypt(const RndCipher& c, const ColumnKey& key) {
  require_scheme(key, Scheme::kRnd);
  return aead_open(key.key_bytes, c, key.column_label);
}

Bytes RndCipher::serialize() const {
  ByteWriter w(body.size() + 36);
  w.u8(kFormatVersion);
  w.u8(kTagRnd);
  w.raw(nonce);
  w.blob(body);
  w.raw(tag);
  return std::move(w).take();
}

RndCipher RndCipher::parse(ByteView b) {
  ByteReader r(b);
  if (r.u8() != kFormatVersion) throw Error(ErrorCode::kFormat, "unsupported RND ciphertext version");
  if (r.u8() != kTagRnd) throw Error(ErrorCode::kFormat, "ciphertext type tag mismatch");
  RndCipher c;
  ByteView n = r.raw(12);
  std::copy(n.begin(), n.end(), c.nonce.begin());
  c.body = r.blob();
  ByteView t = r.raw(16);
  std::copy(t.begin(), t.end(), c.tag.begin());
  r.expect_done();
  return c;
}

}  // namespace hedb
