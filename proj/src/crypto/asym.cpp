#include "hedb/crypto/asym.hpp"

#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <memory>

#include "hedb/crypto/keys.hpp"

namespace hedb {

namespace {

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxFree {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;

[[noreturn]] void fail(const char* what) { throw Error(ErrorCode::kAuthFailure, what); }

PkeyPtr private_key(int type, const std::uint8_t* raw) {
  PkeyPtr k(EVP_PKEY_new_raw_private_key(type, nullptr, raw, 32));
  if (!k) fail("cannot load private key");
  return k;
}

PublicKey32 public_of(EVP_PKEY* k) {
  PublicKey32 out{};
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(k, out.data(), &len) != 1 || len != out.size()) fail("cannot export public key");
  return out;
}

}  // namespace

X25519KeyPair X25519KeyPair::generate() {
  X25519KeyPair kp;
  random_fill(kp.secret);
  kp.public_key = public_of(private_key(EVP_PKEY_X25519, kp.secret.data()).get());
  return kp;
}

std::array<std::uint8_t, 32> x25519_shared(const X25519KeyPair& self, const PublicKey32& peer) {
  PkeyPtr mine = private_key(EVP_PKEY_X25519, self.secret.data());
  PkeyPtr theirs(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer.data(), peer.size()));
  if (!theirs) fail("bad peer public key");
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree> ctx(EVP_PKEY_CTX_new(mine.get(), nullptr));
  std::array<std::uint8_t, 32> out{};
  std::size_t len = out.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), theirs.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != out.size())
    fail("X25519 derivation failed");
  return out;
}

Ed25519KeyPair Ed25519KeyPair::generate() {
  std::array<std::uint8_t, 32> seed{};
  random_fill(seed);
  return from_seed(seed);
}

Ed25519KeyPair Ed25519KeyPair::from_seed(ByteView seed32) {
  if (seed32.size() != 32) throw Error(ErrorCode::kInvalidArgument, "Ed25519 seed must be 32 bytes");
  Ed25519KeyPair kp;
  std::copy(seed32.begin(), seed32.end(), kp.seed.begin());
  kp.public_key = public_of(private_key(EVP_PKEY_ED25519, kp.seed.data()).get());
  return kp;
}

Signature64 ed25519_sign(const Ed25519KeyPair& key, ByteView msg) {
  PkeyPtr k = private_key(EVP_PKEY_ED25519, key.seed.data());
  std::unique_ptr<EVP_MD_CTX, MdCtxFree> ctx(EVP_MD_CTX_new());
  Signature64 sig{};
  std::size_t len = sig.size();
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, k.get()) != 1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &len, msg.data(), msg.size()) != 1)
    fail("Ed25519 signing failed");
  return sig;
}

bool ed25519_verify(const PublicKey32& pub, ByteView msg, const Signature64& sig) {
  PkeyPtr k(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub.data(), pub.size()));
  if (!k) return false;
  std::unique_ptr<EVP_MD_CTX, MdCtxFree> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, k.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(), msg.size()) == 1;
}

Mac16 aes_cmac(ByteView key16, ByteView msg) {
  if (key16.size() != 16) throw Error(ErrorCode::kInvalidArgument, "CMAC key must be 16 bytes");
  EVP_MAC* mac = EVP_MAC_fetch(nullptr, "CMAC", nullptr);
  if (!mac) fail("CMAC unavailable");
  EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(mac);
  char cipher[] = "AES-128-CBC";
  OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_CIPHER, cipher, 0), OSSL_PARAM_construct_end()};
  Mac16 out{};
  std::size_t len = 0;
  bool ok = ctx && EVP_MAC_init(ctx, key16.data(), key16.size(), params) == 1 &&
            EVP_MAC_update(ctx, msg.data(), msg.size()) == 1 && EVP_MAC_final(ctx, out.data(), &len, out.size()) == 1 &&
            len == out.size();
  EVP_MAC_CTX_free(ctx);
  EVP_MAC_free(mac);
  if (!ok) fail("CMAC computation failed");
  return out;
}

bool constant_time_equal(ByteView a, ByteView b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace hedb
