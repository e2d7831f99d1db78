#include "hedb/schema/keystore.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>

#include "hedb/common/error.hpp"
#include "hedb/crypto/symmetric.hpp"

namespace hedb {

namespace {

constexpr char kMagic[] = "HEDBKEY1";

Bytes passphrase_key(const std::string& pass, ByteView salt, std::uint32_t iterations) {
  Bytes out(32);
  if (PKCS5_PBKDF2_HMAC(pass.data(), static_cast<int>(pass.size()), salt.data(), static_cast<int>(salt.size()),
                        static_cast<int>(iterations), EVP_sha256(), static_cast<int>(out.size()), out.data()) != 1)
    throw Error(ErrorCode::kInvalidArgument, "PBKDF2 failed");
  return out;
}

ByteView magic_view() { return ByteView(reinterpret_cast<const std::uint8_t*>(kMagic), 8); }

}  // namespace

const ColumnKey& KeyStore::key(const std::string& label, Scheme scheme) const {
  std::lock_guard lock(mu_);
  auto k = std::make_pair(label, scheme);
  auto it = keys_.find(k);
  if (it == keys_.end()) it = keys_.emplace(k, derive_column_key(master_, label, scheme)).first;
  return it->second;
}

void KeyStore::save(const std::string& path, const std::string& passphrase, std::uint32_t iterations) const {
  if (iterations == 0) throw Error(ErrorCode::kInvalidArgument, "iteration count must be positive");
  std::uint8_t salt[16];
  random_fill(salt);
  Bytes kek = passphrase_key(passphrase, salt, iterations);
  RndCipher wrapped = aead_seal(kek, ByteView(master_.secret()), magic_view());
  ByteWriter w;
  w.raw(magic_view());
  w.u32(iterations);
  w.raw(salt);
  w.blob(wrapped.serialize());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write keystore " + path);
  const Bytes& b = w.bytes();
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!f) throw Error(ErrorCode::kIo, "short write on keystore " + path);
}

KeyStore KeyStore::load(const std::string& path, const std::string& passphrase) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot read keystore " + path);
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  ByteView magic = r.raw(8);
  if (!std::equal(magic.begin(), magic.end(), magic_view().begin())) throw Error(ErrorCode::kFormat, "not a keystore");
  std::uint32_t iterations = r.u32();
  if (iterations == 0 || iterations > 10'000'000) throw Error(ErrorCode::kFormat, "implausible iteration count");
  ByteView salt = r.raw(16);
  RndCipher wrapped = RndCipher::parse(r.blob());
  r.expect_done();
  Bytes secret = aead_open(passphrase_key(passphrase, salt, iterations), wrapped, magic_view());
  return KeyStore(MasterKey::from_bytes(secret));
}

}  // namespace hedb
