#pragma once

// Client key material. The master key never touches the catalog; on disk it
// is wrapped with AES-256-GCM under a PBKDF2-SHA256 passphrase key.
//
// File: "HEDBKEY1" | u32 iterations | salt[16] | RndCipher(master secret)
// with the magic as associated data.

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "hedb/crypto/keys.hpp"

namespace hedb {

class KeyStore {
 public:
  explicit KeyStore(MasterKey master) : master_(std::move(master)) {}
  static KeyStore generate() { return KeyStore(MasterKey::generate()); }

  const MasterKey& master() const { return master_; }
  // Column keys are derived on first use and memoised.
  const ColumnKey& key(const std::string& label, Scheme scheme) const;

  void save(const std::string& path, const std::string& passphrase, std::uint32_t iterations = 20000) const;
  static KeyStore load(const std::string& path, const std::string& passphrase);

 private:
  MasterKey master_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::string, Scheme>, ColumnKey> keys_;
};

}  // namespace hedb
