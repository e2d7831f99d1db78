#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "hedb/common/bytes.hpp"

namespace hedb {

// Ciphertext schemes. Plain marks a non-sensitive column stored as-is.
enum class Scheme : std::uint8_t {
  kPlain = 0,
  kAhe = 1,
  kMhe = 2,
  kOre = 3,
  kDet = 4,
  kRnd = 5,
};

const char* scheme_name(Scheme s);
Scheme scheme_from_name(std::string_view name);

using Key32 = std::array<std::uint8_t, 32>;

class MasterKey {
 public:
  static MasterKey generate();
  static MasterKey from_bytes(ByteView b);

  const Key32& secret() const { return secret_; }
  bool operator==(const MasterKey&) const = default;

 private:
  MasterKey() = default;
  Key32 secret_{};
};

struct ColumnKey {
  Scheme scheme = Scheme::kPlain;
  Key32 key_bytes{};
  Bytes column_label;

  // Low 16 bytes / high 16 bytes, used as independent 128-bit subkeys.
  std::array<std::uint8_t, 16> sub_key(int half) const;
  // Short public fingerprint used to reject comparisons across key lineages.
  std::uint32_t fingerprint() const;
};

// HKDF-SHA256 with the scheme folded into the info string for domain separation.
ColumnKey derive_column_key(const MasterKey& master, ByteView label, Scheme scheme);
inline ColumnKey derive_column_key(const MasterKey& master, std::string_view label, Scheme scheme) {
  return derive_column_key(master, ByteView(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()), scheme);
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t out_len);
Bytes hmac_sha256(ByteView key, ByteView msg);
Bytes sha256(ByteView msg);

void random_fill(std::span<std::uint8_t> out);
std::uint64_t random_u64();

}  // namespace hedb
