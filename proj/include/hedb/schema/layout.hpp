#pragma once

// Server-visible table layout: anonymous column names and one field per
// (column, scheme) pair. Nothing here names a plaintext identifier.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hedb/common/bytes.hpp"
#include "hedb/crypto/keys.hpp"
#include "hedb/enclave/bridge.hpp"

namespace hedb {

struct FieldSpec {
  std::string column;  // anonymous column name
  std::string label;   // key label: "<anon table>.<anon column>"
  Scheme scheme = Scheme::kPlain;
  ValueType type = ValueType::kInt;
  std::uint32_t ore_bits = 0;  // ORE fields only
  bool indexed = false;        // ORE fields only
  bool operator==(const FieldSpec&) const = default;
};

struct TableLayout {
  std::string table;
  std::vector<FieldSpec> fields;

  std::optional<std::size_t> find(const std::string& column, Scheme scheme) const;
  std::size_t require(const std::string& column, Scheme scheme) const;
  bool operator==(const TableLayout&) const = default;

  Bytes serialize() const;
  static TableLayout parse(ByteView b);
};

// One entry per layout field, same order.
struct EncryptedRow {
  std::vector<Bytes> fields;
};

// Rejects rows whose field count or ciphertext framing does not match.
void check_row(const TableLayout& layout, const EncryptedRow& row);

}  // namespace hedb
