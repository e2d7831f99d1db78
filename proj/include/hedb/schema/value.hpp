#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "hedb/common/bytes.hpp"
#include "hedb/enclave/bridge.hpp"

namespace hedb {

// Decimals are fixed-point integers scaled by 10^scale.
enum class DataKind : std::uint8_t { kInt, kDecimal, kText };

const char* data_kind_name(DataKind k);
DataKind data_kind_from_name(std::string_view name);

inline ValueType value_type_of(DataKind k) { return k == DataKind::kText ? ValueType::kText : ValueType::kInt; }

using Value = std::variant<std::int64_t, std::string>;

inline bool is_text(const Value& v) { return std::holds_alternative<std::string>(v); }
inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline const std::string& as_text(const Value& v) { return std::get<std::string>(v); }

// Byte encoding shared by every scheme: 8-byte little-endian for integers,
// raw bytes for text.
Bytes encode_value(const Value& v);
Value decode_value(ByteView b, ValueType type);

// Parses a SQL literal for a column of the given kind. Decimal literals are
// scaled; extra fractional digits are rejected rather than rounded.
Value parse_value(std::string_view raw, bool quoted, DataKind kind, std::uint32_t scale);
std::string format_value(const Value& v, DataKind kind, std::uint32_t scale);
std::string format_value(const Value& v);

}  // namespace hedb
