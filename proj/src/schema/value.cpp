#include "hedb/schema/value.hpp"

#include <charconv>
#include <string>

#include "hedb/common/error.hpp"
#include "hedb/crypto/symmetric.hpp"

namespace hedb {

const char* data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::kInt: return "int";
    case DataKind::kDecimal: return "decimal";
    case DataKind::kText: return "text";
  }
  return "?";
}

DataKind data_kind_from_name(std::string_view name) {
  if (name == "int") return DataKind::kInt;
  if (name == "decimal") return DataKind::kDecimal;
  if (name == "text") return DataKind::kText;
  throw Error(ErrorCode::kFormat, "unknown data kind '" + std::string(name) + "'");
}

Bytes encode_value(const Value& v) {
  if (is_text(v)) return to_bytes(as_text(v));
  return encode_i64(as_int(v));
}

Value decode_value(ByteView b, ValueType type) {
  if (type == ValueType::kText) return to_string(b);
  return decode_i64(b);
}

namespace {

std::int64_t parse_i64(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc::result_out_of_range) throw Error(ErrorCode::kOutOfRange, "integer literal out of range");
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::kInvalidArgument, "bad integer literal '" + std::string(s) + "'");
  return v;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::kOutOfRange, "decimal literal out of range");
  return r;
}

}  // namespace

Value parse_value(std::string_view raw, bool quoted, DataKind kind, std::uint32_t scale) {
  if (kind == DataKind::kText) {
    if (!quoted) throw Error(ErrorCode::kInvalidArgument, "text column compared with a numeric literal");
    return std::string(raw);
  }
  if (quoted) throw Error(ErrorCode::kInvalidArgument, "numeric column compared with a text literal");
  if (kind == DataKind::kInt) return parse_i64(raw);

  bool neg = !raw.empty() && raw.front() == '-';
  std::string_view body = neg ? raw.substr(1) : raw;
  std::size_t dot = body.find('.');
  std::string_view whole = body.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
  if (frac.size() > scale) throw Error(ErrorCode::kInvalidArgument, "too many fractional digits for decimal column");
  std::int64_t pow = 1;
  for (std::uint32_t i = 0; i < scale; ++i) pow = checked_mul(pow, 10);
  std::int64_t v = checked_mul(whole.empty() ? 0 : parse_i64(whole), pow);
  if (!frac.empty()) {
    std::int64_t f = parse_i64(frac);
    for (std::size_t i = frac.size(); i < scale; ++i) f = checked_mul(f, 10);
    if (__builtin_add_overflow(v, f, &v)) throw Error(ErrorCode::kOutOfRange, "decimal literal out of range");
  }
  return neg ? -v : v;
}

std::string format_value(const Value& v, DataKind kind, std::uint32_t scale) {
  if (is_text(v)) return as_text(v);
  std::int64_t x = as_int(v);
  if (kind != DataKind::kDecimal || scale == 0) return std::to_string(x);
  const std::uint64_t mag = x < 0 ? 0 - static_cast<std::uint64_t>(x) : static_cast<std::uint64_t>(x);
  std::string digits = std::to_string(mag);
  if (digits.size() <= scale) digits.insert(0, scale + 1 - digits.size(), '0');
  digits.insert(digits.size() - scale, ".");
  return (x < 0 ? "-" : "") + digits;
}

std::string format_value(const Value& v) { return is_text(v) ? as_text(v) : std::to_string(as_int(v)); }

}  // namespace hedb
