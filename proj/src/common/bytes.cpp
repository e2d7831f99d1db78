#include "hedb/common/bytes.hpp"

namespace hedb {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kSchemeMismatch: return "scheme mismatch";
    case ErrorCode::kModulusMismatch: return "modulus mismatch";
    case ErrorCode::kNotInvertible: return "not invertible";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kLayoutMismatch: return "layout mismatch";
    case ErrorCode::kAuthFailure: return "authentication failure";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kMissingKeys: return "missing keys";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kCorrectness: return "correctness gate";
  }
  return "unknown";
}

std::string to_hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (std::uint8_t c : b) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::kFormat, "odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::kFormat, "bad hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

}  // namespace hedb
