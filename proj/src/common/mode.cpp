#include "hedb/common/mode.hpp"

#include <string>

#include "hedb/common/error.hpp"

namespace hedb {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kPlaintext: return "plaintext";
    case Mode::kSoftware: return "software";
    case Mode::kStaticTee: return "static_tee";
    case Mode::kStaticTeePool: return "static_tee_pool";
    case Mode::kAdaptive: return "adaptive";
  }
  return "?";
}

Mode mode_from_name(std::string_view name) {
  for (Mode m : kAllModes)
    if (name == mode_name(m)) return m;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + std::string(name) + "'");
}

}  // namespace hedb
