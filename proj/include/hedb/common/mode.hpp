#pragma once

#include <cstdint>
#include <string_view>

namespace hedb {

// Execution modes compared by the harness.
enum class Mode : std::uint8_t {
  kPlaintext,
  kSoftware,
  kStaticTee,
  kStaticTeePool,
  kAdaptive,
};

inline constexpr Mode kAllModes[] = {Mode::kPlaintext, Mode::kSoftware, Mode::kStaticTee, Mode::kStaticTeePool,
                                     Mode::kAdaptive};

const char* mode_name(Mode m);
Mode mode_from_name(std::string_view name);

inline bool mode_uses_tee(Mode m) { return m == Mode::kStaticTee || m == Mode::kStaticTeePool || m == Mode::kAdaptive; }

}  // namespace hedb
