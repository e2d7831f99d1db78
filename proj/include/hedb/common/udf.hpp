#pragma once

#include <cstdint>

namespace hedb {

// Ciphertext operation kinds seen by the dispatcher.
enum class UdfKind : std::uint8_t {
  kCompare = 0,       // lt/le/gt/ge (ORE in software)
  kEqual = 1,         // eq/ne (DET in software)
  kAdd = 2,           // add/sub (AHE)
  kMul = 3,           // mul/div (MHE)
  kArithCompare = 4,  // arithmetic feeding a comparison; enclave only
  kAggregate = 5,     // MIN/MAX/SUM folds done in one enclave call
};
constexpr int kUdfKindCount = 6;

enum class Path : std::uint8_t { kSoftware = 0, kTee = 1 };

const char* udf_kind_name(UdfKind k);
const char* path_name(Path p);

// Virtual cost of the software ciphertext operators, in microseconds.
struct SoftwareCosts {
  double plain_op = 0.5;
  double det_equal = 1.0;
  double ahe_add = 8.0;
  double mhe_mul = 12.0;
  double ore_compare = 60.0;

  double of(UdfKind k) const {
    switch (k) {
      case UdfKind::kCompare: return ore_compare;
      case UdfKind::kEqual: return det_equal;
      case UdfKind::kAdd: return ahe_add;
      case UdfKind::kMul: return mhe_mul;
      default: return 0.0;
    }
  }
};

}  // namespace hedb
