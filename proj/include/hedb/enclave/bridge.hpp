#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hedb/common/bytes.hpp"
#include "hedb/crypto/keys.hpp"

namespace hedb {

enum class BridgeOp : std::uint8_t {
  kCompare,       // a cmp b -> boolean
  kArith,         // a op b -> result scheme
  kArithCompare,  // (a op b) cmp c -> boolean
  kAggregate,     // fold over all operands -> result scheme
  kConvert,       // single operand re-encrypted under the result scheme
};

enum class CompareOp : std::uint8_t { kLt, kLe, kGt, kGe, kEq, kNe };
enum class ArithOp : std::uint8_t { kAdd, kSub, kMul, kDiv };
enum class AggOp : std::uint8_t { kSum, kMin, kMax };
enum class ValueType : std::uint8_t { kInt, kText };

const char* compare_op_name(CompareOp op);
const char* arith_op_name(ArithOp op);
bool compare_holds(CompareOp op, int ordering);

// A RND ciphertext together with the column label it was encrypted under.
struct Operand {
  Bytes cipher;  // serialized RndCipher
  std::string label;
};

struct BridgeTask {
  std::uint64_t id = 0;
  BridgeOp op = BridgeOp::kCompare;
  CompareOp cmp = CompareOp::kEq;
  ArithOp arith = ArithOp::kAdd;
  AggOp agg = AggOp::kSum;
  ValueType type = ValueType::kInt;
  Scheme result_scheme = Scheme::kPlain;  // kPlain only for boolean results
  std::string result_label;               // column whose key encrypts the result
  std::uint32_t result_ore_bits = 64;     // ORE results: 64 for integers, 8*width for text
  std::vector<Operand> operands;
};

struct BridgeResult {
  std::uint64_t task_id = 0;
  Scheme scheme = Scheme::kPlain;
  bool boolean = false;
  Bytes cipher;  // serialized ciphertext of `scheme`; empty for boolean results
  double micros = 0.0;
  std::uint32_t cache_hits = 0;
  std::uint32_t cache_misses = 0;
  bool direct = false;  // executed through the degenerate direct-call path
};

}  // namespace hedb
