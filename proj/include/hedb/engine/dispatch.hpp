#pragma once

// Ciphertext operators ("UDFs") and the per-call path dispatcher.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedb/adaptive/switch.hpp"
#include "hedb/common/mode.hpp"
#include "hedb/common/udf.hpp"
#include "hedb/crypto/ore.hpp"
#include "hedb/enclave/bridge.hpp"
#include "hedb/enclave/enclave.hpp"
#include "hedb/engine/metrics.hpp"

namespace hedb {

struct UdfInput {
  UdfKind kind = UdfKind::kCompare;
  CompareOp cmp = CompareOp::kEq;
  ArithOp arith = ArithOp::kAdd;
  AggOp agg = AggOp::kSum;
  bool convert = false;  // kAggregate only: re-encrypt a single operand
  ValueType type = ValueType::kInt;
  Scheme result_scheme = Scheme::kPlain;  // kPlain = boolean
  std::string result_label;
  std::uint32_t result_ore_bits = 64;

  // Software operands. Pointers stay valid for the duration of the call.
  std::vector<const OreCipher*> ore;
  std::vector<const Bytes*> raw;  // serialized DET / AHE / MHE ciphertexts
  // Enclave operands.
  std::vector<Operand> rnd;
};

struct UdfOutput {
  bool boolean = false;
  Scheme scheme = Scheme::kPlain;
  Bytes cipher;
};

using SoftwareUdf = std::function<UdfOutput(const UdfInput&)>;
using TeeUdf = std::function<BridgeTask(const UdfInput&)>;

class UdfRegistry {
 public:
  struct Entry {
    SoftwareUdf software;  // empty: no software path
    TeeUdf tee;            // empty: no enclave path
  };

  // Throws kDuplicate when the kind already has an entry.
  void register_udf(UdfKind kind, SoftwareUdf software, TeeUdf tee);
  bool has(UdfKind kind) const { return entries_[static_cast<std::size_t>(kind)].has_value(); }
  // Throws kNotFound for unregistered kinds.
  const Entry& lookup(UdfKind kind) const;

  // compare (ORE), equal (DET), add (AHE), mul (MHE), arith-compare and
  // aggregate (enclave only).
  static UdfRegistry builtin();

 private:
  std::array<std::optional<Entry>, kUdfKindCount> entries_;
};

// Virtual clock and identity of one session.
struct ExecContext {
  std::uint64_t session = 0;
  double now = 0.0;   // virtual micros
  double busy = 0.0;  // micros charged so far
  ContextManager* contexts = nullptr;

  void charge(double micros) {
    now += micros;
    busy += micros;
  }
};

struct PathChoice {
  Path path = Path::kSoftware;
  std::optional<Decision> decision;
};

class PathChooser {
 public:
  virtual ~PathChooser() = default;
  // `software_ok` / `tee_ok`: which paths this call can use.
  virtual PathChoice choose(UdfKind kind, Scheme result_scheme, double now, bool software_ok, bool tee_ok) = 0;
  virtual void complete(const PathChoice& choice, double observed_calc) { (void)choice, (void)observed_calc; }
  // Virtual cost of making one decision.
  virtual double decision_cost() const { return 0.0; }
};

class ConstantChooser : public PathChooser {
 public:
  explicit ConstantChooser(Path preferred) : preferred_(preferred) {}
  PathChoice choose(UdfKind, Scheme, double, bool software_ok, bool tee_ok) override;

 private:
  Path preferred_;
};

// Cost model seeded from the enclave's cost table (cold operands) and the
// software operator costs.
CostModelParams cost_params_for(const EnclaveConfig& cfg, const SoftwareCosts& sw);

class AdaptiveChooser : public PathChooser {
 public:
  explicit AdaptiveChooser(AdaptiveSwitch& sw) : sw_(sw), decide_(sw.params().decide_unit) {}
  PathChoice choose(UdfKind kind, Scheme result_scheme, double now, bool software_ok, bool tee_ok) override;
  void complete(const PathChoice& choice, double observed_calc) override;
  double decision_cost() const override { return decide_; }

 private:
  AdaptiveSwitch& sw_;
  double decide_;
};

struct UdfCall {
  UdfInput in;
  bool software_ok = true;
  bool tee_ok = true;
  Path path = Path::kSoftware;
  UdfOutput out;
  double micros = 0.0;
};

class Dispatcher {
 public:
  // `enclave` may be null when no call can take the enclave path. With
  // `pooled`, the enclave calls of a group share entries in batches.
  Dispatcher(const UdfRegistry& registry, PathChooser& chooser, Enclave* enclave, MetricsSink* metrics,
             SoftwareCosts costs, bool pooled, std::size_t batch_size);

  // Decides every call of the group, then executes it. Calls in a group are
  // independent of each other.
  void run(std::span<UdfCall> calls, ExecContext& ctx);
  void run_one(UdfCall& call, ExecContext& ctx) { run(std::span<UdfCall>(&call, 1), ctx); }

  const SoftwareCosts& costs() const { return costs_; }

 private:
  void finish(UdfCall& call, const PathChoice& choice, double observed_calc, double start, ExecContext& ctx);

  const UdfRegistry& registry_;
  PathChooser& chooser_;
  Enclave* enclave_;
  MetricsSink* metrics_;
  SoftwareCosts costs_;
  bool pooled_;
  std::size_t batch_size_;
};

}  // namespace hedb
