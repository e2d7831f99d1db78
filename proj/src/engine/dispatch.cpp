#include "hedb/engine/dispatch.hpp"

#include "hedb/common/error.hpp"
#include "hedb/crypto/homomorphic.hpp"

namespace hedb {

void UdfRegistry::register_udf(UdfKind kind, SoftwareUdf software, TeeUdf tee) {
  auto& slot = entries_[static_cast<std::size_t>(kind)];
  if (slot) throw Error(ErrorCode::kDuplicate, std::string("UDF already registered: ") + udf_kind_name(kind));
  if (!software && !tee) throw Error(ErrorCode::kInvalidArgument, "UDF needs at least one implementation");
  slot = Entry{std::move(software), std::move(tee)};
}

const UdfRegistry::Entry& UdfRegistry::lookup(UdfKind kind) const {
  const auto& slot = entries_[static_cast<std::size_t>(kind)];
  if (!slot) throw Error(ErrorCode::kNotFound, std::string("no UDF registered for ") + udf_kind_name(kind));
  return *slot;
}

namespace {

void need(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

BridgeTask base_task(const UdfInput& in, BridgeOp op) {
  BridgeTask t;
  t.op = op;
  t.cmp = in.cmp;
  t.arith = in.arith;
  t.agg = in.agg;
  t.type = in.type;
  t.result_scheme = in.result_scheme;
  t.result_label = in.result_label;
  t.result_ore_bits = in.result_ore_bits;
  t.operands = in.rnd;
  return t;
}

}  // namespace

UdfRegistry UdfRegistry::builtin() {
  UdfRegistry r;
  r.register_udf(
      UdfKind::kCompare,
      [](const UdfInput& in) {
        need(in.ore.size() == 2, "compare takes two ORE operands");
        return UdfOutput{compare_holds(in.cmp, ore_comparator(*in.ore[0], *in.ore[1])), Scheme::kPlain, {}};
      },
      [](const UdfInput& in) { return base_task(in, BridgeOp::kCompare); });
  r.register_udf(
      UdfKind::kEqual,
      [](const UdfInput& in) {
        need(in.raw.size() == 2, "equality takes two DET operands");
        need(in.cmp == CompareOp::kEq || in.cmp == CompareOp::kNe, "DET supports only = and <>");
        const bool same = *in.raw[0] == *in.raw[1];
        return UdfOutput{in.cmp == CompareOp::kEq ? same : !same, Scheme::kPlain, {}};
      },
      [](const UdfInput& in) { return base_task(in, BridgeOp::kCompare); });
  r.register_udf(
      UdfKind::kAdd,
      [](const UdfInput& in) {
        need(in.raw.size() == 2, "add takes two AHE operands");
        need(in.arith == ArithOp::kAdd || in.arith == ArithOp::kSub, "AHE supports only + and -");
        AheCipher a = AheCipher::parse(*in.raw[0]), b = AheCipher::parse(*in.raw[1]);
        AheCipher c = in.arith == ArithOp::kAdd ? sahe_add(a, b) : sahe_sub(a, b);
        return UdfOutput{false, Scheme::kAhe, c.serialize()};
      },
      [](const UdfInput& in) { return base_task(in, BridgeOp::kArith); });
  r.register_udf(
      UdfKind::kMul,
      [](const UdfInput& in) {
        need(in.raw.size() == 2, "mul takes two MHE operands");
        need(in.arith == ArithOp::kMul || in.arith == ArithOp::kDiv, "MHE supports only * and /");
        MheCipher a = MheCipher::parse(*in.raw[0]), b = MheCipher::parse(*in.raw[1]);
        MheCipher c = in.arith == ArithOp::kMul ? smhe_mul(a, b) : smhe_div(a, b);
        return UdfOutput{false, Scheme::kMhe, c.serialize()};
      },
      [](const UdfInput& in) { return base_task(in, BridgeOp::kArith); });
  r.register_udf(UdfKind::kArithCompare, nullptr,
                 [](const UdfInput& in) { return base_task(in, BridgeOp::kArithCompare); });
  r.register_udf(UdfKind::kAggregate, nullptr, [](const UdfInput& in) {
    return base_task(in, in.convert ? BridgeOp::kConvert : BridgeOp::kAggregate);
  });
  return r;
}

PathChoice ConstantChooser::choose(UdfKind, Scheme, double, bool software_ok, bool tee_ok) {
  if (preferred_ == Path::kTee) return {tee_ok ? Path::kTee : Path::kSoftware, std::nullopt};
  return {software_ok ? Path::kSoftware : Path::kTee, std::nullopt};
}

PathChoice AdaptiveChooser::choose(UdfKind kind, Scheme result_scheme, double now, bool software_ok, bool tee_ok) {
  Decision d = sw_.choose(kind, result_scheme, now, software_ok, tee_ok);
  return {d.path, d};
}

CostModelParams cost_params_for(const EnclaveConfig& cfg, const SoftwareCosts& sw) {
  CostModelParams p;
  for (int k = 0; k < kUdfKindCount; ++k) p.software_calc[static_cast<std::size_t>(k)] = sw.of(static_cast<UdfKind>(k));
  const CostTable& c = cfg.costs;
  const double two = 2 * c.rnd_decrypt + c.compute + c.memory_copy;
  p.tee_calc[{UdfKind::kCompare, Scheme::kPlain}] = two;
  p.tee_calc[{UdfKind::kEqual, Scheme::kPlain}] = two;
  p.tee_calc[{UdfKind::kArithCompare, Scheme::kPlain}] = two + c.rnd_decrypt + c.compute;
  for (Scheme s : {Scheme::kAhe, Scheme::kMhe, Scheme::kOre, Scheme::kDet, Scheme::kRnd}) {
    p.tee_calc[{UdfKind::kAdd, s}] = two + c.encrypt_cost(s);
    p.tee_calc[{UdfKind::kMul, s}] = two + c.encrypt_cost(s);
    p.tee_calc[{UdfKind::kAggregate, s}] = two + c.encrypt_cost(s);
  }
  p.c_fixed = cfg.ecall_fixed_cost_micros;
  return p;
}

void AdaptiveChooser::complete(const PathChoice& choice, double observed_calc) {
  if (choice.decision) sw_.feedback(*choice.decision, observed_calc);
}

Dispatcher::Dispatcher(const UdfRegistry& registry, PathChooser& chooser, Enclave* enclave, MetricsSink* metrics,
                       SoftwareCosts costs, bool pooled, std::size_t batch_size)
    : registry_(registry),
      chooser_(chooser),
      enclave_(enclave),
      metrics_(metrics),
      costs_(costs),
      pooled_(pooled),
      batch_size_(batch_size == 0 ? 1 : batch_size) {}

void Dispatcher::finish(UdfCall& call, const PathChoice& choice, double observed_calc, double start, ExecContext& ctx) {
  chooser_.complete(choice, observed_calc);
  if (metrics_) metrics_->record({start, call.in.kind, call.path, call.micros, ctx.session});
}

void Dispatcher::run(std::span<UdfCall> calls, ExecContext& ctx) {
  std::vector<PathChoice> choices(calls.size());
  for (std::size_t i = 0; i < calls.size(); ++i) {
    UdfCall& c = calls[i];
    const auto& entry = registry_.lookup(c.in.kind);
    const bool sw = c.software_ok && static_cast<bool>(entry.software);
    const bool tee = c.tee_ok && static_cast<bool>(entry.tee) && enclave_ != nullptr;
    if (!sw && !tee)
      throw Error(ErrorCode::kUnsupported, std::string("no usable path for ") + udf_kind_name(c.in.kind) + " call");
    choices[i] = chooser_.choose(c.in.kind, c.in.result_scheme, ctx.now, sw, tee);
    ctx.charge(chooser_.decision_cost());
    c.path = choices[i].path;
  }

  auto to_output = [](const BridgeResult& r) { return UdfOutput{r.boolean, r.scheme, r.cipher}; };
  const double fixed = enclave_ ? enclave_->config().ecall_fixed_cost_micros : 0.0;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    UdfCall& c = calls[i];
    const double start = ctx.now;
    if (c.path == Path::kSoftware) {
      c.out = registry_.lookup(c.in.kind).software(c.in);
      c.micros = costs_.of(c.in.kind);
      ctx.charge(c.micros);
      finish(c, choices[i], c.micros, start, ctx);
    } else if (pooled_) {
      pending.push_back(i);
    } else {
      if (ctx.contexts) ctx.contexts->touch(ctx.session, ctx.now);
      const double m = enclave_->memory().paging_multiplier();
      BridgeResult r = enclave_->execute(registry_.lookup(c.in.kind).tee(c.in));
      c.out = to_output(r);
      c.micros = r.micros;
      ctx.charge(c.micros);
      finish(c, choices[i], r.micros / m - fixed, start, ctx);
    }
  }

  for (std::size_t b = 0; b < pending.size(); b += batch_size_) {
    const std::size_t e = std::min(pending.size(), b + batch_size_);
    if (ctx.contexts) ctx.contexts->touch(ctx.session, ctx.now);
    const double m = enclave_->memory().paging_multiplier();
    std::vector<BridgeTask> tasks;
    tasks.reserve(e - b);
    for (std::size_t k = b; k < e; ++k) tasks.push_back(registry_.lookup(calls[pending[k]].in.kind).tee(calls[pending[k]].in));
    double total = 0.0;
    std::vector<BridgeResult> results = enclave_->execute_batch(tasks, &total);
    double own = 0.0;
    for (const BridgeResult& r : results) own += r.micros;
    const double entry_share = (total - own) / static_cast<double>(results.size());
    const double start = ctx.now;
    ctx.charge(total);
    for (std::size_t k = b; k < e; ++k) {
      UdfCall& c = calls[pending[k]];
      const BridgeResult& r = results[k - b];
      c.out = to_output(r);
      c.micros = r.micros + entry_share;
      finish(c, choices[pending[k]], r.micros / m, start, ctx);
    }
  }
}

}  // namespace hedb
