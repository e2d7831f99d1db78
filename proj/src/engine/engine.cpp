#include "hedb/engine/engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "hedb/common/error.hpp"
#include "hedb/crypto/symmetric.hpp"

namespace hedb {

const char* plan_op_name(PlanOp op) {
  switch (op) {
    case PlanOp::kSeqScan: return "seq-scan";
    case PlanOp::kIndexScan: return "index-scan";
    case PlanOp::kFilter: return "filter";
    case PlanOp::kGroup: return "group";
    case PlanOp::kAggregate: return "aggregate";
    case PlanOp::kSort: return "sort";
    case PlanOp::kLimit: return "limit";
    case PlanOp::kProject: return "project";
    case PlanOp::kInsert: return "insert";
    case PlanOp::kUpdate: return "update";
  }
  return "?";
}

std::string Plan::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out << " -> ";
    out << plan_op_name(nodes[i].op);
    if (nodes[i].predicate) out << "[p" << *nodes[i].predicate << "]";
    out << "(" << nodes[i].est_cost << ")";
  }
  return out.str();
}

Engine::Engine(Mode mode, Enclave* enclave, AdaptiveSwitch* adaptive, EngineOptions opts)
    : mode_(mode), enclave_(enclave), adaptive_(adaptive), opts_(opts), registry_(UdfRegistry::builtin()) {
  if (mode_uses_tee(mode) && !enclave_) throw Error(ErrorCode::kInvalidArgument, "enclave modes need an enclave");
  if (mode == Mode::kAdaptive && !adaptive_) throw Error(ErrorCode::kInvalidArgument, "adaptive mode needs a switch");
  if (opts_.rows_per_step == 0) throw Error(ErrorCode::kInvalidArgument, "rows_per_step must be positive");
  std::shared_ptr<PathChooser> c;
  if (mode == Mode::kAdaptive) c = std::make_shared<AdaptiveChooser>(*adaptive_);
  else c = std::make_shared<ConstantChooser>(mode_uses_tee(mode) ? Path::kTee : Path::kSoftware);
  set_chooser(std::move(c));
}

Engine::~Engine() = default;

void Engine::set_chooser(std::shared_ptr<PathChooser> chooser) {
  if (!chooser) throw Error(ErrorCode::kInvalidArgument, "null path chooser");
  chooser_ = std::move(chooser);
  const std::size_t batch = enclave_ ? enclave_->config().pool_batch_size : 1;
  dispatcher_ = std::make_unique<Dispatcher>(registry_, *chooser_, mode_uses_tee(mode_) ? enclave_ : nullptr, &metrics_,
                                             opts_.software, mode_ == Mode::kStaticTeePool, batch);
}

EncryptedTable& Engine::create_table(const TableLayout& layout, const std::string& dir) {
  std::unique_lock lock(tables_mu_);
  if (tables_.count(layout.table)) throw Error(ErrorCode::kDuplicate, "table exists");
  auto t = std::make_unique<EncryptedTable>(layout, dir, opts_.index_fanout);
  return *tables_.emplace(layout.table, std::move(t)).first->second;
}

EncryptedTable& Engine::open_table(const std::string& dir, const std::string& anon_name) {
  std::unique_lock lock(tables_mu_);
  if (tables_.count(anon_name)) throw Error(ErrorCode::kDuplicate, "table exists");
  return *tables_.emplace(anon_name, EncryptedTable::open(dir, anon_name, opts_.index_fanout)).first->second;
}

EncryptedTable& Engine::table(const std::string& anon_name) const {
  std::shared_lock lock(tables_mu_);
  auto it = tables_.find(anon_name);
  if (it == tables_.end()) throw Error(ErrorCode::kNotFound, "unknown table " + anon_name);
  return *it->second;
}

bool Engine::has_table(const std::string& anon_name) const {
  std::shared_lock lock(tables_mu_);
  return tables_.count(anon_name) != 0;
}

std::vector<const EncryptedTable*> Engine::tables() const {
  std::shared_lock lock(tables_mu_);
  std::vector<const EncryptedTable*> out;
  for (auto& [_, t] : tables_) out.push_back(t.get());
  return out;
}

std::uint64_t Engine::insert(const std::string& anon_name, EncryptedRow row) { return table(anon_name).insert(std::move(row)); }

namespace {

bool is_aggregate(ProjKind k) { return k != ProjKind::kColumn; }

std::optional<std::size_t> field_of(const TableLayout& l, const RwColumn& c, Scheme s) {
  return l.find(c.column, c.plain ? Scheme::kPlain : s);
}

}  // namespace

Plan Engine::plan(const RewrittenQuery& q) const {
  const EncryptedTable& t = table(q.table);
  const TableLayout& l = t.layout();
  Plan p;
  if (q.kind == StatementKind::kInsert) {
    p.nodes.push_back({PlanOp::kInsert, opts_.row_write, std::nullopt});
    return p;
  }

  // Access path: an ORE-indexed column with a usable literal.
  std::map<std::size_t, std::vector<std::size_t>> by_field;
  for (std::size_t i = 0; i < q.where.size(); ++i) {
    const RwPredicate& w = q.where[i];
    if (w.column.plain || w.arith || !w.software || w.cmp == CompareOp::kNe || !w.rhs.count(Scheme::kOre)) continue;
    auto f = l.find(w.column.column, Scheme::kOre);
    if (f && t.has_index(*f)) by_field[*f].push_back(i);
  }
  if (!by_field.empty()) {
    auto best = by_field.begin();
    auto has_eq = [&](const std::vector<std::size_t>& v) {
      return std::any_of(v.begin(), v.end(), [&](std::size_t i) { return q.where[i].cmp == CompareOp::kEq; });
    };
    for (auto it = by_field.begin(); it != by_field.end(); ++it)
      if (has_eq(it->second) && !has_eq(best->second)) best = it;
    p.index_scan = true;
    p.index_field = best->first;
    for (std::size_t i : best->second) {
      CompareOp c = q.where[i].cmp;
      if (c == CompareOp::kEq && !p.index_eq) p.index_eq = i;
      else if ((c == CompareOp::kGt || c == CompareOp::kGe) && !p.index_low && !p.index_eq) p.index_low = i;
      else if ((c == CompareOp::kLt || c == CompareOp::kLe) && !p.index_high && !p.index_eq) p.index_high = i;
    }
    if (p.index_eq) p.index_low = p.index_high = std::nullopt;
  }
  const double index_cost = opts_.planner.ore_compare * 2.0 * std::log2(static_cast<double>(opts_.index_fanout));
  if (p.index_scan) p.nodes.push_back({PlanOp::kIndexScan, index_cost, p.index_eq ? p.index_eq : p.index_low ? p.index_low : p.index_high});
  else p.nodes.push_back({PlanOp::kSeqScan, opts_.row_visit, std::nullopt});

  const double c_runtime = adaptive_ ? adaptive_->c_runtime(UdfKind::kCompare, Scheme::kPlain) : 0.0;
  const bool sw_mode = mode_ == Mode::kSoftware || mode_ == Mode::kPlaintext || mode_ == Mode::kAdaptive;
  const bool tee_mode = mode_uses_tee(mode_);
  std::vector<std::pair<double, std::size_t>> filters;
  for (std::size_t i = 0; i < q.where.size(); ++i) {
    if (p.index_eq == i || p.index_low == i || p.index_high == i) continue;
    const RwPredicate& w = q.where[i];
    double est = 1e18;
    if (w.software && (sw_mode || *w.software == Capability::kPlain)) {
      switch (*w.software) {
        case Capability::kPlain: est = opts_.planner.plain; break;
        case Capability::kDetEqual: est = opts_.planner.det_equal; break;
        case Capability::kOreCompare: est = opts_.planner.ore_compare; break;
        default: est = opts_.planner.he; break;
      }
    }
    if (w.tee && tee_mode) est = std::min(est, opts_.planner.tee_bridge + c_runtime);
    filters.emplace_back(est, i);
  }
  std::stable_sort(filters.begin(), filters.end(), [](auto& a, auto& b) { return a.first < b.first; });
  for (auto& [est, i] : filters) {
    p.filters.push_back(i);
    p.filter_costs.push_back(est);
    p.nodes.push_back({PlanOp::kFilter, est, i});
  }

  if (q.kind == StatementKind::kUpdate) {
    p.nodes.push_back({PlanOp::kUpdate, opts_.row_write, std::nullopt});
    return p;
  }
  const bool aggregates = std::any_of(q.projections.begin(), q.projections.end(), [](auto& x) { return is_aggregate(x.kind); });
  if (q.group_by) {
    if (q.order_by) throw Error(ErrorCode::kUnsupported, "ORDER BY together with GROUP BY");
    p.nodes.push_back({PlanOp::kGroup, opts_.planner.det_equal, std::nullopt});
  } else if (aggregates) {
    if (std::any_of(q.projections.begin(), q.projections.end(), [](auto& x) { return !is_aggregate(x.kind); }))
      throw Error(ErrorCode::kUnsupported, "plain columns next to aggregates need GROUP BY");
    if (q.order_by) throw Error(ErrorCode::kUnsupported, "ORDER BY over an aggregate result");
    p.nodes.push_back({PlanOp::kAggregate, opts_.planner.he, std::nullopt});
  }
  if (q.order_by) p.nodes.push_back({PlanOp::kSort, opts_.planner.ore_compare, std::nullopt});
  if (q.limit) p.nodes.push_back({PlanOp::kLimit, 0.0, std::nullopt});
  p.nodes.push_back({PlanOp::kProject, 0.0, std::nullopt});
  (void)field_of;
  return p;
}

class QueryExecutionImpl : public QueryExecution {
 public:
  QueryExecutionImpl(Engine& engine, RewrittenQuery q)
      : e_(engine), q_(std::move(q)), table_(engine.table(q_.table)), layout_(table_.layout()), plan_(engine.plan(q_)) {
    for (const RwPredicate& w : q_.where) {
      Prepared pr;
      auto ore = w.rhs.find(Scheme::kOre);
      if (ore != w.rhs.end()) pr.rhs_ore = OreCipher::parse(ore->second);
      if (w.rhs.count(Scheme::kRnd)) pr.rhs_rnd = Operand{w.rhs.at(Scheme::kRnd), w.column.label};
      if (w.arith_operand.count(Scheme::kRnd)) pr.arg_rnd = Operand{w.arith_operand.at(Scheme::kRnd), w.column.label};
      prepared_.push_back(std::move(pr));
    }
  }

  State state() const override { return state_; }
  const Plan& plan() const override { return plan_; }

  const RoundTripRequest& request() const override {
    if (state_ != State::kNeedClient) throw Error(ErrorCode::kProtocol, "no round trip pending");
    return request_;
  }

  EncryptedResult take_result() override {
    if (state_ != State::kDone) throw Error(ErrorCode::kProtocol, "query has not finished");
    return std::move(result_);
  }

  void resume(RoundTripResponse response) override {
    if (state_ != State::kNeedClient) throw Error(ErrorCode::kProtocol, "no round trip pending");
    response_ = std::move(response);
    have_response_ = true;
    state_ = State::kRunning;
  }

  State step(ExecContext& ctx, std::size_t max_rows) override {
    if (state_ == State::kNeedClient) throw Error(ErrorCode::kProtocol, "round trip pending");
    if (state_ == State::kDone) return state_;
    if (max_rows == 0) max_rows = e_.options().rows_per_step;

    switch (phase_) {
      case Phase::kStart:
        if (q_.kind == StatementKind::kInsert) {
          run_insert(ctx);
          return finish();
        }
        open_candidates(ctx);
        phase_ = Phase::kScan;
        [[fallthrough]];
      case Phase::kScan:
        if (!scan_chunk(ctx, max_rows)) return state_;
        if (cursor_ < candidates_.size() || !chunk_.empty()) return state_;
        phase_ = Phase::kFinal;
        return state_;
      case Phase::kFinal:
        if (q_.kind == StatementKind::kUpdate) {
          if (!run_update(ctx, max_rows)) return state_;
        } else {
          run_select(ctx);
        }
        return finish();
    }
    return state_;
  }

 private:
  enum class Phase { kStart, kScan, kFinal };

  struct Prepared {
    std::optional<OreCipher> rhs_ore;
    std::optional<Operand> rhs_rnd;
    std::optional<Operand> arg_rnd;
  };

  State finish() {
    state_ = State::kDone;
    return state_;
  }

  State pause(RoundTripRequest r) {
    request_ = std::move(r);
    state_ = State::kNeedClient;
    return state_;
  }

  const SoftwareCosts& sw() const { return e_.options().software; }
  bool software_mode() const {
    return e_.mode() == Mode::kSoftware || e_.mode() == Mode::kPlaintext || e_.mode() == Mode::kAdaptive;
  }
  bool tee_mode() const { return mode_uses_tee(e_.mode()); }

  std::size_t field(const RwColumn& c, Scheme s) const { return layout_.require(c.column, c.plain ? Scheme::kPlain : s); }

  void run_insert(ExecContext& ctx) {
    table_.insert(q_.insert_row);
    double cost = e_.options().row_write;
    for (std::size_t i = 0; i < layout_.fields.size(); ++i)
      if (table_.has_index(i))
        cost += sw().ore_compare * static_cast<double>(table_.index(i).height()) *
                std::log2(static_cast<double>(e_.options().index_fanout));
    ctx.charge(cost);
    result_.affected = 1;
  }

  void open_candidates(ExecContext& ctx) {
    if (!plan_.index_scan) {
      const std::size_t n = table_.row_count();
      candidates_.resize(n);
      for (std::size_t i = 0; i < n; ++i) candidates_[i] = i;
      return;
    }
    const CipherBTree& idx = table_.index(plan_.index_field);
    if (plan_.index_eq) {
      candidates_ = idx.equal_scan(*prepared_[*plan_.index_eq].rhs_ore);
    } else {
      RangeBound lo = RangeBound::unbounded(), hi = RangeBound::unbounded();
      if (plan_.index_low) {
        const RwPredicate& w = q_.where[*plan_.index_low];
        lo = {&*prepared_[*plan_.index_low].rhs_ore, w.cmp == CompareOp::kGe};
      }
      if (plan_.index_high) {
        const RwPredicate& w = q_.where[*plan_.index_high];
        hi = {&*prepared_[*plan_.index_high].rhs_ore, w.cmp == CompareOp::kLe};
      }
      candidates_ = idx.range_scan(lo, hi);
    }
    std::sort(candidates_.begin(), candidates_.end());
    const double descent = 2.0 * static_cast<double>(idx.height()) * std::log2(static_cast<double>(idx.fanout()));
    ctx.charge(sw().ore_compare * (descent + static_cast<double>(candidates_.size())));
  }

  // Returns false when paused for the client.
  bool scan_chunk(ExecContext& ctx, std::size_t max_rows) {
    if (chunk_.empty() && !have_response_) {
      const std::size_t end = std::min(candidates_.size(), cursor_ + max_rows);
      std::vector<std::uint64_t> ids(candidates_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                     candidates_.begin() + static_cast<std::ptrdiff_t>(end));
      cursor_ = end;
      chunk_ = table_.rows(ids);
      ctx.charge(e_.options().row_visit * static_cast<double>(chunk_.size()));
      filter_pos_ = 0;
    }
    while (filter_pos_ < plan_.filters.size() && !chunk_.empty()) {
      if (!apply_filter(plan_.filters[filter_pos_], ctx)) return false;
      ++filter_pos_;
    }
    for (RowRef& r : chunk_) matched_.push_back(std::move(r));
    chunk_.clear();
    return true;
  }

  template <typename Keep>
  void retain(const Keep& keep) {
    std::vector<RowRef> next;
    for (std::size_t i = 0; i < chunk_.size(); ++i)
      if (keep(i)) next.push_back(chunk_[i]);
    chunk_ = std::move(next);
  }

  bool apply_filter(std::size_t pi, ExecContext& ctx) {
    const RwPredicate& w = q_.where[pi];
    const Prepared& pr = prepared_[pi];
    Dispatcher& d = e_.dispatcher();

    if (w.column.plain) {
      const std::size_t f = field(w.column, Scheme::kPlain);
      const Value rhs = decode_value(w.rhs.at(Scheme::kPlain), w.column.type);
      std::optional<std::int64_t> arg;
      if (w.arith) arg = as_int(decode_value(w.arith_operand.at(Scheme::kPlain), ValueType::kInt));
      retain([&](std::size_t i) {
        Value v = decode_value(chunk_[i]->row.fields[f], w.column.type);
        if (arg) v = plain_arith(*w.arith, as_int(v), *arg);
        return compare_holds(w.cmp, plain_order(v, rhs));
      });
      ctx.charge(sw().plain_op * static_cast<double>(chunk_.size()));
      return true;
    }

    const bool sw_ok = w.software.has_value() && software_mode();
    const bool tee_ok = w.tee && tee_mode();

    if (w.arith) {
      // Enclave evaluation whenever it is available; otherwise the client
      // finishes the comparison.
      if (tee_ok) {
        std::vector<UdfCall> calls(chunk_.size());
        const std::size_t rf = field(w.column, Scheme::kRnd);
        for (std::size_t i = 0; i < chunk_.size(); ++i) {
          UdfCall& c = calls[i];
          c.in.kind = UdfKind::kArithCompare;
          c.in.cmp = w.cmp;
          c.in.arith = *w.arith;
          c.in.type = w.column.type;
          c.in.rnd = {Operand{chunk_[i]->row.fields[rf], w.column.label}, *pr.arg_rnd, *pr.rhs_rnd};
          c.software_ok = false;
        }
        d.run(calls, ctx);
        retain([&](std::size_t i) { return calls[i].out.boolean; });
        return true;
      }
      if (!sw_ok) throw Error(ErrorCode::kUnsupported, "predicate has no usable path in this mode");
      if (!have_response_) {
        const Scheme he = *w.software == Capability::kHeMul ? Scheme::kMhe : Scheme::kAhe;
        const std::size_t hf = field(w.column, he);
        const Bytes& operand = w.arith_operand.at(he);
        std::vector<UdfCall> calls(chunk_.size());
        for (std::size_t i = 0; i < chunk_.size(); ++i) {
          UdfCall& c = calls[i];
          c.in.kind = he == Scheme::kMhe ? UdfKind::kMul : UdfKind::kAdd;
          c.in.arith = *w.arith;
          c.in.raw = {&chunk_[i]->row.fields[hf], &operand};
          c.tee_ok = false;
        }
        d.run(calls, ctx);
        RoundTripRequest r{RoundTripKind::kCompare, pi, he, {}};
        for (UdfCall& c : calls) r.values.push_back(std::move(c.out.cipher));
        pause(std::move(r));
        return false;
      }
      have_response_ = false;
      if (response_.ore.size() != chunk_.size()) throw Error(ErrorCode::kProtocol, "round trip answer has the wrong size");
      ctx.charge(e_.options().round_trip_fixed + e_.options().round_trip_value * static_cast<double>(chunk_.size()));
      std::vector<OreCipher> lhs;
      lhs.reserve(response_.ore.size());
      for (const Bytes& b : response_.ore) lhs.push_back(OreCipher::parse(b));
      std::vector<UdfCall> calls(chunk_.size());
      for (std::size_t i = 0; i < chunk_.size(); ++i) {
        UdfCall& c = calls[i];
        c.in.kind = UdfKind::kCompare;
        c.in.cmp = w.cmp;
        c.in.ore = {&lhs[i], &*pr.rhs_ore};
        c.tee_ok = false;
      }
      d.run(calls, ctx);
      retain([&](std::size_t i) { return calls[i].out.boolean; });
      return true;
    }

    UdfKind kind;
    if (sw_ok) kind = *w.software == Capability::kDetEqual ? UdfKind::kEqual : UdfKind::kCompare;
    else kind = (w.cmp == CompareOp::kEq || w.cmp == CompareOp::kNe) ? UdfKind::kEqual : UdfKind::kCompare;
    if (!sw_ok && !tee_ok) throw Error(ErrorCode::kUnsupported, "predicate has no usable path in this mode");

    std::optional<std::size_t> df, of, rf;
    if (sw_ok && *w.software == Capability::kDetEqual) df = field(w.column, Scheme::kDet);
    if (sw_ok && *w.software == Capability::kOreCompare) of = field(w.column, Scheme::kOre);
    if (tee_ok) rf = field(w.column, Scheme::kRnd);
    const Bytes* det_lit = df ? &w.rhs.at(Scheme::kDet) : nullptr;

    std::vector<UdfCall> calls(chunk_.size());
    for (std::size_t i = 0; i < chunk_.size(); ++i) {
      UdfCall& c = calls[i];
      c.in.kind = kind;
      c.in.cmp = w.cmp;
      c.in.type = w.column.type;
      if (df) c.in.raw = {&chunk_[i]->row.fields[*df], det_lit};
      if (of) c.in.ore = {&*chunk_[i]->ore[*of], &*pr.rhs_ore};
      if (rf) c.in.rnd = {Operand{chunk_[i]->row.fields[*rf], w.column.label}, *pr.rhs_rnd};
      c.software_ok = sw_ok;
      c.tee_ok = tee_ok;
    }
    d.run(calls, ctx);
    retain([&](std::size_t i) { return calls[i].out.boolean; });
    return true;
  }

  static Value plain_arith(ArithOp op, std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    bool overflow = false;
    switch (op) {
      case ArithOp::kAdd: overflow = __builtin_add_overflow(a, b, &r); break;
      case ArithOp::kSub: overflow = __builtin_sub_overflow(a, b, &r); break;
      case ArithOp::kMul: overflow = __builtin_mul_overflow(a, b, &r); break;
      case ArithOp::kDiv:
        if (b == 0) throw Error(ErrorCode::kNotInvertible, "division by zero");
        if (a % b != 0) throw Error(ErrorCode::kUnsupported, "inexact integer division");
        overflow = a == INT64_MIN && b == -1;
        if (!overflow) r = a / b;
        break;
    }
    if (overflow) throw Error(ErrorCode::kOutOfRange, "arithmetic overflow");
    return r;
  }

  static int plain_order(const Value& a, const Value& b) {
    if (is_text(a)) return as_text(a) < as_text(b) ? -1 : (as_text(b) < as_text(a) ? 1 : 0);
    return as_int(a) < as_int(b) ? -1 : (as_int(a) > as_int(b) ? 1 : 0);
  }

  // ---- SELECT ----

  ResultCell cell_of(const StoredRow& r, std::size_t f) const { return {layout_.fields[f].scheme, r.row.fields[f], false}; }

  void run_select(ExecContext& ctx) {
    for (const RwProjection& p : q_.projections)
      result_.columns.push_back({p.kind == ProjKind::kCount ? "" : p.column.label, p.column.type, p.kind});

    if (q_.group_by) {
      run_group(ctx);
    } else if (!q_.projections.empty() && is_aggregate(q_.projections.front().kind)) {
      std::vector<ResultCell> row;
      for (const RwProjection& p : q_.projections) row.push_back(aggregate(p, matched_, ctx));
      result_.rows.push_back(std::move(row));
    } else {
      if (q_.order_by) sort_rows(ctx);
      std::size_t n = matched_.size();
      if (q_.limit) n = std::min<std::size_t>(n, *q_.limit);
      std::vector<std::size_t> fields;
      for (const RwProjection& p : q_.projections) fields.push_back(field(p.column, p.output));
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<ResultCell> row;
        for (std::size_t f : fields) row.push_back(cell_of(*matched_[i], f));
        result_.rows.push_back(std::move(row));
      }
    }
    if (q_.limit && result_.rows.size() > *q_.limit) result_.rows.resize(*q_.limit);
  }

  ResultCell aggregate(const RwProjection& p, const std::vector<RowRef>& rows, ExecContext& ctx) {
    if (p.kind == ProjKind::kCount) {
      ctx.charge(sw().plain_op);
      return {Scheme::kPlain, encode_i64(static_cast<std::int64_t>(rows.size())), false};
    }
    if (rows.empty()) return {Scheme::kPlain, {}, true};
    Dispatcher& d = e_.dispatcher();

    if (p.column.plain) {
      const std::size_t f = field(p.column, Scheme::kPlain);
      Value acc = decode_value(rows[0]->row.fields[f], p.column.type);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        Value v = decode_value(rows[i]->row.fields[f], p.column.type);
        if (p.kind == ProjKind::kSum) acc = plain_arith(ArithOp::kAdd, as_int(acc), as_int(v));
        else if ((p.kind == ProjKind::kMin) == (plain_order(v, acc) < 0) && plain_order(v, acc) != 0) acc = v;
      }
      ctx.charge(sw().plain_op * static_cast<double>(rows.size()));
      return {Scheme::kPlain, encode_value(acc), false};
    }

    // Software operators when the column carries them, the enclave otherwise.
    if (p.software && software_mode()) {
      if (p.kind == ProjKind::kSum) {
        const std::size_t f = field(p.column, Scheme::kAhe);
        Bytes acc = rows[0]->row.fields[f];
        for (std::size_t i = 1; i < rows.size(); ++i) {
          UdfCall c;
          c.in.kind = UdfKind::kAdd;
          c.in.arith = ArithOp::kAdd;
          c.in.raw = {&acc, &rows[i]->row.fields[f]};
          c.tee_ok = false;
          d.run_one(c, ctx);
          acc = std::move(c.out.cipher);
        }
        return {Scheme::kAhe, std::move(acc), false};
      }
      const std::size_t of = field(p.column, Scheme::kOre);
      std::size_t best = 0;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        UdfCall c;
        c.in.kind = UdfKind::kCompare;
        c.in.cmp = p.kind == ProjKind::kMin ? CompareOp::kLt : CompareOp::kGt;
        c.in.ore = {&*rows[i]->ore[of], &*rows[best]->ore[of]};
        c.tee_ok = false;
        d.run_one(c, ctx);
        if (c.out.boolean) best = i;
      }
      return cell_of(*rows[best], field(p.column, p.software_output));
    }
    if (!p.tee || !tee_mode()) throw Error(ErrorCode::kUnsupported, "aggregate has no usable path in this mode");
    const std::size_t rf = field(p.column, Scheme::kRnd);
    UdfCall c;
    c.in.kind = UdfKind::kAggregate;
    c.in.agg = p.kind == ProjKind::kSum ? AggOp::kSum : p.kind == ProjKind::kMin ? AggOp::kMin : AggOp::kMax;
    c.in.type = p.column.type;
    c.in.result_scheme = Scheme::kRnd;
    c.in.result_label = p.column.label;
    for (const RowRef& r : rows) c.in.rnd.push_back(Operand{r->row.fields[rf], p.column.label});
    c.software_ok = false;
    d.run_one(c, ctx);
    return {c.out.scheme, std::move(c.out.cipher), false};
  }

  void run_group(ExecContext& ctx) {
    const RwGroup& g = *q_.group_by;
    std::vector<ResultCell> keys(matched_.size());
    if (g.column.plain || (g.software && software_mode())) {
      const std::size_t f = field(g.column, Scheme::kDet);
      for (std::size_t i = 0; i < matched_.size(); ++i) keys[i] = cell_of(*matched_[i], f);
      ctx.charge(sw().det_equal * static_cast<double>(matched_.size()));
    } else {
      if (!g.tee || !tee_mode()) throw Error(ErrorCode::kUnsupported, "GROUP BY has no usable path in this mode");
      const std::size_t rf = field(g.column, Scheme::kRnd);
      const std::size_t step = e_.options().rows_per_step;
      for (std::size_t b = 0; b < matched_.size(); b += step) {
        const std::size_t end = std::min(matched_.size(), b + step);
        std::vector<UdfCall> calls(end - b);
        for (std::size_t i = b; i < end; ++i) {
          UdfCall& c = calls[i - b];
          c.in.kind = UdfKind::kAggregate;
          c.in.convert = true;
          c.in.type = g.column.type;
          c.in.result_scheme = Scheme::kDet;
          c.in.result_label = g.column.label;
          c.in.rnd = {Operand{matched_[i]->row.fields[rf], g.column.label}};
          c.software_ok = false;
        }
        e_.dispatcher().run(calls, ctx);
        for (std::size_t i = b; i < end; ++i) keys[i] = {Scheme::kDet, std::move(calls[i - b].out.cipher), false};
      }
    }

    std::vector<std::size_t> order;
    std::vector<std::vector<RowRef>> members;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < matched_.size(); ++i) {
      std::string k(keys[i].bytes.begin(), keys[i].bytes.end());
      auto [it, fresh] = slot.emplace(k, members.size());
      if (fresh) {
        members.emplace_back();
        order.push_back(i);
      }
      members[it->second].push_back(matched_[i]);
    }
    for (std::size_t gi = 0; gi < members.size(); ++gi) {
      std::vector<ResultCell> row;
      for (const RwProjection& p : q_.projections) {
        if (p.kind == ProjKind::kColumn) row.push_back(keys[order[gi]]);
        else row.push_back(aggregate(p, members[gi], ctx));
      }
      result_.rows.push_back(std::move(row));
    }
  }

  void sort_rows(ExecContext& ctx) {
    const RwOrder& o = *q_.order_by;
    if (o.column.plain) {
      const std::size_t f = field(o.column, Scheme::kPlain);
      std::stable_sort(matched_.begin(), matched_.end(), [&](const RowRef& a, const RowRef& b) {
        ctx.charge(sw().plain_op);
        Value va = decode_value(a->row.fields[f], o.column.type), vb = decode_value(b->row.fields[f], o.column.type);
        return o.desc ? plain_order(vb, va) < 0 : plain_order(va, vb) < 0;
      });
      return;
    }
    const bool sw_ok = o.software && software_mode();
    const bool tee_ok = o.tee && tee_mode();
    if (!sw_ok && !tee_ok) throw Error(ErrorCode::kUnsupported, "ORDER BY has no usable path in this mode");
    std::optional<std::size_t> of, rf;
    if (sw_ok) of = field(o.column, Scheme::kOre);
    if (tee_ok) rf = field(o.column, Scheme::kRnd);
    auto less = [&](const RowRef& x, const RowRef& y) {
      const RowRef& a = o.desc ? y : x;
      const RowRef& b = o.desc ? x : y;
      UdfCall c;
      c.in.kind = UdfKind::kCompare;
      c.in.cmp = CompareOp::kLt;
      c.in.type = o.column.type;
      if (of) c.in.ore = {&*a->ore[*of], &*b->ore[*of]};
      if (rf) c.in.rnd = {Operand{a->row.fields[*rf], o.column.label}, Operand{b->row.fields[*rf], o.column.label}};
      c.software_ok = sw_ok;
      c.tee_ok = tee_ok;
      e_.dispatcher().run_one(c, ctx);
      return c.out.boolean;
    };
    std::stable_sort(matched_.begin(), matched_.end(), less);
  }

  // ---- UPDATE ----

  // Returns false when paused for the client.
  bool run_update(ExecContext& ctx, std::size_t max_rows) {
    if (updates_.empty()) updates_.resize(matched_.size());
    while (assign_pos_ < q_.assignments.size()) {
      const RwAssignment& a = q_.assignments[assign_pos_];
      std::vector<std::size_t> fields;
      for (std::size_t f = 0; f < layout_.fields.size(); ++f)
        if (layout_.fields[f].column == a.column.column) fields.push_back(f);

      if (a.is_literal) {
        if (a.values.size() != fields.size()) throw Error(ErrorCode::kLayoutMismatch, "assignment width differs from layout");
        for (auto& u : updates_)
          for (std::size_t k = 0; k < fields.size(); ++k) u[fields[k]] = a.values[k];
      } else if (a.column.plain) {
        const std::int64_t arg = as_int(decode_value(a.operand.at(Scheme::kPlain), ValueType::kInt));
        for (std::size_t i = 0; i < matched_.size(); ++i) {
          std::int64_t cur = as_int(decode_value(current(i, fields[0]), ValueType::kInt));
          updates_[i][fields[0]] = encode_value(plain_arith(a.op, cur, arg));
        }
        ctx.charge(sw().plain_op * static_cast<double>(matched_.size()));
      } else if (a.tee && tee_mode()) {
        const std::size_t rf = field(a.column, Scheme::kRnd);
        const Operand arg{a.operand.at(Scheme::kRnd), a.column.label};
        const UdfKind kind = a.op == ArithOp::kMul || a.op == ArithOp::kDiv ? UdfKind::kMul : UdfKind::kAdd;
        for (std::size_t b = 0; b < matched_.size(); b += max_rows) {
          const std::size_t end = std::min(matched_.size(), b + max_rows);
          std::vector<UdfCall> calls;
          for (std::size_t i = b; i < end; ++i) {
            const Bytes& cur = current(i, rf);
            for (std::size_t f : fields) {
              UdfCall c;
              c.in.kind = kind;
              c.in.arith = a.op;
              c.in.type = ValueType::kInt;
              c.in.result_scheme = layout_.fields[f].scheme;
              c.in.result_label = a.column.label;
              c.in.result_ore_bits = layout_.fields[f].ore_bits;
              c.in.rnd = {Operand{cur, a.column.label}, arg};
              c.software_ok = false;
              calls.push_back(std::move(c));
            }
          }
          e_.dispatcher().run(calls, ctx);
          for (std::size_t i = b, k = 0; i < end; ++i)
            for (std::size_t f : fields) updates_[i][f] = std::move(calls[k++].out.cipher);
        }
      } else if (a.software && software_mode()) {
        if (!have_response_) {
          const std::size_t src = field(a.column, a.round_trip_source);
          RoundTripRequest r{RoundTripKind::kUpdate, assign_pos_, a.round_trip_source, {}};
          for (std::size_t i = 0; i < matched_.size(); ++i) r.values.push_back(current(i, src));
          if (!r.values.empty()) {
            pause(std::move(r));
            return false;
          }
        } else {
          have_response_ = false;
          if (response_.fields.size() != matched_.size()) throw Error(ErrorCode::kProtocol, "round trip answer has the wrong size");
          ctx.charge(e_.options().round_trip_fixed + e_.options().round_trip_value * static_cast<double>(matched_.size()));
          for (std::size_t i = 0; i < matched_.size(); ++i) {
            if (response_.fields[i].size() != fields.size()) throw Error(ErrorCode::kProtocol, "round trip row has the wrong width");
            for (std::size_t k = 0; k < fields.size(); ++k) updates_[i][fields[k]] = std::move(response_.fields[i][k]);
          }
        }
      } else {
        throw Error(ErrorCode::kUnsupported, "assignment has no usable path in this mode");
      }
      ++assign_pos_;
    }
    for (std::size_t i = 0; i < matched_.size(); ++i) table_.update(matched_[i]->id, updates_[i]);
    ctx.charge(e_.options().row_write * static_cast<double>(matched_.size()));
    result_.affected = matched_.size();
    return true;
  }

  const Bytes& current(std::size_t i, std::size_t f) const {
    auto it = updates_[i].find(f);
    return it != updates_[i].end() ? it->second : matched_[i]->row.fields[f];
  }

  Engine& e_;
  RewrittenQuery q_;
  EncryptedTable& table_;
  const TableLayout& layout_;
  Plan plan_;
  std::vector<Prepared> prepared_;
  State state_ = State::kRunning;
  Phase phase_ = Phase::kStart;
  std::vector<std::uint64_t> candidates_;
  std::size_t cursor_ = 0;
  std::vector<RowRef> chunk_;
  std::size_t filter_pos_ = 0;
  std::vector<RowRef> matched_;
  std::vector<std::map<std::size_t, Bytes>> updates_;
  std::size_t assign_pos_ = 0;
  RoundTripRequest request_;
  RoundTripResponse response_;
  bool have_response_ = false;
  EncryptedResult result_;
};

std::unique_ptr<QueryExecution> Engine::start(const RewrittenQuery& q) {
  if (q.mode != mode_ && !(q.mode == Mode::kStaticTee && mode_ == Mode::kStaticTeePool) &&
      !(q.mode == Mode::kStaticTeePool && mode_ == Mode::kStaticTee))
    throw Error(ErrorCode::kInvalidArgument, std::string("query rewritten for ") + mode_name(q.mode) + " sent to a " +
                                                 mode_name(mode_) + " engine");
  return std::make_unique<QueryExecutionImpl>(*this, q);
}

EncryptedResult Engine::execute(const RewrittenQuery& q, ExecContext& ctx, const RoundTripResolver& resolver) {
  auto exec = start(q);
  while (true) {
    switch (exec->step(ctx)) {
      case QueryExecution::State::kDone: return exec->take_result();
      case QueryExecution::State::kNeedClient:
        if (!resolver) throw Error(ErrorCode::kProtocol, "query needs a client round trip but no resolver was given");
        exec->resume(resolver(exec->request()));
        break;
      case QueryExecution::State::kRunning: break;
    }
  }
}

}  // namespace hedb
