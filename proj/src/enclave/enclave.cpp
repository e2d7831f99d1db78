#include "hedb/enclave/enclave.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <compare>
#include <random>

#include "hedb/crypto/crypto.hpp"

namespace hedb {

namespace {

constexpr std::uint8_t kSealVersion = 1;

std::int64_t as_int(const Bytes& b) {
  if (b.size() != 8) throw Error(ErrorCode::kFormat, "integer operand must be 8 bytes");
  return decode_i64(b);
}

int order_of(ValueType t, const Bytes& a, const Bytes& b) {
  if (t == ValueType::kInt) {
    std::int64_t x = as_int(a), y = as_int(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  auto c = std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

std::int64_t apply(ArithOp op, std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  bool overflow = false;
  switch (op) {
    case ArithOp::kAdd: overflow = __builtin_add_overflow(a, b, &out); break;
    case ArithOp::kSub: overflow = __builtin_sub_overflow(a, b, &out); break;
    case ArithOp::kMul: overflow = __builtin_mul_overflow(a, b, &out); break;
    case ArithOp::kDiv:
      if (b == 0) throw Error(ErrorCode::kNotInvertible, "division by zero");
      // Matches the multiplicative scheme, where only exact quotients decrypt to integers.
      if (a % b != 0) throw Error(ErrorCode::kUnsupported, "inexact integer division");
      out = a / b;
      break;
  }
  if (overflow) throw Error(ErrorCode::kOutOfRange, "64-bit overflow in enclave arithmetic");
  return out;
}

Bytes sealing_key(const std::string& identity) {
  return hkdf_sha256(to_bytes(identity), to_bytes("hedb-seal"), to_bytes("sealing-key"), 32);
}

}  // namespace

const char* compare_op_name(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return "lt";
    case CompareOp::kLe: return "le";
    case CompareOp::kGt: return "gt";
    case CompareOp::kGe: return "ge";
    case CompareOp::kEq: return "eq";
    case CompareOp::kNe: return "ne";
  }
  return "?";
}

const char* arith_op_name(ArithOp op) {
  switch (op) {
    case ArithOp::kAdd: return "add";
    case ArithOp::kSub: return "sub";
    case ArithOp::kMul: return "mul";
    case ArithOp::kDiv: return "div";
  }
  return "?";
}

bool compare_holds(CompareOp op, int ordering) {
  switch (op) {
    case CompareOp::kLt: return ordering < 0;
    case CompareOp::kLe: return ordering <= 0;
    case CompareOp::kGt: return ordering > 0;
    case CompareOp::kGe: return ordering >= 0;
    case CompareOp::kEq: return ordering == 0;
    case CompareOp::kNe: return ordering != 0;
  }
  return false;
}

Enclave::Enclave(EnclaveConfig cfg)
    : cfg_(std::move(cfg)),
      memory_(cfg_.epc_budget_bytes, cfg_.paging_slope, cfg_.page_fault_penalty_factor),
      cache_on_(cfg_.cache_enabled),
      cache_(cfg_.cache_capacity_entries) {
  cfg_.validate();
  if (cache_on_) cache_region_ = memory_.allocate(cfg_.cache_capacity_entries * cfg_.cache_entry_bytes, "cache");
}

Enclave::~Enclave() = default;

bool Enclave::has_keys() const {
  std::lock_guard lock(mu_);
  return master_.has_value();
}

void Enclave::provision(const MasterKey& master) {
  std::lock_guard lock(mu_);
  master_ = master;
  keys_.clear();
  cache_.clear();
}

void Enclave::clear_keys() {
  std::lock_guard lock(mu_);
  master_.reset();
  keys_.clear();
  cache_.clear();
}

void Enclave::seal(const std::string& path) const {
  Key32 secret;
  {
    std::lock_guard lock(mu_);
    if (!master_) throw Error(ErrorCode::kMissingKeys, "nothing to seal: enclave holds no keys");
    secret = master_->secret();
  }
  RndCipher wrapped = aead_seal(sealing_key(cfg_.sealing_identity), secret, to_bytes("hedb-sealed-keys"));
  ByteWriter w;
  w.u8(kSealVersion);
  w.raw(wrapped.nonce);
  w.blob(wrapped.body);
  w.raw(wrapped.tag);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write sealed file " + path);
  const Bytes& b = w.bytes();
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!f) throw Error(ErrorCode::kIo, "short write to " + path);
}

void Enclave::unseal(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot read sealed file " + path);
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  if (r.u8() != kSealVersion) throw Error(ErrorCode::kFormat, "unsupported sealed file version");
  RndCipher wrapped;
  ByteView nonce = r.raw(wrapped.nonce.size());
  std::copy(nonce.begin(), nonce.end(), wrapped.nonce.begin());
  wrapped.body = r.blob();
  ByteView tag = r.raw(wrapped.tag.size());
  std::copy(tag.begin(), tag.end(), wrapped.tag.begin());
  r.expect_done();
  Bytes secret = aead_open(sealing_key(cfg_.sealing_identity), wrapped, to_bytes("hedb-sealed-keys"));
  provision(MasterKey::from_bytes(secret));
}

const ColumnKey& Enclave::key_for(const std::string& label, Scheme scheme) {
  // Caller holds mu_.
  if (!master_) throw Error(ErrorCode::kMissingKeys, "enclave has no provisioned keys");
  auto k = std::make_pair(label, scheme);
  auto it = keys_.find(k);
  if (it == keys_.end()) it = keys_.emplace(k, derive_column_key(*master_, label, scheme)).first;
  return it->second;
}

Bytes Enclave::decrypt_operand(const Operand& operand, bool& hit) {
  std::lock_guard lock(mu_);
  const ColumnKey& key = key_for(operand.label, Scheme::kRnd);
  std::string cache_key;
  if (cache_on_) {
    cache_key.reserve(operand.label.size() + 1 + operand.cipher.size());
    cache_key.append(operand.label).push_back('\0');
    cache_key.append(operand.cipher.begin(), operand.cipher.end());
    if (auto v = cache_.get(cache_key)) {
      hit = true;
      return *v;
    }
  }
  hit = false;
  Bytes plain = rnd_decrypt(RndCipher::parse(operand.cipher), key);
  if (cache_on_) cache_.put(cache_key, plain);
  return plain;
}

Bytes Enclave::cache_lookup_or_decrypt(const Operand& operand, bool* hit) {
  bool h = false;
  Bytes v = decrypt_operand(operand, h);
  if (hit) *hit = h;
  return v;
}

void Enclave::set_cache_enabled(bool on) {
  std::lock_guard lock(mu_);
  if (on == cache_on_) return;
  cache_on_ = on;
  cache_.clear();
  if (on) cache_region_ = memory_.allocate(cfg_.cache_capacity_entries * cfg_.cache_entry_bytes, "cache");
  else memory_.release(cache_region_);
}

bool Enclave::cache_enabled() const {
  std::lock_guard lock(mu_);
  return cache_on_;
}

CacheStats Enclave::cache_stats() const {
  std::lock_guard lock(mu_);
  return {cache_.hits(), cache_.misses(), cache_.evictions(), cache_.size()};
}

void Enclave::reset_cache() {
  std::lock_guard lock(mu_);
  cache_ = LruCache<std::string, Bytes>(cfg_.cache_capacity_entries);
}

Bytes Enclave::encrypt_result(const BridgeTask& task, const Bytes& plain) {
  std::lock_guard lock(mu_);
  if (task.result_label.empty()) throw Error(ErrorCode::kInvalidArgument, "result label required");
  const ColumnKey& key = key_for(task.result_label, task.result_scheme);
  switch (task.result_scheme) {
    case Scheme::kAhe:
      return sahe_encrypt(encode_signed(as_int(plain)), key, random_u64()).serialize();
    case Scheme::kMhe:
      return smhe_encrypt(encode_signed(as_int(plain)), key, random_u64()).serialize();
    case Scheme::kOre: {
      OreParams params{task.result_ore_bits, 8};
      if (task.type == ValueType::kInt) return ore_encrypt(ore_offset_signed(as_int(plain), params.bit_width), key, params).serialize();
      return ore_encrypt_bytes(plain, key, params).serialize();
    }
    case Scheme::kDet: return det_encrypt(plain, key).serialize();
    case Scheme::kRnd: return rnd_encrypt(plain, key).serialize();
    case Scheme::kPlain: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "plaintext results may not leave the enclave");
}

BridgeResult Enclave::compute(const BridgeTask& task, const std::vector<Bytes>& plain) {
  auto need = [&](std::size_t n) {
    if (plain.size() != n) throw Error(ErrorCode::kInvalidArgument, "wrong operand count for bridge task");
  };
  BridgeResult out;
  out.task_id = task.id;
  switch (task.op) {
    case BridgeOp::kCompare:
      need(2);
      out.boolean = compare_holds(task.cmp, order_of(task.type, plain[0], plain[1]));
      return out;
    case BridgeOp::kArithCompare: {
      need(3);
      if (task.type != ValueType::kInt) throw Error(ErrorCode::kInvalidArgument, "arithmetic on text operands");
      std::int64_t v = apply(task.arith, as_int(plain[0]), as_int(plain[1]));
      out.boolean = compare_holds(task.cmp, order_of(ValueType::kInt, encode_i64(v), plain[2]));
      return out;
    }
    case BridgeOp::kArith: {
      need(2);
      if (task.type != ValueType::kInt) throw Error(ErrorCode::kInvalidArgument, "arithmetic on text operands");
      out.scheme = task.result_scheme;
      out.cipher = encrypt_result(task, encode_i64(apply(task.arith, as_int(plain[0]), as_int(plain[1]))));
      return out;
    }
    case BridgeOp::kAggregate: {
      if (plain.empty()) throw Error(ErrorCode::kInvalidArgument, "aggregate over no operands");
      Bytes acc = plain[0];
      for (std::size_t i = 1; i < plain.size(); ++i) {
        if (task.agg == AggOp::kSum) {
          if (task.type != ValueType::kInt) throw Error(ErrorCode::kInvalidArgument, "SUM over text operands");
          acc = encode_i64(apply(ArithOp::kAdd, as_int(acc), as_int(plain[i])));
        } else {
          int c = order_of(task.type, plain[i], acc);
          if ((task.agg == AggOp::kMin && c < 0) || (task.agg == AggOp::kMax && c > 0)) acc = plain[i];
        }
      }
      out.scheme = task.result_scheme;
      out.cipher = encrypt_result(task, acc);
      return out;
    }
    case BridgeOp::kConvert:
      need(1);
      out.scheme = task.result_scheme;
      out.cipher = encrypt_result(task, plain[0]);
      return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown bridge op");
}

BridgeResult Enclave::execute(const BridgeTask& task, bool charge_entry) {
  if (!has_keys()) throw Error(ErrorCode::kMissingKeys, "enclave has no provisioned keys");
  const CostTable& c = cfg_.costs;
  double base = charge_entry ? cfg_.ecall_fixed_cost_micros : 0.0;
  std::vector<Bytes> plain;
  plain.reserve(task.operands.size());
  std::uint32_t hits = 0, misses = 0;
  for (const auto& op : task.operands) {
    bool hit = false;
    plain.push_back(decrypt_operand(op, hit));
    if (hit) {
      ++hits;
      base += c.cache_hit;
    } else {
      ++misses;
      base += c.rnd_decrypt;
    }
  }
  BridgeResult out = compute(task, plain);
  base += c.compute * static_cast<double>(std::max<std::size_t>(1, plain.size() - 1));
  base += c.encrypt_cost(out.scheme) + c.memory_copy;
  out.micros = base * memory_.paging_multiplier();
  out.cache_hits = hits;
  out.cache_misses = misses;
  if (charge_entry) note_entry();
  executed_.fetch_add(1);
  return out;
}

std::vector<BridgeResult> Enclave::execute_batch(const std::vector<BridgeTask>& tasks, double* total_micros) {
  std::vector<BridgeResult> out;
  out.reserve(tasks.size());
  double total = cfg_.ecall_fixed_cost_micros * memory_.paging_multiplier();
  note_entry();
  for (const auto& t : tasks) {
    out.push_back(execute(t, false));
    total += out.back().micros;
  }
  if (total_micros) *total_micros = total;
  return out;
}

double Enclave::probe_base_micros(ProbeKind kind, std::size_t n) const {
  const double steps = static_cast<double>(n) * std::log2(static_cast<double>(n));
  double work = 0.0;
  if (kind != ProbeKind::kBinarySearch) work += steps * cfg_.costs.probe_sort_unit;
  if (kind != ProbeKind::kQuickSort) work += steps * cfg_.costs.probe_search_unit;
  return cfg_.ecall_fixed_cost_micros + work;
}

ProbeSample Enclave::run_probe(ProbeKind kind, std::size_t n, double timestamp) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "probe needs at least two elements");
  auto alloc = memory_.allocate(n * sizeof(std::uint64_t), "probe");
  double multiplier = memory_.paging_multiplier();

  std::uint64_t seq;
  {
    std::lock_guard lock(mu_);
    seq = probe_seq_++;
  }
  // Random data and random lookups so the access pattern defeats caching.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull ^ seq);
  std::vector<std::uint64_t> data(n);
  for (auto& v : data) v = rng();
  // For kBinarySearch the sort is setup and is not charged.
  std::sort(data.begin(), data.end());
  std::size_t found = 0;
  if (kind != ProbeKind::kQuickSort) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t target = (i % 2 == 0) ? data[rng() % n] : rng();
      found += std::binary_search(data.begin(), data.end(), target) ? 1 : 0;
    }
  }
  memory_.release(alloc);
  note_entry();

  ProbeSample s;
  s.timestamp = timestamp;
  s.kind = kind;
  s.data_size = n;
  s.duration = probe_base_micros(kind, n) * multiplier;
  probe_hits_.fetch_add(found);
  return s;
}

ContextManager::ContextManager(SecureMemory& memory, std::uint64_t context_bytes, double idle_timeout_micros)
    : memory_(memory), bytes_(context_bytes), idle_(idle_timeout_micros) {}

ContextManager::~ContextManager() { release_all(); }

void ContextManager::touch(std::uint64_t session, double now) {
  auto it = contexts_.find(session);
  if (it == contexts_.end()) {
    contexts_.emplace(session, Context{memory_.allocate(bytes_, "session-context"), now});
    return;
  }
  it->second.last_use = std::max(it->second.last_use, now);
}

void ContextManager::expire(double now) {
  for (auto it = contexts_.begin(); it != contexts_.end();) {
    if (now - it->second.last_use > idle_) {
      memory_.release(it->second.alloc);
      it = contexts_.erase(it);
    } else {
      ++it;
    }
  }
}

void ContextManager::release_all() {
  for (auto& [id, c] : contexts_) memory_.release(c.alloc);
  contexts_.clear();
}

}  // namespace hedb
