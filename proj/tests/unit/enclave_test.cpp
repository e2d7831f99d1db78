#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hedb/crypto/crypto.hpp"
#include "hedb/enclave/attestation.hpp"
#include "hedb/enclave/enclave.hpp"
#include "hedb/enclave/task_pool.hpp"

namespace hedb {
namespace {

class EnclaveTest : public ::testing::Test {
 protected:
  MasterKey master = MasterKey::generate();
  std::mt19937_64 rng{4242};

  Operand rnd_int(std::int64_t v, const std::string& label = "c_qty") {
    return {rnd_encrypt(encode_i64(v), derive_column_key(master, label, Scheme::kRnd)).serialize(), label};
  }
  Operand rnd_text(const std::string& s, const std::string& label = "c_name") {
    return {rnd_encrypt(to_bytes(s), derive_column_key(master, label, Scheme::kRnd)).serialize(), label};
  }
  static BridgeTask compare(CompareOp op, Operand a, Operand b, ValueType t = ValueType::kInt) {
    BridgeTask task;
    task.op = BridgeOp::kCompare;
    task.cmp = op;
    task.type = t;
    task.operands = {std::move(a), std::move(b)};
    return task;
  }
  BridgeTask arith(ArithOp op, std::int64_t a, std::int64_t b, Scheme result) {
    BridgeTask task;
    task.op = BridgeOp::kArith;
    task.arith = op;
    task.result_scheme = result;
    task.result_label = "c_out";
    task.operands = {rnd_int(a), rnd_int(b)};
    return task;
  }
  std::int64_t open_int(const BridgeResult& r) {
    switch (r.scheme) {
      case Scheme::kAhe: return decode_signed(sahe_decrypt(AheCipher::parse(r.cipher), derive_column_key(master, "c_out", Scheme::kAhe)));
      case Scheme::kMhe: return decode_signed(smhe_decrypt(MheCipher::parse(r.cipher), derive_column_key(master, "c_out", Scheme::kMhe)));
      case Scheme::kDet: return decode_i64(det_decrypt(DetCipher::parse(r.cipher), derive_column_key(master, "c_out", Scheme::kDet)));
      case Scheme::kRnd: return decode_i64(rnd_decrypt(RndCipher::parse(r.cipher), derive_column_key(master, "c_out", Scheme::kRnd)));
      default: ADD_FAILURE() << "unexpected scheme"; return 0;
    }
  }
  std::unique_ptr<Enclave> make(EnclaveConfig cfg = EnclaveConfig::desk()) {
    auto e = std::make_unique<Enclave>(cfg);
    e->provision(master);
    return e;
  }
};

TEST_F(EnclaveTest, ConfigValidation) {
  EnclaveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.page_fault_penalty_factor = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = EnclaveConfig{};
  c.pool_batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(EnclaveConfig::epc_128mb().epc_budget_bytes, 128ull << 20);
  EXPECT_EQ(EnclaveConfig::desk().epc_budget_bytes, 8ull << 20);
}

TEST_F(EnclaveTest, SecureMemoryAccountingSurvivesRandomOperations) {
  SecureMemory mem(1 << 20, 1.0, 4.0);
  std::vector<SecureMemory::AllocId> live;
  std::uint64_t expected = 0;
  std::map<SecureMemory::AllocId, std::uint64_t> sizes;
  for (int i = 0; i < 2000; ++i) {
    if (live.empty() || rng() % 3 != 0) {
      std::uint64_t n = rng() % 100000;
      auto id = mem.allocate(n, "t");
      live.push_back(id);
      sizes[id] = n;
      expected += n;
    } else {
      std::size_t k = rng() % live.size();
      mem.release(live[k]);
      expected -= sizes[live[k]];
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
    }
    ASSERT_EQ(mem.audit(), "");
    ASSERT_EQ(mem.resident_bytes(), expected);
  }
  EXPECT_THROW(mem.release(999999), Error);
}

TEST_F(EnclaveTest, PagingMultiplierShape) {
  SecureMemory mem(8 << 20, 1.0, 4.0);
  EXPECT_DOUBLE_EQ(mem.multiplier_at(4 << 20), 1.0);
  EXPECT_DOUBLE_EQ(mem.multiplier_at(8 << 20), 1.0);
  EXPECT_DOUBLE_EQ(mem.multiplier_at(16 << 20), 2.0);
  EXPECT_DOUBLE_EQ(mem.multiplier_at(std::uint64_t{1} << 40), 4.0);
  double prev = 0;
  for (std::uint64_t r = 0; r < (64ull << 20); r += 1 << 19) {
    double m = mem.multiplier_at(r);
    EXPECT_GE(m, prev);
    prev = m;
  }
}

TEST_F(EnclaveTest, CompareGreaterOnEncryptedOperands) {
  auto e = make();
  BridgeResult r = e->execute(compare(CompareOp::kGt, rnd_int(5), rnd_int(7)));
  EXPECT_FALSE(r.boolean);
  EXPECT_EQ(r.scheme, Scheme::kPlain);
  EXPECT_TRUE(r.cipher.empty());
}

TEST_F(EnclaveTest, CompareOpsMatchPlaintextOracle) {
  auto e = make();
  const CompareOp ops[] = {CompareOp::kLt, CompareOp::kLe, CompareOp::kGt, CompareOp::kGe, CompareOp::kEq, CompareOp::kNe};
  for (int i = 0; i < 300; ++i) {
    std::int64_t a = static_cast<std::int64_t>(rng() % 21) - 10, b = static_cast<std::int64_t>(rng() % 21) - 10;
    CompareOp op = ops[rng() % 6];
    bool expect = op == CompareOp::kLt ? a < b : op == CompareOp::kLe ? a <= b : op == CompareOp::kGt ? a > b
                : op == CompareOp::kGe ? a >= b : op == CompareOp::kEq ? a == b : a != b;
    ASSERT_EQ(e->execute(compare(op, rnd_int(a), rnd_int(b))).boolean, expect) << a << " " << b;
  }
  EXPECT_TRUE(e->execute(compare(CompareOp::kLt, rnd_text("apple"), rnd_text("banana"), ValueType::kText)).boolean);
  EXPECT_FALSE(e->execute(compare(CompareOp::kLt, rnd_text("b"), rnd_text("ab"), ValueType::kText)).boolean);
}

TEST_F(EnclaveTest, AddReencryptsUnderRequestedScheme) {
  auto e = make();
  BridgeResult r = e->execute(arith(ArithOp::kAdd, 2, 3, Scheme::kAhe));
  EXPECT_EQ(r.scheme, Scheme::kAhe);
  EXPECT_EQ(open_int(r), 5);
}

TEST_F(EnclaveTest, ArithmeticMatchesOracleForEveryResultScheme) {
  auto e = make();
  for (Scheme s : {Scheme::kAhe, Scheme::kMhe, Scheme::kDet, Scheme::kRnd}) {
    for (int i = 0; i < 40; ++i) {
      std::int64_t a = static_cast<std::int64_t>(rng() % 2001) - 1000, b = static_cast<std::int64_t>(rng() % 2001) - 1000;
      EXPECT_EQ(open_int(e->execute(arith(ArithOp::kAdd, a, b, s))), a + b);
      EXPECT_EQ(open_int(e->execute(arith(ArithOp::kSub, a, b, s))), a - b);
      EXPECT_EQ(open_int(e->execute(arith(ArithOp::kMul, a, b, s))), a * b);
      if (b != 0) EXPECT_EQ(open_int(e->execute(arith(ArithOp::kDiv, a * b, b, s))), a);
    }
  }
  BridgeResult ore = e->execute(arith(ArithOp::kAdd, -4, 1, Scheme::kOre));
  OreCipher got = OreCipher::parse(ore.cipher);
  ColumnKey ok = derive_column_key(master, "c_out", Scheme::kOre);
  EXPECT_TRUE(ore_eq(got, ore_encrypt(ore_offset_signed(-3, 64), ok, {64, 8})));
  EXPECT_TRUE(ore_lt(got, ore_encrypt(ore_offset_signed(0, 64), ok, {64, 8})));
}

TEST_F(EnclaveTest, ArithmeticErrors) {
  auto e = make();
  try {
    e->execute(arith(ArithOp::kDiv, 3, 0, Scheme::kAhe));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kNotInvertible);
  }
  EXPECT_THROW(e->execute(arith(ArithOp::kMul, INT64_MAX, 2, Scheme::kAhe)), Error);
  EXPECT_THROW(e->execute(arith(ArithOp::kAdd, 1, 2, Scheme::kPlain)), Error);
}

TEST_F(EnclaveTest, ArithCompareAndAggregates) {
  auto e = make();
  BridgeTask t;
  t.op = BridgeOp::kArithCompare;
  t.arith = ArithOp::kMul;
  t.cmp = CompareOp::kGt;
  t.operands = {rnd_int(6), rnd_int(7), rnd_int(41)};
  EXPECT_TRUE(e->execute(t).boolean);
  t.operands[2] = rnd_int(42);
  EXPECT_FALSE(e->execute(t).boolean);

  BridgeTask agg;
  agg.op = BridgeOp::kAggregate;
  agg.result_scheme = Scheme::kDet;
  agg.result_label = "c_out";
  std::int64_t sum = 0, mn = INT64_MAX, mx = INT64_MIN;
  for (int i = 0; i < 50; ++i) {
    std::int64_t v = static_cast<std::int64_t>(rng() % 1000) - 500;
    sum += v;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    agg.operands.push_back(rnd_int(v));
  }
  agg.agg = AggOp::kSum;
  EXPECT_EQ(open_int(e->execute(agg)), sum);
  agg.agg = AggOp::kMin;
  EXPECT_EQ(open_int(e->execute(agg)), mn);
  agg.agg = AggOp::kMax;
  EXPECT_EQ(open_int(e->execute(agg)), mx);
}

TEST_F(EnclaveTest, MissingKeysAndTamperedOperandsFail) {
  Enclave bare;
  try {
    bare.execute(compare(CompareOp::kLt, rnd_int(1), rnd_int(2)));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kMissingKeys);
  }
  auto e = make();
  Operand bad = rnd_int(1);
  bad.cipher[bad.cipher.size() / 2] ^= 0x01;
  try {
    e->execute(compare(CompareOp::kLt, bad, rnd_int(2)));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kAuthFailure);
  }
  // A ciphertext presented under the wrong column label does not authenticate.
  Operand moved = rnd_int(1, "c_qty");
  moved.label = "c_other";
  EXPECT_THROW(e->execute(compare(CompareOp::kLt, moved, rnd_int(2))), Error);
}

TEST_F(EnclaveTest, CostModelOfASingleCall) {
  EnclaveConfig cfg;
  cfg.cache_enabled = false;
  auto e = make(cfg);
  const CostTable& c = cfg.costs;
  BridgeResult r = e->execute(compare(CompareOp::kLt, rnd_int(1), rnd_int(2)));
  EXPECT_DOUBLE_EQ(r.micros, cfg.ecall_fixed_cost_micros + 2 * c.rnd_decrypt + c.compute + c.memory_copy);
  BridgeResult a = e->execute(arith(ArithOp::kAdd, 1, 2, Scheme::kAhe), false);
  EXPECT_DOUBLE_EQ(a.micros, 2 * c.rnd_decrypt + c.compute + c.encrypt_ahe + c.memory_copy);
}

TEST_F(EnclaveTest, DoubleBudgetWorkingSetAtLeastOneAndAHalfTimesSlower) {
  auto e = make();
  BridgeTask t = compare(CompareOp::kGt, rnd_int(9), rnd_int(3));
  e->execute(t);  // warm the cache so every measurement below sees hits
  double under = e->execute(t).micros;
  std::uint64_t budget = e->config().epc_budget_bytes;
  auto fill = e->memory().allocate(2 * budget - e->memory().resident_bytes(), "working-set");
  EXPECT_EQ(e->memory().resident_bytes(), 2 * budget);
  double over = e->execute(t).micros;
  EXPECT_GE(over, 1.5 * under);
  e->memory().release(fill);
  EXPECT_DOUBLE_EQ(e->execute(t).micros, under);
}

TEST_F(EnclaveTest, DurationNonDecreasingInResidentBytes) {
  EnclaveConfig cfg;
  cfg.cache_enabled = false;
  auto e = make(cfg);
  BridgeTask t = compare(CompareOp::kGt, rnd_int(9), rnd_int(3));
  double prev = 0;
  std::vector<SecureMemory::AllocId> held;
  for (int i = 0; i < 40; ++i) {
    double d = e->execute(t).micros;
    EXPECT_GE(d, prev);
    prev = d;
    held.push_back(e->memory().allocate(1 << 20, "grow"));
  }
  for (auto id : held) e->memory().release(id);
  EXPECT_EQ(e->memory().audit(), "");
}

TEST_F(EnclaveTest, CacheSecondLookupHits) {
  auto e = make();
  Operand a = rnd_int(77);
  bool hit = true;
  EXPECT_EQ(decode_i64(e->cache_lookup_or_decrypt(a, &hit)), 77);
  EXPECT_FALSE(hit);
  EXPECT_EQ(decode_i64(e->cache_lookup_or_decrypt(a, &hit)), 77);
  EXPECT_TRUE(hit);
  EXPECT_EQ(e->cache_stats().hits, 1u);
}

TEST_F(EnclaveTest, LruEvictsLeastRecentlyUsed) {
  LruCache<std::string, int> cache(2);
  std::vector<std::string> pattern = {"A", "B", "C", "A"};
  int misses_a = 0;
  for (const auto& k : pattern) {
    if (!cache.get(k)) {
      if (k == "A") ++misses_a;
      cache.put(k, 1);
    }
  }
  EXPECT_EQ(misses_a, 2);
  EXPECT_EQ(cache.evictions(), 2u);

  LruCache<int, int> c2(2);
  c2.put(1, 1);
  c2.put(2, 2);
  c2.get(1);  // refresh 1, so 2 is the eviction victim
  c2.put(3, 3);
  EXPECT_TRUE(c2.contains(1));
  EXPECT_FALSE(c2.contains(2));
}

TEST_F(EnclaveTest, CacheIsCoherentUnderEviction) {
  EnclaveConfig cfg;
  cfg.cache_capacity_entries = 8;
  auto e = make(cfg);
  std::vector<std::pair<Operand, std::int64_t>> pool;
  for (int i = 0; i < 30; ++i) {
    std::int64_t v = static_cast<std::int64_t>(rng() % 100000);
    pool.emplace_back(rnd_int(v), v);
  }
  for (int i = 0; i < 2000; ++i) {
    const auto& [op, v] = pool[rng() % pool.size()];
    ASSERT_EQ(decode_i64(e->cache_lookup_or_decrypt(op)), v);
  }
  auto s = e->cache_stats();
  EXPECT_LE(s.size, 8u);
  EXPECT_GT(s.hits, 0u);
  EXPECT_GT(s.evictions, 0u);
}

TEST_F(EnclaveTest, CacheHitsLowerCost) {
  auto e = make();
  BridgeTask t = compare(CompareOp::kLt, rnd_int(1), rnd_int(2));
  double cold = e->execute(t).micros;
  double warm = e->execute(t).micros;
  EXPECT_LT(warm, cold);
  EXPECT_DOUBLE_EQ(cold - warm, 2 * (e->config().costs.rnd_decrypt - e->config().costs.cache_hit));
  e->set_cache_enabled(false);
  EXPECT_DOUBLE_EQ(e->execute(t).micros, cold);
  EXPECT_EQ(e->memory().audit(), "");
}

TEST_F(EnclaveTest, ProbeTracksPagingState) {
  auto e = make();
  ProbeSample base = e->run_probe();
  EXPECT_EQ(base.kind, ProbeKind::kMixed);
  EXPECT_EQ(base.data_size, 8192u);
  EXPECT_DOUBLE_EQ(base.duration, e->probe_base_micros(ProbeKind::kMixed, 8192));
  EXPECT_LE(e->run_probe().duration, 1.1 * base.duration);

  std::uint64_t budget = e->config().epc_budget_bytes;
  auto fill = e->memory().allocate(2 * budget - e->memory().resident_bytes(), "working-set");
  EXPECT_GE(e->run_probe().duration, 1.5 * base.duration);
  e->memory().release(fill);
  EXPECT_EQ(e->memory().audit(), "");

  for (ProbeKind k : {ProbeKind::kBinarySearch, ProbeKind::kQuickSort})
    EXPECT_DOUBLE_EQ(e->run_probe(k, 1024).duration, e->probe_base_micros(k, 1024));
  EXPECT_LT(e->probe_base_micros(ProbeKind::kBinarySearch, 4096), e->probe_base_micros(ProbeKind::kMixed, 4096));
}

TEST_F(EnclaveTest, ContextsExpireAfterIdleTimeout) {
  auto e = make();
  std::uint64_t before = e->memory().resident_bytes();
  ContextManager ctx(e->memory(), 1000, 100.0);
  ctx.touch(1, 0);
  ctx.touch(2, 50);
  EXPECT_EQ(e->memory().resident_bytes(), before + 2000);
  ctx.touch(1, 120);
  ctx.expire(160);  // session 2 idle for 110
  EXPECT_EQ(ctx.active(), 1u);
  EXPECT_EQ(e->memory().resident_bytes(), before + 1000);
  ctx.release_all();
  EXPECT_EQ(e->memory().resident_bytes(), before);
}

TEST_F(EnclaveTest, PoolChargesOneEntryPerBatch) {
  auto e = make();
  TaskPool pool(*e, 25, 0.0, 100, 2);
  std::vector<std::future<BridgeResult>> futures;
  std::vector<bool> expect;
  for (int i = 0; i < 100; ++i) {
    std::int64_t a = static_cast<std::int64_t>(rng() % 50), b = static_cast<std::int64_t>(rng() % 50);
    BridgeTask t = compare(CompareOp::kLt, rnd_int(a), rnd_int(b));
    t.id = static_cast<std::uint64_t>(i);
    expect.push_back(a < b);
    futures.push_back(pool.submit(std::move(t)));
  }
  pool.drain();
  for (int i = 0; i < 100; ++i) {
    BridgeResult r = futures[static_cast<std::size_t>(i)].get();
    EXPECT_EQ(r.task_id, static_cast<std::uint64_t>(i));
    EXPECT_EQ(r.boolean, expect[static_cast<std::size_t>(i)]);
    EXPECT_FALSE(r.direct);
  }
  auto s = pool.stats();
  EXPECT_EQ(s.batches, 4u);
  EXPECT_EQ(e->entries_charged(), 4u);
  EXPECT_EQ(s.completed, 100u);
  EXPECT_EQ(s.direct_calls, 0u);
  EXPECT_DOUBLE_EQ(s.entry_micros, 4 * e->config().ecall_fixed_cost_micros);
}

TEST_F(EnclaveTest, SaturatedPoolDegeneratesToDirectCalls) {
  auto e = make();
  TaskPool pool(*e, 25, 0.0, 50, 1);
  pool.pause_workers();
  std::vector<std::future<BridgeResult>> futures;
  for (int i = 0; i < 60; ++i) futures.push_back(pool.submit(compare(CompareOp::kEq, rnd_int(i), rnd_int(i % 7))));
  auto mid = pool.stats();
  EXPECT_EQ(mid.direct_calls, 10u);
  pool.resume_workers();
  pool.drain();
  int direct = 0;
  for (int i = 0; i < 60; ++i) {
    BridgeResult r = futures[static_cast<std::size_t>(i)].get();
    EXPECT_EQ(r.boolean, i == i % 7);
    direct += r.direct ? 1 : 0;
  }
  EXPECT_EQ(direct, 10);
  auto s = pool.stats();
  EXPECT_EQ(s.submitted, 60u);
  EXPECT_EQ(s.completed, 60u);
  EXPECT_EQ(e->entries_charged(), s.batches + s.direct_calls);
}

TEST_F(EnclaveTest, WindowFlushesPartialBatch) {
  auto e = make();
  TaskPool pool(*e, 25, 2000.0, 100, 1);
  auto f = pool.submit(compare(CompareOp::kLt, rnd_int(1), rnd_int(2)));
  ASSERT_EQ(f.wait_for(std::chrono::seconds(5)), std::future_status::ready);
  EXPECT_TRUE(f.get().boolean);
  EXPECT_EQ(pool.stats().batches, 1u);
}

TEST_F(EnclaveTest, StopCompletesPendingTasks) {
  auto e = make();
  std::vector<std::future<BridgeResult>> futures;
  {
    TaskPool pool(*e, 25, 0.0, 100, 2);
    for (int i = 0; i < 37; ++i) futures.push_back(pool.submit(compare(CompareOp::kGe, rnd_int(i), rnd_int(18))));
  }
  for (int i = 0; i < 37; ++i) EXPECT_EQ(futures[static_cast<std::size_t>(i)].get().boolean, i >= 18);
}

TEST_F(EnclaveTest, PoolPropagatesTaskErrors) {
  auto e = make();
  TaskPool pool(*e, 2, 0.0, 4, 1);
  Operand bad = rnd_int(1);
  bad.cipher.back() ^= 0x80;
  auto f1 = pool.submit(compare(CompareOp::kLt, bad, rnd_int(2)));
  auto f2 = pool.submit(compare(CompareOp::kLt, rnd_int(1), rnd_int(2)));
  pool.drain();
  EXPECT_THROW(f1.get(), Error);
  EXPECT_TRUE(f2.get().boolean);
}

class AttestationTest : public EnclaveTest {
 protected:
  AttestationEnv env;
  std::uint32_t next_epid = 1000;
};

TEST_F(AttestationTest, HonestRunAgreesOnSessionKeyAndProvisions) {
  Enclave e;
  AttestationOutcome o = attest_and_provision(master, e, env, next_epid++);
  ASSERT_TRUE(o.ok) << o.failure;
  ASSERT_TRUE(o.client_keys && o.enclave_keys);
  EXPECT_EQ(o.client_keys->sk, o.enclave_keys->sk);
  EXPECT_EQ(o.client_keys->mk, o.enclave_keys->mk);
  EXPECT_EQ(o.frames, 7u);
  EXPECT_TRUE(e.has_keys());
  // The provisioned key is the client's: a client-encrypted operand decrypts.
  EXPECT_EQ(decode_i64(e.cache_lookup_or_decrypt(rnd_int(31))), 31);
}

TEST_F(AttestationTest, CorruptedMsg2MacFailsClosed) {
  Enclave e;
  // Frame 4 is msg2; its last byte belongs to the CMAC.
  AttestationOutcome o = attest_and_provision(master, e, env, next_epid++, [](std::size_t seq, Bytes& f) {
    if (seq == 4) f.back() ^= 0x01;
  });
  EXPECT_FALSE(o.ok);
  EXPECT_EQ(o.enclave_phase, AttPhase::kFailed);
  EXPECT_FALSE(e.has_keys());
  EXPECT_NE(o.failure.find("CMAC"), std::string::npos);
}

TEST_F(AttestationTest, ReplayedEpidIsRejected) {
  Enclave e;
  ASSERT_TRUE(attest_and_provision(master, e, env, 77).ok);
  AttestationOutcome again = attest_and_provision(master, e, env, 77);
  EXPECT_FALSE(again.ok);
  EXPECT_EQ(again.client_phase, AttPhase::kFailed);
  EXPECT_FALSE(e.has_keys());
}

TEST_F(AttestationTest, AnySingleBitFlipInAnyMessageFails) {
  for (std::size_t target = 0; target < 7; ++target) {
    for (int trial = 0; trial < 6; ++trial) {
      Enclave e;
      std::uint64_t pick = rng();
      AttestationOutcome o = attest_and_provision(master, e, env, next_epid++, [&](std::size_t seq, Bytes& f) {
        if (seq == target) f[pick % f.size()] ^= static_cast<std::uint8_t>(1u << ((pick >> 32) % 8));
      });
      EXPECT_FALSE(o.ok) << "message " << target;
      EXPECT_FALSE(e.has_keys()) << "message " << target;
    }
  }
}

TEST_F(AttestationTest, ForgedQuoteIsRejected) {
  Quote q = env.authority.make_quote(enclave_measurement("x"), 1, {});
  EXPECT_TRUE(env.authority.verify(q));
  q.epid = 2;
  EXPECT_FALSE(env.authority.verify(q));
}

TEST_F(AttestationTest, FrameCodec) {
  Frame f{MsgType::kMsg1, Bytes{1, 2, 3}};
  Bytes b = encode_frame(f);
  EXPECT_EQ(b.size(), 8u);
  EXPECT_EQ(decode_frame(b).payload, f.payload);
  b[0] = 42;
  EXPECT_THROW(decode_frame(b), Error);
  EXPECT_THROW(decode_frame(ByteView(b.data(), 3)), Error);
}

TEST_F(EnclaveTest, SealAndUnsealRestoresKeys) {
  auto e = make();
  auto path = std::filesystem::temp_directory_path() / ("hedb_seal_" + std::to_string(rng()));
  e->seal(path.string());
  Enclave fresh;
  fresh.unseal(path.string());
  EXPECT_EQ(decode_i64(fresh.cache_lookup_or_decrypt(rnd_int(12))), 12);

  // A different enclave identity cannot unseal.
  EnclaveConfig other;
  other.sealing_identity = "another-enclave";
  Enclave stranger(other);
  EXPECT_THROW(stranger.unseal(path.string()), Error);

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(20);
  f.put('\x55');
  f.close();
  Enclave tampered;
  EXPECT_THROW(tampered.unseal(path.string()), Error);
  EXPECT_FALSE(tampered.has_keys());
  std::filesystem::remove(path);
  EXPECT_THROW(Enclave().seal(path.string()), Error);
}

}  // namespace
}  // namespace hedb
