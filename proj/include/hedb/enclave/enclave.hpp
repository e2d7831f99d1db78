#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hedb/enclave/bridge.hpp"
#include "hedb/enclave/config.hpp"
#include "hedb/enclave/lru_cache.hpp"
#include "hedb/enclave/memory.hpp"

namespace hedb {

struct ProbeSample {
  double timestamp = 0.0;  // virtual micros
  double duration = 0.0;   // virtual micros
  ProbeKind kind = ProbeKind::kMixed;
  std::size_t data_size = 0;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::size_t size = 0;

  double hit_rate() const { return hits + misses ? static_cast<double>(hits) / static_cast<double>(hits + misses) : 0.0; }
};

// Simulated trusted enclave. Holds the master key once provisioned, decrypts
// RND operands (through the cipher->plain cache), computes in plaintext and
// re-encrypts results. Every call reports its cost in virtual microseconds.
class Enclave {
 public:
  explicit Enclave(EnclaveConfig cfg = EnclaveConfig::desk());
  ~Enclave();
  Enclave(const Enclave&) = delete;
  Enclave& operator=(const Enclave&) = delete;

  const EnclaveConfig& config() const { return cfg_; }
  SecureMemory& memory() { return memory_; }
  const SecureMemory& memory() const { return memory_; }

  bool has_keys() const;
  // Installed by the attestation endpoint or by unseal().
  void provision(const MasterKey& master);
  void clear_keys();

  // Sealed file: [version u8][nonce 12][u32 len][wrapped master key][tag 16].
  void seal(const std::string& path) const;
  void unseal(const std::string& path);

  BridgeResult execute(const BridgeTask& task, bool charge_entry = true);
  // One enclave entry for the whole batch. `total_micros` receives the sum.
  std::vector<BridgeResult> execute_batch(const std::vector<BridgeTask>& tasks, double* total_micros = nullptr);

  Bytes cache_lookup_or_decrypt(const Operand& operand, bool* hit = nullptr);
  void set_cache_enabled(bool on);
  bool cache_enabled() const;
  CacheStats cache_stats() const;
  void reset_cache();

  // Runs the probe for real inside secure memory; the reported duration is
  // the virtual cost under the current paging state.
  ProbeSample run_probe(ProbeKind kind, std::size_t data_size, double timestamp = 0.0);
  ProbeSample run_probe(double timestamp = 0.0) { return run_probe(cfg_.probe_kind, cfg_.probe_data_size, timestamp); }
  // Duration of the probe with no paging penalty.
  double probe_base_micros(ProbeKind kind, std::size_t data_size) const;

  std::uint64_t entries_charged() const { return entries_.load(); }
  void note_entry() { entries_.fetch_add(1); }
  std::uint64_t tasks_executed() const { return executed_.load(); }

 private:
  const ColumnKey& key_for(const std::string& label, Scheme scheme);
  Bytes decrypt_operand(const Operand& operand, bool& hit);
  BridgeResult compute(const BridgeTask& task, const std::vector<Bytes>& plain);
  Bytes encrypt_result(const BridgeTask& task, const Bytes& plain);

  EnclaveConfig cfg_;
  SecureMemory memory_;
  SecureMemory::AllocId cache_region_ = 0;

  mutable std::mutex mu_;  // trusted state: keys and cache
  std::optional<MasterKey> master_;
  std::map<std::pair<std::string, Scheme>, ColumnKey> keys_;
  bool cache_on_;
  LruCache<std::string, Bytes> cache_;
  std::uint64_t probe_seq_ = 0;

  std::atomic<std::uint64_t> entries_{0};
  std::atomic<std::uint64_t> executed_{0};
  std::atomic<std::uint64_t> probe_hits_{0};
};

// Per-session enclave contexts: allocated on first use, released after the
// idle timeout on the virtual clock.
class ContextManager {
 public:
  ContextManager(SecureMemory& memory, std::uint64_t context_bytes, double idle_timeout_micros);
  ~ContextManager();

  void touch(std::uint64_t session, double now);
  void expire(double now);
  void release_all();
  std::size_t active() const { return contexts_.size(); }

 private:
  struct Context {
    SecureMemory::AllocId alloc;
    double last_use;
  };
  SecureMemory& memory_;
  std::uint64_t bytes_;
  double idle_;
  std::map<std::uint64_t, Context> contexts_;
};

}  // namespace hedb
