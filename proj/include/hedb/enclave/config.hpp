#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "hedb/crypto/keys.hpp"

namespace hedb {

enum class ProbeKind : std::uint8_t { kBinarySearch, kQuickSort, kMixed };

const char* probe_kind_name(ProbeKind k);
ProbeKind probe_kind_from_name(const std::string& name);

// Virtual-clock costs in microseconds. Only their relative sizes matter.
struct CostTable {
  double rnd_decrypt = 5.0;
  double cache_hit = 0.5;
  double compute = 0.5;
  double memory_copy = 3.0;  // result leaving the enclave

  double encrypt_ahe = 8.0;
  double encrypt_mhe = 10.0;
  double encrypt_ore = 200.0;
  double encrypt_det = 5.0;
  double encrypt_rnd = 5.0;

  // Probe work units: per n*log2(n) element step.
  double probe_sort_unit = 0.01;
  double probe_search_unit = 0.005;

  double encrypt_cost(Scheme s) const;
};

struct EnclaveConfig {
  std::uint64_t epc_budget_bytes = 8ull << 20;
  double ecall_fixed_cost_micros = 40.0;
  // Upper bound on the paging multiplier.
  double page_fault_penalty_factor = 4.0;
  // multiplier = 1 + slope * overflow / budget, capped by the factor above.
  double paging_slope = 1.0;

  bool cache_enabled = true;
  std::size_t cache_capacity_entries = 4096;
  std::size_t cache_entry_bytes = 64;  // charged to secure memory per slot

  std::size_t pool_batch_size = 25;
  double pool_window_micros = 2000.0;  // wall clock; 0 disables the window flush
  std::size_t pool_capacity = 0;       // intake bound; 0 means 4 * batch
  std::size_t worker_count = 2;

  ProbeKind probe_kind = ProbeKind::kMixed;
  std::size_t probe_data_size = 8192;
  double probe_interval_micros = 200000.0;
  std::size_t probe_window = 5;

  std::uint64_t session_context_bytes = 512ull << 10;
  double context_idle_timeout_micros = 1e6;

  std::string sealing_identity = "hedb-enclave-v1";

  CostTable costs;

  void validate() const;
  std::size_t effective_pool_capacity() const { return pool_capacity ? pool_capacity : 4 * pool_batch_size; }

  // Desk-scale default (8 MB secure memory) and the full 128 MB EPC.
  static EnclaveConfig desk();
  static EnclaveConfig epc_128mb();
};

}  // namespace hedb
