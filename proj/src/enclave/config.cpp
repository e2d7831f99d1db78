#include "hedb/enclave/config.hpp"

#include "hedb/common/error.hpp"

namespace hedb {

const char* probe_kind_name(ProbeKind k) {
  switch (k) {
    case ProbeKind::kBinarySearch: return "binary_search";
    case ProbeKind::kQuickSort: return "quick_sort";
    case ProbeKind::kMixed: return "mixed";
  }
  return "?";
}

ProbeKind probe_kind_from_name(const std::string& name) {
  if (name == "binary_search") return ProbeKind::kBinarySearch;
  if (name == "quick_sort") return ProbeKind::kQuickSort;
  if (name == "mixed") return ProbeKind::kMixed;
  throw Error(ErrorCode::kInvalidArgument, "unknown probe kind: " + name);
}

double CostTable::encrypt_cost(Scheme s) const {
  switch (s) {
    case Scheme::kPlain: return 0.0;
    case Scheme::kAhe: return encrypt_ahe;
    case Scheme::kMhe: return encrypt_mhe;
    case Scheme::kOre: return encrypt_ore;
    case Scheme::kDet: return encrypt_det;
    case Scheme::kRnd: return encrypt_rnd;
  }
  return 0.0;
}

void EnclaveConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(epc_budget_bytes > 0, "epc_budget_bytes must be positive");
  require(ecall_fixed_cost_micros > 0, "ecall_fixed_cost_micros must be positive");
  require(page_fault_penalty_factor >= 1.0, "page_fault_penalty_factor must be >= 1");
  require(paging_slope >= 0.0, "paging_slope must be non-negative");
  require(cache_capacity_entries > 0, "cache_capacity_entries must be positive");
  require(pool_batch_size > 0, "pool_batch_size must be positive");
  require(pool_window_micros >= 0.0, "pool_window_micros must be non-negative");
  require(worker_count > 0, "worker_count must be positive");
  require(effective_pool_capacity() >= pool_batch_size, "pool_capacity must hold at least one batch");
  require(probe_data_size >= 2, "probe_data_size must be at least 2");
  require(probe_interval_micros > 0, "probe_interval_micros must be positive");
  require(probe_window > 0, "probe_window must be positive");
  require(context_idle_timeout_micros > 0, "context_idle_timeout_micros must be positive");
}

EnclaveConfig EnclaveConfig::desk() { return EnclaveConfig{}; }

EnclaveConfig EnclaveConfig::epc_128mb() {
  EnclaveConfig c;
  c.epc_budget_bytes = 128ull << 20;
  return c;
}

}  // namespace hedb
