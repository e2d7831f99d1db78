#pragma once

// JSON run configuration. Keys mirror the struct field names:
//   {"workload": {"kind": "tpcc_like", "scale": 0.01, ...},
//    "enclave": {"epc_budget_bytes": 8388608, ..., "costs": {"rnd_decrypt": 5}},
//    "software": {"ore_compare": 60, ...}}
// Unknown keys are rejected so typos do not silently fall back to defaults.

#include <string>

#include "hedb/bench/workload.hpp"

namespace hedb {

struct BenchConfig {
  WorkloadSpec workload;
  EnclaveConfig enclave = EnclaveConfig::desk();
  SoftwareCosts software;
};

BenchConfig parse_bench_config(const std::string& json_text);
BenchConfig load_bench_config(const std::string& path);
std::string bench_config_to_json(const BenchConfig& cfg);

// Environment variable naming a config file.
inline constexpr const char* kConfigEnv = "HEDB_CONFIG";

}  // namespace hedb
