#pragma once

// Discrete-event harness: `concurrency` sessions issue operations against
// one deployment whose server runs `cores` operations at a time. Every
// timing comes from the virtual clock, so a report is a pure function of
// the seed and the configuration. Reads and writes are replayed in the same
// order against a plaintext deployment and the decrypted results compared.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hedb/bench/workload.hpp"

namespace hedb {

struct PathShare {
  std::uint64_t software = 0;
  std::uint64_t tee = 0;
  double tee_share() const { return software + tee ? static_cast<double>(tee) / static_cast<double>(software + tee) : 0.0; }
};

struct RunOptions {
  DeploymentOptions deployment;
  bool check = true;              // compare against plaintext mode
  std::string decision_log_path;  // adaptive mode only
};

struct RunReport {
  Mode mode = Mode::kPlaintext;
  WorkloadSpec spec;
  std::uint64_t ops = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t statements = 0;
  double virtual_micros = 0.0;
  double wall_seconds = 0.0;  // profiling only
  double qps = 0.0;           // operations per virtual second
  double tps = 0.0;           // write transactions per virtual second
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
  double latency_mean_ms = 0.0;
  std::uint64_t storage_bytes = 0;
  std::uint64_t plaintext_bytes = 0;
  double cache_hit_rate = 0.0;
  std::array<PathShare, kUdfKindCount> shares{};
  PathShare compare_share;  // compare + equal + arith-compare
  std::vector<ProbeSample> probes;
  std::optional<double> replacement_at;               // first switch into Replacement
  std::optional<double> tee_share_after_replacement;  // comparisons within one probe window after it
  std::uint64_t checked = 0;
  std::uint64_t mismatches = 0;
  std::vector<std::string> mismatch_examples;

  double expansion() const {
    return plaintext_bytes ? static_cast<double>(storage_bytes) / static_cast<double>(plaintext_bytes) : 0.0;
  }
};

RunReport run_workload(Mode mode, const WorkloadSpec& spec, const RunOptions& opts = {});
// Same, with a dataset generated by the caller.
RunReport run_workload(Mode mode, const WorkloadSpec& spec, const Dataset& data, const RunOptions& opts);

// Sum of stored field bytes over every table of the deployment.
std::uint64_t storage_bytes(const Engine& engine);

// Versioned CSV ("# hedb-bench-csv v1" then a header row).
void write_report_csv(std::ostream& out, const std::vector<RunReport>& reports);
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_report_csv(std::istream& in);
void render_summary(std::ostream& out, const CsvTable& table);
void write_probe_csv(std::ostream& out, const RunReport& report);

struct StorageRow {
  double scale = 0.0;
  Mode mode = Mode::kPlaintext;
  std::uint64_t plaintext_bytes = 0;
  std::uint64_t stored_bytes = 0;
  double ratio = 0.0;
};
std::vector<StorageRow> report_storage(const std::vector<double>& scales, const std::vector<Mode>& modes,
                                       std::uint64_t seed = 1, WorkloadKind kind = WorkloadKind::kTpccLike);

}  // namespace hedb
