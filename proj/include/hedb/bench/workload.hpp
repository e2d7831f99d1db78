#pragma once

// Seeded datasets and operation streams for the benchmark harness.
//
// tpcc_like: nine tables (warehouse, district, customer, history, orders,
// new_orders, order_line, stock, item) with 9/11/21/8/9/3/10/17/5 columns,
// every column sensitive. Reads are stock-level style lookups: an equality
// probe on order_line or a range count on stock, mixed by eq_fraction.
// Writes are new-order style transactions.
//
// synthetic: one key/value table with point reads, range counts and
// increments.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hedb/bench/deployment.hpp"

namespace hedb {

enum class WorkloadKind : std::uint8_t { kTpccLike, kSynthetic };

const char* workload_kind_name(WorkloadKind k);
WorkloadKind workload_kind_from_name(const std::string& name);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kTpccLike;
  double scale = 0.01;            // 1.0 = 3x10^5 order_line rows
  double read_write_ratio = 1.0;  // fraction of operations that are reads
  double eq_fraction = 0.5;       // equality share among reads
  std::size_t concurrency = 1;    // worker sessions
  double duration_micros = 2e6;   // virtual; used when op_count is 0
  std::size_t op_count = 0;
  std::uint64_t seed = 1;
  std::size_t cores = 4;          // server-side parallelism

  void validate() const;
};

struct TableData {
  std::string name;
  std::vector<ColumnSpec> columns;
  std::vector<std::vector<Value>> rows;
};

struct Dataset {
  std::vector<TableData> tables;

  const TableData& table(const std::string& name) const;
  std::size_t column_count() const;
  // Bytes of the plaintext encoding of every value.
  std::uint64_t plaintext_bytes() const;
  // Canonical text dump, one CSV block per table.
  std::string dump() const;
};

Dataset generate_dataset(const WorkloadSpec& spec);
void load_dataset(Deployment& d, const Dataset& data);

struct Operation {
  bool write = false;
  std::vector<std::string> statements;
};

// Mutable workload state shared by all sessions (next order id, ...).
struct WorkloadState {
  std::int64_t next_order = 0;
  std::int64_t order_lines = 0;
  std::int64_t items = 0;
  std::int64_t districts = 0;
  std::int64_t keys = 0;
};

WorkloadState initial_state(const Dataset& data, const WorkloadSpec& spec);

class OperationStream {
 public:
  OperationStream(const WorkloadSpec& spec, std::uint64_t session);
  Operation next(WorkloadState& state);

 private:
  std::int64_t uniform(std::int64_t lo, std::int64_t hi);  // inclusive
  bool chance(double p);

  WorkloadSpec spec_;
  std::mt19937_64 rng_;
};

}  // namespace hedb
