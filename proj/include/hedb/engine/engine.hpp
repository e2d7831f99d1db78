#pragma once

// Untrusted server executor. Queries run through a resumable cursor so many
// sessions can interleave on one virtual timeline; a cursor pauses when a
// software-mode predicate needs a client round trip.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hedb/common/mode.hpp"
#include "hedb/engine/dispatch.hpp"
#include "hedb/engine/metrics.hpp"
#include "hedb/engine/table.hpp"
#include "hedb/schema/rewriter.hpp"

namespace hedb {

// Planner estimates; only their order matters.
struct PlannerCosts {
  double plain = 1.0;
  double det_equal = 2.0;
  double he = 20.0;
  double ore_compare = 50.0;
  double tee_bridge = 200.0;  // plus the chooser's current C_runtime
};

struct EngineOptions {
  SoftwareCosts software;
  PlannerCosts planner;
  double row_visit = 0.1;          // per candidate row read
  double row_write = 5.0;          // per row inserted or rewritten
  double round_trip_fixed = 200.0;  // one client interaction
  double round_trip_value = 200.0;  // client decrypt + re-encrypt per value
  std::size_t rows_per_step = 25;
  std::size_t index_fanout = 64;
};

enum class PlanOp : std::uint8_t { kSeqScan, kIndexScan, kFilter, kGroup, kAggregate, kSort, kLimit, kProject, kInsert, kUpdate };
const char* plan_op_name(PlanOp op);

struct PlanNode {
  PlanOp op = PlanOp::kSeqScan;
  double est_cost = 0.0;
  std::optional<std::size_t> predicate;  // filters and index scans
};

struct Plan {
  std::vector<PlanNode> nodes;  // leaf first
  bool index_scan = false;
  std::size_t index_field = 0;
  std::optional<std::size_t> index_eq, index_low, index_high;  // predicate indices answered by the index
  std::vector<std::size_t> filters;                             // evaluation order
  std::vector<double> filter_costs;

  std::string describe() const;
};

using RoundTripResolver = std::function<RoundTripResponse(const RoundTripRequest&)>;

class Engine;

class QueryExecution {
 public:
  enum class State { kRunning, kNeedClient, kDone };

  virtual ~QueryExecution() = default;
  // Processes up to `max_rows` candidate rows (0: the engine default).
  virtual State step(ExecContext& ctx, std::size_t max_rows = 0) = 0;
  virtual State state() const = 0;
  virtual const RoundTripRequest& request() const = 0;
  virtual void resume(RoundTripResponse response) = 0;
  virtual EncryptedResult take_result() = 0;
  virtual const Plan& plan() const = 0;
};

class Engine {
 public:
  // `enclave` is required by the enclave modes, `adaptive` by adaptive mode.
  Engine(Mode mode, Enclave* enclave, AdaptiveSwitch* adaptive = nullptr, EngineOptions opts = {});
  ~Engine();

  Mode mode() const { return mode_; }
  const EngineOptions& options() const { return opts_; }
  Enclave* enclave() const { return enclave_; }

  EncryptedTable& create_table(const TableLayout& layout, const std::string& dir = "");
  EncryptedTable& open_table(const std::string& dir, const std::string& anon_name);
  EncryptedTable& table(const std::string& anon_name) const;
  bool has_table(const std::string& anon_name) const;
  std::vector<const EncryptedTable*> tables() const;

  std::uint64_t insert(const std::string& anon_name, EncryptedRow row);

  UdfRegistry& udfs() { return registry_; }
  MetricsSink& metrics() { return metrics_; }
  const MetricsSink& metrics() const { return metrics_; }
  // Replaces the per-call path chooser (timings change, results do not).
  void set_chooser(std::shared_ptr<PathChooser> chooser);
  PathChooser& chooser() { return *chooser_; }

  Plan plan(const RewrittenQuery& q) const;
  std::unique_ptr<QueryExecution> start(const RewrittenQuery& q);
  // Runs to completion; `resolver` answers round trips.
  EncryptedResult execute(const RewrittenQuery& q, ExecContext& ctx, const RoundTripResolver& resolver = {});

  Dispatcher& dispatcher() { return *dispatcher_; }
  AdaptiveSwitch* adaptive() const { return adaptive_; }

 private:
  friend class QueryExecutionImpl;

  Mode mode_;
  Enclave* enclave_;
  AdaptiveSwitch* adaptive_;
  EngineOptions opts_;
  UdfRegistry registry_;
  MetricsSink metrics_;
  std::shared_ptr<PathChooser> chooser_;
  std::unique_ptr<Dispatcher> dispatcher_;
  mutable std::shared_mutex tables_mu_;
  std::map<std::string, std::unique_ptr<EncryptedTable>> tables_;
};

}  // namespace hedb
