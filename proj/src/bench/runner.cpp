#include "hedb/bench/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "hedb/common/error.hpp"

namespace hedb {

namespace {

std::vector<PlainRow> sorted_rows(std::vector<PlainRow> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double rank = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (rank - static_cast<double>(lo));
}

std::uint64_t compares(const MetricsSink& m, Path p) {
  return m.count(UdfKind::kCompare, p) + m.count(UdfKind::kEqual, p) + m.count(UdfKind::kArithCompare, p);
}

struct OpRecord {
  double start;
  std::uint64_t tee_compares;
  std::uint64_t soft_compares;
};

}  // namespace

std::uint64_t storage_bytes(const Engine& engine) {
  std::uint64_t n = 0;
  for (const EncryptedTable* t : engine.tables()) n += t->field_bytes();
  return n;
}

RunReport run_workload(Mode mode, const WorkloadSpec& spec, const RunOptions& opts) {
  return run_workload(mode, spec, generate_dataset(spec), opts);
}

RunReport run_workload(Mode mode, const WorkloadSpec& spec, const Dataset& data, const RunOptions& opts) {
  spec.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.mode = mode;
  rep.spec = spec;

  Deployment dep(mode, opts.deployment);
  load_dataset(dep, data);
  std::unique_ptr<Deployment> ref;
  const bool check = opts.check && mode != Mode::kPlaintext;
  if (check) {
    DeploymentOptions plain;
    plain.engine = opts.deployment.engine;
    ref = std::make_unique<Deployment>(Mode::kPlaintext, plain);
    load_dataset(*ref, data);
  }
  rep.storage_bytes = storage_bytes(dep.engine());
  rep.plaintext_bytes = data.plaintext_bytes();
  if (dep.adaptive() && !opts.decision_log_path.empty()) dep.adaptive()->enable_log(true);

  const EnclaveConfig& ecfg = opts.deployment.enclave;
  std::unique_ptr<ContextManager> contexts;
  if (dep.enclave())
    contexts = std::make_unique<ContextManager>(dep.enclave()->memory(), ecfg.session_context_bytes,
                                                ecfg.context_idle_timeout_micros);

  WorkloadState state = initial_state(data, spec);
  std::vector<OperationStream> streams;
  std::vector<double> ready(spec.concurrency, 0.0);
  for (std::size_t s = 0; s < spec.concurrency; ++s) streams.emplace_back(spec, s);
  std::vector<double> cores(spec.cores, 0.0);
  double next_probe = ecfg.probe_interval_micros;
  std::vector<double> latencies;
  std::vector<OpRecord> records;
  double makespan = 0.0;
  const MetricsSink& metrics = dep.engine().metrics();

  while (true) {
    if (spec.op_count && rep.ops >= spec.op_count) break;
    const std::size_t s = static_cast<std::size_t>(std::min_element(ready.begin(), ready.end()) - ready.begin());
    if (!spec.op_count && ready[s] >= spec.duration_micros) break;
    auto core = std::min_element(cores.begin(), cores.end());
    const double start = std::max(ready[s], *core);

    while (dep.enclave() && next_probe <= start) {
      if (contexts) contexts->expire(next_probe);
      rep.probes.push_back(dep.enclave()->run_probe(next_probe));
      if (dep.adaptive()) {
        dep.adaptive()->record_probe(rep.probes.back());
        if (!rep.replacement_at && dep.adaptive()->regime() == Regime::kReplacement) rep.replacement_at = next_probe;
      }
      next_probe += ecfg.probe_interval_micros;
    }
    if (contexts) contexts->expire(start);

    Operation op = streams[s].next(state);
    ExecContext ctx{s, start, 0.0, contexts.get()};
    const std::uint64_t tee0 = compares(metrics, Path::kTee), soft0 = compares(metrics, Path::kSoftware);
    for (const std::string& sql : op.statements) {
      PlainResult got = dep.query(sql, ctx);
      ++rep.statements;
      if (!check) continue;
      ExecContext scratch;
      PlainResult want = ref->query(sql, scratch);
      ++rep.checked;
      if (got.affected != want.affected || sorted_rows(got.rows) != sorted_rows(want.rows)) {
        ++rep.mismatches;
        if (rep.mismatch_examples.size() < 5) rep.mismatch_examples.push_back(sql);
      }
    }
    records.push_back({start, compares(metrics, Path::kTee) - tee0, compares(metrics, Path::kSoftware) - soft0});
    const double end = ctx.now;
    latencies.push_back(end - ready[s]);
    *core = end;
    ready[s] = end;
    makespan = std::max(makespan, end);
    ++rep.ops;
    (op.write ? rep.writes : rep.reads) += 1;
  }

  // Final state of every table, after all writes.
  if (check) {
    for (const TableData& t : data.tables) {
      ExecContext a, b;
      const std::string sql = "SELECT * FROM " + t.name;
      ++rep.checked;
      if (sorted_rows(dep.query(sql, a).rows) != sorted_rows(ref->query(sql, b).rows)) {
        ++rep.mismatches;
        if (rep.mismatch_examples.size() < 5) rep.mismatch_examples.push_back(sql);
      }
    }
  }

  rep.virtual_micros = makespan;
  const double secs = makespan / 1e6;
  rep.qps = secs > 0 ? static_cast<double>(rep.ops) / secs : 0.0;
  rep.tps = secs > 0 ? static_cast<double>(rep.writes) / secs : 0.0;
  rep.latency_p50_ms = percentile(latencies, 0.5) / 1e3;
  rep.latency_p95_ms = percentile(latencies, 0.95) / 1e3;
  double sum = 0.0;
  for (double l : latencies) sum += l;
  rep.latency_mean_ms = latencies.empty() ? 0.0 : sum / static_cast<double>(latencies.size()) / 1e3;
  for (int k = 0; k < kUdfKindCount; ++k) {
    rep.shares[static_cast<std::size_t>(k)] = {metrics.count(static_cast<UdfKind>(k), Path::kSoftware),
                                               metrics.count(static_cast<UdfKind>(k), Path::kTee)};
  }
  rep.compare_share = {compares(metrics, Path::kSoftware), compares(metrics, Path::kTee)};
  if (dep.enclave()) rep.cache_hit_rate = dep.enclave()->cache_stats().hit_rate();
  if (rep.replacement_at) {
    const double until = *rep.replacement_at + static_cast<double>(ecfg.probe_window) * ecfg.probe_interval_micros;
    PathShare after;
    for (const OpRecord& r : records)
      if (r.start >= *rep.replacement_at && r.start < until) {
        after.tee += r.tee_compares;
        after.software += r.soft_compares;
      }
    if (after.tee + after.software) rep.tee_share_after_replacement = after.tee_share();
  }
  if (dep.adaptive() && !opts.decision_log_path.empty()) {
    std::ofstream out(opts.decision_log_path);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + opts.decision_log_path);
    dep.adaptive()->write_log_csv(out);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return rep;
}

namespace {

const char* kCsvMagic = "# hedb-bench-csv v1";
const char* kCsvHeader =
    "mode,workload,scale,read_ratio,eq_fraction,concurrency,cores,seed,ops,reads,writes,virtual_s,qps,tps,"
    "p50_ms,p95_ms,mean_ms,storage_bytes,plaintext_bytes,expansion,cache_hit_rate,tee_share_compare,"
    "tee_share_add,tee_share_mul,replacement_at_ms,tee_share_after_replacement,checked,mismatches";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<RunReport>& reports) {
  out << kCsvMagic << "\n" << kCsvHeader << "\n";
  out << std::setprecision(10);
  for (const RunReport& r : reports) {
    out << mode_name(r.mode) << ',' << workload_kind_name(r.spec.kind) << ',' << r.spec.scale << ','
        << r.spec.read_write_ratio << ',' << r.spec.eq_fraction << ',' << r.spec.concurrency << ',' << r.spec.cores << ','
        << r.spec.seed << ',' << r.ops << ',' << r.reads << ',' << r.writes << ',' << r.virtual_micros / 1e6 << ','
        << r.qps << ',' << r.tps << ',' << r.latency_p50_ms << ',' << r.latency_p95_ms << ',' << r.latency_mean_ms << ','
        << r.storage_bytes << ',' << r.plaintext_bytes << ',' << r.expansion() << ',' << r.cache_hit_rate << ','
        << r.compare_share.tee_share() << ',' << r.shares[static_cast<std::size_t>(UdfKind::kAdd)].tee_share() << ','
        << r.shares[static_cast<std::size_t>(UdfKind::kMul)].tee_share() << ',';
    if (r.replacement_at) out << *r.replacement_at / 1e3;
    out << ',';
    if (r.tee_share_after_replacement) out << *r.tee_share_after_replacement;
    out << ',' << r.checked << ',' << r.mismatches << "\n";
  }
}

CsvTable read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvMagic) throw Error(ErrorCode::kFormat, "not a hedb bench CSV (v1)");
  CsvTable t;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "bench CSV without header");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw Error(ErrorCode::kFormat, "bench CSV row width differs from header");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string tidy_number(const std::string& cell);

void render_summary(std::ostream& out, const CsvTable& raw) {
  CsvTable t = raw;
  for (auto& r : t.rows)
    for (auto& c : r) c = tidy_number(c);
  const std::vector<std::string> cols{"mode", "workload", "concurrency", "read_ratio", "qps", "tps", "p50_ms", "p95_ms",
                                      "expansion", "cache_hit_rate", "tee_share_compare", "mismatches"};
  std::vector<std::size_t> idx;
  for (const auto& c : cols) {
    auto it = std::find(t.header.begin(), t.header.end(), c);
    if (it == t.header.end()) throw Error(ErrorCode::kFormat, "bench CSV lacks column " + c);
    idx.push_back(static_cast<std::size_t>(it - t.header.begin()));
  }
  std::vector<std::size_t> width(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    width[i] = cols[i].size();
    for (const auto& r : t.rows) width[i] = std::max(width[i], r[idx[i]].size());
  }
  auto line = [&](auto get) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << get(i);
    out << "\n";
  };
  line([&](std::size_t i) { return cols[i]; });
  for (const auto& r : t.rows) line([&](std::size_t i) { return r[idx[i]]; });
}

std::string tidy_number(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || *end != '\0' || v == std::floor(v)) return cell;
  std::ostringstream o;
  o << std::fixed << std::setprecision(std::fabs(v) < 10 ? 3 : 1) << v;
  return o.str();
}

void write_probe_csv(std::ostream& out, const RunReport& report) {
  out << "timestamp_ms,duration_us,kind,data_size\n";
  for (const ProbeSample& p : report.probes)
    out << p.timestamp / 1e3 << ',' << p.duration << ',' << probe_kind_name(p.kind) << ',' << p.data_size << "\n";
}

std::vector<StorageRow> report_storage(const std::vector<double>& scales, const std::vector<Mode>& modes, std::uint64_t seed,
                                       WorkloadKind kind) {
  std::vector<StorageRow> out;
  for (double scale : scales) {
    WorkloadSpec spec;
    spec.kind = kind;
    spec.scale = scale;
    spec.seed = seed;
    const Dataset data = generate_dataset(spec);
    const std::uint64_t plain = data.plaintext_bytes();
    for (Mode m : modes) {
      Deployment d(m);
      load_dataset(d, data);
      StorageRow r{scale, m, plain, storage_bytes(d.engine()), 0.0};
      r.ratio = plain ? static_cast<double>(r.stored_bytes) / static_cast<double>(plain) : 0.0;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace hedb
