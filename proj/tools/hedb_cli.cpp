// hedb_cli: dataset generation, benchmark runs, report rendering and an
// attestation demo. Exit status is 0 only when every correctness gate held.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "hedb/bench/config.hpp"
#include "hedb/bench/runner.hpp"
#include "hedb/common/error.hpp"
#include "hedb/enclave/attestation.hpp"

namespace fs = std::filesystem;
using namespace hedb;

namespace {

std::vector<Mode> parse_modes(const std::vector<std::string>& names) {
  std::vector<Mode> out;
  for (const std::string& n : names) {
    if (n == "all") {
      out.assign(std::begin(kAllModes), std::end(kAllModes));
      continue;
    }
    out.push_back(mode_from_name(n));
  }
  return out;
}

// Config file from --config or the environment, read before flags so flags
// override it.
BenchConfig initial_config(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  return path.empty() ? BenchConfig{} : load_bench_config(path);
}

void add_workload_flags(CLI::App* app, WorkloadSpec& w, std::string& kind) {
  app->add_option("--workload", kind, "tpcc_like or synthetic")->check(CLI::IsMember({"tpcc_like", "synthetic"}));
  app->add_option("--scale", w.scale, "dataset scale (1.0 = 3x10^5 order_line rows)");
  app->add_option("--read-ratio", w.read_write_ratio, "fraction of read operations")->check(CLI::Range(0.0, 1.0));
  app->add_option("--eq-fraction", w.eq_fraction, "equality share among reads")->check(CLI::Range(0.0, 1.0));
  app->add_option("--duration-ms", w.duration_micros, "virtual run length in ms")->transform([](std::string s) {
    return std::to_string(std::stod(s) * 1e3);
  });
  app->add_option("--ops", w.op_count, "operation count (overrides duration)");
  app->add_option("--seed", w.seed, "dataset and workload seed");
  app->add_option("--cores", w.cores, "server-side parallelism");
}

void add_enclave_flags(CLI::App* app, EnclaveConfig& e, SoftwareCosts& s, std::string& probe_kind) {
  app->add_option("--epc-budget-bytes", e.epc_budget_bytes, "secure memory budget");
  app->add_option("--ecall-cost", e.ecall_fixed_cost_micros, "fixed enclave entry cost (us)");
  app->add_option("--page-fault-factor", e.page_fault_penalty_factor, "cap on the paging multiplier");
  app->add_option("--paging-slope", e.paging_slope, "paging multiplier slope");
  app->add_option("--cache-enabled", e.cache_enabled, "enclave operand cache on/off");
  app->add_option("--cache-entries", e.cache_capacity_entries, "operand cache capacity");
  app->add_option("--cache-entry-bytes", e.cache_entry_bytes, "secure memory per cache slot");
  app->add_option("--pool-batch", e.pool_batch_size, "task pool batch size");
  app->add_option("--pool-window-us", e.pool_window_micros, "task pool flush window (wall clock)");
  app->add_option("--pool-capacity", e.pool_capacity, "task pool intake bound (0 = 4 x batch)");
  app->add_option("--workers", e.worker_count, "task pool workers");
  app->add_option("--probe-kind", probe_kind, "binary_search, quick_sort or mixed");
  app->add_option("--probe-size", e.probe_data_size, "probe element count");
  app->add_option("--probe-interval-us", e.probe_interval_micros, "virtual time between probes");
  app->add_option("--probe-window", e.probe_window, "probe samples per regime decision");
  app->add_option("--context-bytes", e.session_context_bytes, "secure memory per session context");
  app->add_option("--context-idle-us", e.context_idle_timeout_micros, "idle time before a context is released");
  app->add_option("--sealing-identity", e.sealing_identity, "enclave identity used for sealing");
  CostTable& c = e.costs;
  app->add_option("--cost-rnd-decrypt", c.rnd_decrypt);
  app->add_option("--cost-cache-hit", c.cache_hit);
  app->add_option("--cost-compute", c.compute);
  app->add_option("--cost-memory-copy", c.memory_copy);
  app->add_option("--cost-encrypt-ahe", c.encrypt_ahe);
  app->add_option("--cost-encrypt-mhe", c.encrypt_mhe);
  app->add_option("--cost-encrypt-ore", c.encrypt_ore);
  app->add_option("--cost-encrypt-det", c.encrypt_det);
  app->add_option("--cost-encrypt-rnd", c.encrypt_rnd);
  app->add_option("--cost-probe-sort", c.probe_sort_unit);
  app->add_option("--cost-probe-search", c.probe_search_unit);
  app->add_option("--sw-ore-compare", s.ore_compare, "software ORE comparison cost (us)");
  app->add_option("--sw-det-equal", s.det_equal);
  app->add_option("--sw-ahe-add", s.ahe_add);
  app->add_option("--sw-mhe-mul", s.mhe_mul);
  app->add_option("--sw-plain-op", s.plain_op);
}

int cmd_gen(const BenchConfig& cfg, const std::vector<Mode>& modes, const std::string& out, const std::string& passphrase) {
  const Dataset data = generate_dataset(cfg.workload);
  fs::create_directories(out);
  std::ofstream(fs::path(out) / "dataset.csv") << data.dump();
  std::ofstream(fs::path(out) / "config.json") << bench_config_to_json(cfg) << "\n";
  std::cout << "dataset: " << data.tables.size() << " tables, " << data.column_count() << " columns, "
            << data.plaintext_bytes() << " plaintext bytes\n";
  for (Mode m : modes) {
    const fs::path dir = fs::path(out) / mode_name(m);
    fs::remove_all(dir);
    fs::create_directories(dir / "tables");
    DeploymentOptions opts;
    opts.enclave = cfg.enclave;
    opts.engine.software = cfg.software;
    opts.data_dir = (dir / "tables").string();
    Deployment d(m, opts);
    load_dataset(d, data);
    d.client().catalog().save((dir / "catalog.txt").string());
    d.keys()->save((dir / "keys.bin").string(), passphrase);
    std::cout << mode_name(m) << ": " << storage_bytes(d.engine()) << " stored bytes in " << dir.string() << "\n";
  }
  return 0;
}

int cmd_run(const BenchConfig& cfg, const std::vector<Mode>& modes, const std::vector<std::size_t>& concurrency,
            const std::string& csv, const std::string& probes, const std::string& decisions, bool check) {
  const Dataset data = generate_dataset(cfg.workload);
  std::vector<RunReport> reports;
  bool ok = true;
  for (std::size_t c : concurrency) {
    for (Mode m : modes) {
      WorkloadSpec spec = cfg.workload;
      spec.concurrency = c;
      RunOptions opts;
      opts.deployment.enclave = cfg.enclave;
      opts.deployment.engine.software = cfg.software;
      opts.check = check;
      if (!decisions.empty() && m == Mode::kAdaptive)
        opts.decision_log_path = decisions + "." + std::to_string(c) + ".csv";
      RunReport r = run_workload(m, spec, data, opts);
      if (r.mismatches) {
        ok = false;
        std::cerr << mode_name(m) << " c=" << c << ": " << r.mismatches << " result mismatches, first: "
                  << r.mismatch_examples.front() << "\n";
      }
      if (!probes.empty() && !r.probes.empty()) {
        std::ofstream out(probes + "." + mode_name(m) + "." + std::to_string(c) + ".csv");
        write_probe_csv(out, r);
      }
      reports.push_back(std::move(r));
    }
  }
  std::stringstream table;
  write_report_csv(table, reports);
  if (!csv.empty()) std::ofstream(csv) << table.str();
  render_summary(std::cout, read_report_csv(table));
  return ok ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& files, const std::vector<double>& storage_scales, std::uint64_t seed) {
  for (const std::string& f : files) {
    std::ifstream in(f);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + f);
    std::cout << "== " << f << "\n";
    render_summary(std::cout, read_report_csv(in));
  }
  if (!storage_scales.empty()) {
    std::cout << "scale  mode             plaintext_bytes  stored_bytes  expansion\n";
    bool ordered = true;
    auto rows = report_storage(storage_scales, {Mode::kPlaintext, Mode::kSoftware, Mode::kStaticTee, Mode::kAdaptive}, seed);
    for (const StorageRow& r : rows)
      std::cout << std::left << std::setw(7) << r.scale << std::setw(17) << mode_name(r.mode) << std::setw(17)
                << r.plaintext_bytes << std::setw(14) << r.stored_bytes << r.ratio << "\n";
    for (std::size_t i = 0; i + 3 < rows.size(); i += 4) ordered = ordered && rows[i + 1].ratio > rows[i + 2].ratio && rows[i + 2].ratio > 1.0;
    std::cout << (ordered ? "software > static_tee > 1 at every scale\n" : "storage ordering violated\n");
    if (!ordered) return 1;
  }
  return 0;
}

int cmd_attest(std::size_t sessions, bool corrupt, std::uint64_t seed) {
  const MasterKey master = MasterKey::generate();
  AttestationEnv env;
  std::mt19937_64 rng(seed);
  std::size_t attested = 0, provisioned = 0;
  for (std::size_t i = 0; i < sessions; ++i) {
    Enclave enclave;
    DuplexChannel::Tamper tamper;
    if (corrupt) {
      const std::size_t target = rng() % 7;
      const std::uint64_t pick = rng();
      tamper = [=](std::size_t seq, Bytes& f) {
        if (seq == target && !f.empty()) f[pick % f.size()] ^= static_cast<std::uint8_t>(1u << ((pick >> 32) % 8));
      };
    }
    AttestationOutcome o = attest_and_provision(master, enclave, env, static_cast<std::uint32_t>(1 + i), tamper);
    attested += o.ok && o.client_keys && o.enclave_keys && o.client_keys->sk == o.enclave_keys->sk;
    provisioned += enclave.has_keys();
    if (!o.ok && i < 3) std::cout << "session " << i << " failed closed: " << o.failure << "\n";
  }
  std::cout << sessions << " sessions, " << attested << " agreed on SK, " << provisioned << " provisioned\n";
  if (corrupt) return attested == 0 && provisioned == 0 ? 0 : 1;
  return attested == sessions && provisioned == sessions ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  BenchConfig cfg;
  try {
    cfg = initial_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"hedb: encrypted query engine benchmark harness"};
  app.require_subcommand(1);
  std::string config_path, kind = workload_kind_name(cfg.workload.kind), probe_kind = probe_kind_name(cfg.enclave.probe_kind);
  app.add_option("--config", config_path, std::string("JSON config file (default: $") + kConfigEnv + ")");

  std::vector<std::string> mode_names{"software"};
  std::string out_dir, passphrase = "hedb";
  auto* gen = app.add_subcommand("gen", "generate a seeded dataset and materialize it per mode");
  add_workload_flags(gen, cfg.workload, kind);
  add_enclave_flags(gen, cfg.enclave, cfg.software, probe_kind);
  gen->add_option("--mode", mode_names, "modes to materialize (or 'all')");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--passphrase", passphrase, "keystore passphrase");

  std::vector<std::string> run_modes{"all"};
  std::vector<std::size_t> concurrency{cfg.workload.concurrency};
  std::string csv, probes, decisions;
  bool no_check = false;
  auto* run = app.add_subcommand("run", "run a workload in one or more modes");
  add_workload_flags(run, cfg.workload, kind);
  add_enclave_flags(run, cfg.enclave, cfg.software, probe_kind);
  run->add_option("--mode", run_modes, "modes to run (or 'all')");
  run->add_option("--concurrency", concurrency, "worker sessions; several values sweep");
  run->add_option("--csv", csv, "write the report CSV here");
  run->add_option("--probes-csv", probes, "prefix for probe trace CSVs");
  run->add_option("--decisions-csv", decisions, "prefix for adaptive decision logs");
  run->add_flag("--no-check", no_check, "skip the plaintext comparison");

  std::vector<std::string> files;
  std::vector<double> storage_scales;
  std::uint64_t report_seed = 1;
  auto* report = app.add_subcommand("report", "render report CSVs and storage expansion");
  report->add_option("files", files, "report CSVs");
  report->add_option("--storage-scales", storage_scales, "scales for the storage expansion table");
  report->add_option("--seed", report_seed, "dataset seed for the storage table");

  std::size_t sessions = 100;
  bool corrupt = false;
  std::uint64_t attest_seed = 1;
  auto* attest = app.add_subcommand("attest-demo", "run attestation sessions, optionally with corrupted messages");
  attest->add_option("--sessions", sessions);
  attest->add_flag("--corrupt", corrupt, "flip one random bit of one message per session");
  attest->add_option("--seed", attest_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    cfg.workload.kind = workload_kind_from_name(kind);
    cfg.enclave.probe_kind = probe_kind_from_name(probe_kind);
    cfg.workload.validate();
    cfg.enclave.validate();
    if (*gen) return cmd_gen(cfg, parse_modes(mode_names), out_dir, passphrase);
    if (*run) return cmd_run(cfg, parse_modes(run_modes), concurrency, csv, probes, decisions, !no_check);
    if (*report) return cmd_report(files, storage_scales, report_seed);
    if (*attest) return cmd_attest(sessions, corrupt, attest_seed);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  }
  return 0;
}
