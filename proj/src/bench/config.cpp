#include "hedb/bench/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hedb/common/error.hpp"
#include "json.hpp"

namespace hedb {

namespace {

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;
using Getter = std::function<json()>;

template <typename T>
std::pair<Setter, Getter> bind(T& field) {
  return {[&field](const json& v) { field = v.get<T>(); }, [&field] { return json(field); }};
}

struct Binding {
  std::map<std::string, std::pair<Setter, Getter>> fields;
};

// Field tables, shared by parse and dump.
Binding workload_fields(WorkloadSpec& w) {
  Binding b;
  b.fields["kind"] = {[&w](const json& v) { w.kind = workload_kind_from_name(v.get<std::string>()); },
                      [&w] { return json(workload_kind_name(w.kind)); }};
  b.fields["scale"] = bind(w.scale);
  b.fields["read_write_ratio"] = bind(w.read_write_ratio);
  b.fields["eq_fraction"] = bind(w.eq_fraction);
  b.fields["concurrency"] = bind(w.concurrency);
  b.fields["duration_micros"] = bind(w.duration_micros);
  b.fields["op_count"] = bind(w.op_count);
  b.fields["seed"] = bind(w.seed);
  b.fields["cores"] = bind(w.cores);
  return b;
}

Binding cost_fields(CostTable& c) {
  Binding b;
  b.fields["rnd_decrypt"] = bind(c.rnd_decrypt);
  b.fields["cache_hit"] = bind(c.cache_hit);
  b.fields["compute"] = bind(c.compute);
  b.fields["memory_copy"] = bind(c.memory_copy);
  b.fields["encrypt_ahe"] = bind(c.encrypt_ahe);
  b.fields["encrypt_mhe"] = bind(c.encrypt_mhe);
  b.fields["encrypt_ore"] = bind(c.encrypt_ore);
  b.fields["encrypt_det"] = bind(c.encrypt_det);
  b.fields["encrypt_rnd"] = bind(c.encrypt_rnd);
  b.fields["probe_sort_unit"] = bind(c.probe_sort_unit);
  b.fields["probe_search_unit"] = bind(c.probe_search_unit);
  return b;
}

Binding enclave_fields(EnclaveConfig& e) {
  Binding b;
  b.fields["epc_budget_bytes"] = bind(e.epc_budget_bytes);
  b.fields["ecall_fixed_cost_micros"] = bind(e.ecall_fixed_cost_micros);
  b.fields["page_fault_penalty_factor"] = bind(e.page_fault_penalty_factor);
  b.fields["paging_slope"] = bind(e.paging_slope);
  b.fields["cache_enabled"] = bind(e.cache_enabled);
  b.fields["cache_capacity_entries"] = bind(e.cache_capacity_entries);
  b.fields["cache_entry_bytes"] = bind(e.cache_entry_bytes);
  b.fields["pool_batch_size"] = bind(e.pool_batch_size);
  b.fields["pool_window_micros"] = bind(e.pool_window_micros);
  b.fields["pool_capacity"] = bind(e.pool_capacity);
  b.fields["worker_count"] = bind(e.worker_count);
  b.fields["probe_kind"] = {[&e](const json& v) { e.probe_kind = probe_kind_from_name(v.get<std::string>()); },
                            [&e] { return json(probe_kind_name(e.probe_kind)); }};
  b.fields["probe_data_size"] = bind(e.probe_data_size);
  b.fields["probe_interval_micros"] = bind(e.probe_interval_micros);
  b.fields["probe_window"] = bind(e.probe_window);
  b.fields["session_context_bytes"] = bind(e.session_context_bytes);
  b.fields["context_idle_timeout_micros"] = bind(e.context_idle_timeout_micros);
  b.fields["sealing_identity"] = bind(e.sealing_identity);
  return b;
}

Binding software_fields(SoftwareCosts& s) {
  Binding b;
  b.fields["plain_op"] = bind(s.plain_op);
  b.fields["det_equal"] = bind(s.det_equal);
  b.fields["ahe_add"] = bind(s.ahe_add);
  b.fields["mhe_mul"] = bind(s.mhe_mul);
  b.fields["ore_compare"] = bind(s.ore_compare);
  return b;
}

void apply(const json& obj, Binding b, const std::string& where, const std::map<std::string, std::function<void(const json&)>>& nested = {}) {
  if (!obj.is_object()) throw Error(ErrorCode::kFormat, "config section '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (auto n = nested.find(key); n != nested.end()) {
      n->second(value);
      continue;
    }
    auto it = b.fields.find(key);
    if (it == b.fields.end()) throw Error(ErrorCode::kFormat, "unknown config key '" + where + "." + key + "'");
    try {
      it->second.first(value);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, "bad value for '" + where + "." + key + "': " + e.what());
    }
  }
}

json dump(const Binding& b) {
  json out = json::object();
  for (const auto& [key, fg] : b.fields) out[key] = fg.second();
  return out;
}

}  // namespace

BenchConfig parse_bench_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("config is not valid JSON: ") + e.what());
  }
  BenchConfig cfg;
  if (!root.is_object()) throw Error(ErrorCode::kFormat, "config root must be an object");
  for (const auto& [key, value] : root.items()) {
    if (key == "workload") apply(value, workload_fields(cfg.workload), key);
    else if (key == "enclave")
      apply(value, enclave_fields(cfg.enclave), key,
            {{"costs", [&](const json& v) { apply(v, cost_fields(cfg.enclave.costs), "enclave.costs"); }}});
    else if (key == "software") apply(value, software_fields(cfg.software), key);
    else throw Error(ErrorCode::kFormat, "unknown config section '" + key + "'");
  }
  cfg.workload.validate();
  cfg.enclave.validate();
  return cfg;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bench_config(ss.str());
}

std::string bench_config_to_json(const BenchConfig& cfg) {
  BenchConfig copy = cfg;
  json root;
  root["workload"] = dump(workload_fields(copy.workload));
  root["enclave"] = dump(enclave_fields(copy.enclave));
  root["enclave"]["costs"] = dump(cost_fields(copy.enclave.costs));
  root["software"] = dump(software_fields(copy.software));
  return root.dump(2);
}

}  // namespace hedb
