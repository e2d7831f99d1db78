#pragma once

// One client plus one server wired together for a given mode: catalog and
// keys on the client side, engine (and enclave / switch when needed) on the
// server side.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hedb/adaptive/switch.hpp"
#include "hedb/enclave/enclave.hpp"
#include "hedb/engine/engine.hpp"
#include "hedb/schema/catalog.hpp"
#include "hedb/schema/keystore.hpp"
#include "hedb/schema/rewriter.hpp"

namespace hedb {

struct DeploymentOptions {
  EnclaveConfig enclave = EnclaveConfig::desk();
  EngineOptions engine;
  std::string data_dir;  // empty keeps tables in memory
};

class Deployment {
 public:
  explicit Deployment(Mode mode, DeploymentOptions opts = {}, std::shared_ptr<const KeyStore> keys = nullptr);

  Mode mode() const { return mode_; }
  Client& client() { return *client_; }
  Engine& engine() { return *engine_; }
  Enclave* enclave() { return enclave_.get(); }
  AdaptiveSwitch* adaptive() { return adaptive_.get(); }
  const std::shared_ptr<const KeyStore>& keys() const { return keys_; }

  const TableSpec& create_table(const std::string& name, std::vector<ColumnSpec> columns);
  // Direct encrypted load, bypassing the SQL path.
  void load_row(const std::string& table, const std::vector<Value>& values);

  PlainResult query(std::string_view sql, ExecContext& ctx);
  PlainResult query(std::string_view sql);
  EncryptedResult execute(const RewrittenQuery& q, ExecContext& ctx);

  // Runs a probe at virtual time `now` and feeds it to the switch (adaptive
  // mode only).
  void probe(double now);

 private:
  Mode mode_;
  DeploymentOptions opts_;
  std::shared_ptr<const KeyStore> keys_;
  std::unique_ptr<Client> client_;
  std::unique_ptr<Enclave> enclave_;
  std::unique_ptr<AdaptiveSwitch> adaptive_;
  std::unique_ptr<Engine> engine_;
};

}  // namespace hedb
