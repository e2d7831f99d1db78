#include "hedb/bench/deployment.hpp"

#include <filesystem>

namespace hedb {

Deployment::Deployment(Mode mode, DeploymentOptions opts, std::shared_ptr<const KeyStore> keys)
    : mode_(mode), opts_(std::move(opts)), keys_(std::move(keys)) {
  if (!keys_) keys_ = std::make_shared<KeyStore>(MasterKey::generate());
  client_ = std::make_unique<Client>(Catalog(mode), keys_);
  if (mode_uses_tee(mode)) {
    enclave_ = std::make_unique<Enclave>(opts_.enclave);
    enclave_->provision(keys_->master());
  }
  if (mode == Mode::kAdaptive) {
    adaptive_ = std::make_unique<AdaptiveSwitch>(cost_params_for(opts_.enclave, opts_.engine.software),
                                                 opts_.enclave.probe_window);
    probe(0.0);
  }
  engine_ = std::make_unique<Engine>(mode, enclave_.get(), adaptive_.get(), opts_.engine);
}

const TableSpec& Deployment::create_table(const std::string& name, std::vector<ColumnSpec> columns) {
  const TableSpec& t = client_->catalog().register_table(name, std::move(columns));
  std::string dir;
  if (!opts_.data_dir.empty()) {
    dir = (std::filesystem::path(opts_.data_dir) / t.anon_name).string();
    std::filesystem::create_directories(dir);
  }
  engine_->create_table(client_->catalog().layout(name), dir);
  return t;
}

void Deployment::load_row(const std::string& table, const std::vector<Value>& values) {
  engine_->insert(client_->catalog().table(table).anon_name, client_->encrypt_row(table, values));
}

EncryptedResult Deployment::execute(const RewrittenQuery& q, ExecContext& ctx) {
  return engine_->execute(q, ctx, [&](const RoundTripRequest& r) { return client_->resolve(q, r); });
}

PlainResult Deployment::query(std::string_view sql, ExecContext& ctx) {
  const RewrittenQuery q = client_->rewrite(sql);
  return client_->decrypt_results(execute(q, ctx));
}

PlainResult Deployment::query(std::string_view sql) {
  ExecContext ctx;
  return query(sql, ctx);
}

void Deployment::probe(double now) {
  if (!adaptive_ || !enclave_) return;
  adaptive_->record_probe(enclave_->run_probe(now));
}

}  // namespace hedb
