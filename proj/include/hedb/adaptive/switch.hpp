#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <ostream>
#include <vector>

#include "hedb/common/udf.hpp"
#include "hedb/crypto/keys.hpp"
#include "hedb/enclave/enclave.hpp"

namespace hedb {

enum class Regime : std::uint8_t { kNormal, kReplacement };
const char* regime_name(Regime r);

struct CostModelParams {
  std::array<double, kUdfKindCount> software_calc{};
  // Enclave-side calculation cost per (kind, result scheme).
  std::map<std::pair<UdfKind, Scheme>, double> tee_calc;
  double c_fixed = 40.0;
  double decide_unit = 0.5;
  double baseline_probe = 0.0;  // 0 until the first sample arrives
  double tau = 1.5;
  double ema_alpha = 0.2;

  double tee_calc_of(UdfKind k, Scheme s) const;
  void validate() const;
};

// Windowed probe history. The first sample recorded in an empty enclave is
// the baseline unless one was configured.
class ProbeHistory {
 public:
  explicit ProbeHistory(std::size_t window = 5) : window_(window) {}

  void append(const ProbeSample& s);
  std::vector<ProbeSample> snapshot() const;
  std::size_t window() const { return window_; }
  std::size_t total_samples() const;

 private:
  std::size_t window_;
  mutable std::mutex mu_;
  std::deque<ProbeSample> samples_;
  std::size_t total_ = 0;
};

double median_duration(const std::vector<ProbeSample>& window);

// Replacement iff the windowed median exceeds tau * baseline. Empty history
// (or no baseline yet) is Normal.
Regime classify_regime(const std::vector<ProbeSample>& window, const CostModelParams& params);

// max(0, median - baseline) scaled by the op's enclave cost (entry plus
// calculation) relative to the probe's baseline duration.
double estimate_c_runtime(const std::vector<ProbeSample>& window, const CostModelParams& params, UdfKind kind,
                          Scheme result_scheme);

struct Decision {
  std::uint64_t ticket = 0;
  double timestamp = 0.0;
  UdfKind kind = UdfKind::kCompare;
  Scheme result_scheme = Scheme::kPlain;
  Path path = Path::kSoftware;
  double c_soft = 0.0;
  double c_tee = 0.0;
  double c_runtime = 0.0;
  Regime regime = Regime::kNormal;
};

struct PathState {
  std::array<std::array<std::int64_t, 2>, kUdfKindCount> in_flight{};
  double c_runtime_compare = 0.0;
  Regime regime = Regime::kNormal;
};

class AdaptiveSwitch {
 public:
  explicit AdaptiveSwitch(CostModelParams params, std::size_t probe_window = 5);

  void record_probe(const ProbeSample& s);
  Regime regime() const;
  double c_runtime(UdfKind kind, Scheme result_scheme) const;

  // Picks the cheaper path; ties go to software. A path that is not
  // available for this call is never chosen.
  Decision choose(UdfKind kind, Scheme result_scheme, double now, bool software_ok = true, bool tee_ok = true);
  // Completes a dispatched call. `observed_calc` is the calculation part of
  // the call (entry cost and paging removed), fed into the EMA.
  void feedback(const Decision& d, double observed_calc);

  PathState state() const;
  CostModelParams params() const;
  std::uint64_t dispatched() const;
  std::uint64_t completed() const;

  void enable_log(bool on);
  std::vector<Decision> log() const;
  // CSV: timestamp,kind,c_soft,c_tee,path,regime
  void write_log_csv(std::ostream& out) const;

 private:
  double calc_of(UdfKind kind, Scheme s, Path p) const;  // caller holds mu_

  mutable std::mutex mu_;
  CostModelParams params_;
  ProbeHistory history_;
  std::array<std::array<std::int64_t, 2>, kUdfKindCount> in_flight_{};
  std::map<std::uint64_t, Decision> open_;
  std::uint64_t next_ticket_ = 1;
  std::uint64_t dispatched_ = 0;
  std::uint64_t completed_ = 0;
  bool logging_ = false;
  std::vector<Decision> log_;
};

}  // namespace hedb
