#include "hedb/adaptive/switch.hpp"

#include <algorithm>

#include "hedb/common/error.hpp"

namespace hedb {

const char* udf_kind_name(UdfKind k) {
  switch (k) {
    case UdfKind::kCompare: return "compare";
    case UdfKind::kEqual: return "equal";
    case UdfKind::kAdd: return "add";
    case UdfKind::kMul: return "mul";
    case UdfKind::kArithCompare: return "arith_compare";
    case UdfKind::kAggregate: return "aggregate";
  }
  return "?";
}

const char* path_name(Path p) { return p == Path::kTee ? "tee" : "software"; }

const char* regime_name(Regime r) { return r == Regime::kReplacement ? "replacement" : "normal"; }

double CostModelParams::tee_calc_of(UdfKind k, Scheme s) const {
  auto it = tee_calc.find({k, s});
  if (it != tee_calc.end()) return it->second;
  // Fall back to any entry for the kind.
  for (const auto& [key, v] : tee_calc)
    if (key.first == k) return v;
  return 0.0;
}

void CostModelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  for (double v : software_calc) require(v >= 0, "software costs must be non-negative");
  for (const auto& [k, v] : tee_calc) require(v >= 0, "enclave costs must be non-negative");
  require(c_fixed >= 0 && decide_unit >= 0 && baseline_probe >= 0, "costs must be non-negative");
  require(tau > 1.0, "tau must exceed 1");
  require(ema_alpha > 0 && ema_alpha <= 1, "ema_alpha must lie in (0, 1]");
}

void ProbeHistory::append(const ProbeSample& s) {
  std::lock_guard lock(mu_);
  if (!samples_.empty() && s.timestamp < samples_.back().timestamp)
    throw Error(ErrorCode::kInvalidArgument, "probe samples must arrive in time order");
  samples_.push_back(s);
  while (samples_.size() > window_) samples_.pop_front();
  ++total_;
}

std::vector<ProbeSample> ProbeHistory::snapshot() const {
  std::lock_guard lock(mu_);
  return {samples_.begin(), samples_.end()};
}

std::size_t ProbeHistory::total_samples() const {
  std::lock_guard lock(mu_);
  return total_;
}

double median_duration(const std::vector<ProbeSample>& window) {
  if (window.empty()) return 0.0;
  std::vector<double> d;
  d.reserve(window.size());
  for (const auto& s : window) d.push_back(s.duration);
  std::sort(d.begin(), d.end());
  std::size_t n = d.size();
  return n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

Regime classify_regime(const std::vector<ProbeSample>& window, const CostModelParams& params) {
  if (window.empty() || params.baseline_probe <= 0) return Regime::kNormal;
  return median_duration(window) > params.tau * params.baseline_probe ? Regime::kReplacement : Regime::kNormal;
}

double estimate_c_runtime(const std::vector<ProbeSample>& window, const CostModelParams& params, UdfKind kind,
                          Scheme result_scheme) {
  if (window.empty() || params.baseline_probe <= 0) return 0.0;
  double excess = std::max(0.0, median_duration(window) - params.baseline_probe);
  return excess * (params.c_fixed + params.tee_calc_of(kind, result_scheme)) / params.baseline_probe;
}

AdaptiveSwitch::AdaptiveSwitch(CostModelParams params, std::size_t probe_window)
    : params_(std::move(params)), history_(probe_window) {
  params_.validate();
}

void AdaptiveSwitch::record_probe(const ProbeSample& s) {
  std::lock_guard lock(mu_);
  if (params_.baseline_probe <= 0) params_.baseline_probe = s.duration;
  history_.append(s);
}

Regime AdaptiveSwitch::regime() const {
  std::lock_guard lock(mu_);
  return classify_regime(history_.snapshot(), params_);
}

double AdaptiveSwitch::c_runtime(UdfKind kind, Scheme result_scheme) const {
  std::lock_guard lock(mu_);
  return estimate_c_runtime(history_.snapshot(), params_, kind, result_scheme);
}

double AdaptiveSwitch::calc_of(UdfKind kind, Scheme s, Path p) const {
  return p == Path::kSoftware ? params_.software_calc[static_cast<std::size_t>(kind)] : params_.tee_calc_of(kind, s);
}

Decision AdaptiveSwitch::choose(UdfKind kind, Scheme result_scheme, double now, bool software_ok, bool tee_ok) {
  if (!software_ok && !tee_ok) throw Error(ErrorCode::kUnsupported, "no execution path registered for call");
  std::lock_guard lock(mu_);
  auto window = history_.snapshot();
  const auto k = static_cast<std::size_t>(kind);
  Decision d;
  d.ticket = next_ticket_++;
  d.timestamp = now;
  d.kind = kind;
  d.result_scheme = result_scheme;
  d.regime = classify_regime(window, params_);
  d.c_runtime = estimate_c_runtime(window, params_, kind, result_scheme);
  const double decide_soft = params_.decide_unit * static_cast<double>(in_flight_[k][0]);
  const double decide_tee = params_.decide_unit * static_cast<double>(in_flight_[k][1]);
  d.c_soft = calc_of(kind, result_scheme, Path::kSoftware) + decide_soft;
  d.c_tee = params_.c_fixed + calc_of(kind, result_scheme, Path::kTee) + d.c_runtime + decide_tee;
  if (!tee_ok) d.path = Path::kSoftware;
  else if (!software_ok) d.path = Path::kTee;
  else d.path = d.c_tee < d.c_soft ? Path::kTee : Path::kSoftware;
  ++in_flight_[k][static_cast<std::size_t>(d.path)];
  ++dispatched_;
  open_.emplace(d.ticket, d);
  if (logging_) log_.push_back(d);
  return d;
}

void AdaptiveSwitch::feedback(const Decision& d, double observed_calc) {
  std::lock_guard lock(mu_);
  auto it = open_.find(d.ticket);
  if (it == open_.end()) throw Error(ErrorCode::kNotFound, "feedback for a call that was never dispatched");
  open_.erase(it);
  --in_flight_[static_cast<std::size_t>(d.kind)][static_cast<std::size_t>(d.path)];
  ++completed_;
  const double a = params_.ema_alpha;
  if (d.path == Path::kSoftware) {
    double& c = params_.software_calc[static_cast<std::size_t>(d.kind)];
    c = (1 - a) * c + a * observed_calc;
  } else {
    double& c = params_.tee_calc[{d.kind, d.result_scheme}];
    c = (1 - a) * c + a * observed_calc;
  }
}

PathState AdaptiveSwitch::state() const {
  std::lock_guard lock(mu_);
  PathState s;
  s.in_flight = in_flight_;
  auto window = history_.snapshot();
  s.regime = classify_regime(window, params_);
  s.c_runtime_compare = estimate_c_runtime(window, params_, UdfKind::kCompare, Scheme::kPlain);
  return s;
}

CostModelParams AdaptiveSwitch::params() const {
  std::lock_guard lock(mu_);
  return params_;
}

std::uint64_t AdaptiveSwitch::dispatched() const {
  std::lock_guard lock(mu_);
  return dispatched_;
}

std::uint64_t AdaptiveSwitch::completed() const {
  std::lock_guard lock(mu_);
  return completed_;
}

void AdaptiveSwitch::enable_log(bool on) {
  std::lock_guard lock(mu_);
  logging_ = on;
}

std::vector<Decision> AdaptiveSwitch::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void AdaptiveSwitch::write_log_csv(std::ostream& out) const {
  std::lock_guard lock(mu_);
  out << "timestamp,kind,c_soft,c_tee,path,regime\n";
  for (const auto& d : log_)
    out << d.timestamp << ',' << udf_kind_name(d.kind) << ',' << d.c_soft << ',' << d.c_tee << ','
        << path_name(d.path) << ',' << regime_name(d.regime) << '\n';
}

}  // namespace hedb
