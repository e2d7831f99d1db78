#include "hedb/engine/metrics.hpp"

#include <algorithm>

#include "hedb/common/error.hpp"

namespace hedb {

MetricsSink::MetricsSink(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidArgument, "metrics capacity must be positive");
  ring_.reserve(std::min<std::size_t>(capacity, 4096));
}

void MetricsSink::record(const UdfMetric& m) {
  std::lock_guard lock(mu_);
  const auto k = static_cast<std::size_t>(m.kind), p = static_cast<std::size_t>(m.path);
  ++counts_[k][p];
  micros_[k][p] += m.micros;
  ++total_;
  if (ring_.size() < capacity_) {
    ring_.push_back(m);
  } else {
    ring_[head_] = m;
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<UdfMetric> MetricsSink::snapshot() const {
  std::lock_guard lock(mu_);
  std::vector<UdfMetric> out;
  out.reserve(ring_.size());
  for (std::size_t i = 0; i < ring_.size(); ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
  return out;
}

std::uint64_t MetricsSink::count(UdfKind kind, Path path) const {
  std::lock_guard lock(mu_);
  return counts_[static_cast<std::size_t>(kind)][static_cast<std::size_t>(path)];
}

double MetricsSink::micros(UdfKind kind, Path path) const {
  std::lock_guard lock(mu_);
  return micros_[static_cast<std::size_t>(kind)][static_cast<std::size_t>(path)];
}

std::uint64_t MetricsSink::total() const {
  std::lock_guard lock(mu_);
  return total_;
}

void MetricsSink::clear() {
  std::lock_guard lock(mu_);
  ring_.clear();
  head_ = 0;
  counts_ = {};
  micros_ = {};
  total_ = 0;
}

void MetricsSink::write_csv(std::ostream& out) const {
  out << "timestamp,op,path,micros\n";
  for (const UdfMetric& m : snapshot())
    out << m.timestamp << ',' << udf_kind_name(m.kind) << ',' << path_name(m.path) << ',' << m.micros << '\n';
}

}  // namespace hedb
